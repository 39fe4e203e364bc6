#ifndef EITBOX_GEOMETRY_HPP
#define EITBOX_GEOMETRY_HPP

#include <optional>
#include <vector>

#include "eitbox/common.hpp"

namespace eitbox {

/// A-priori constants the estimates are phrased in. `r0` is the geometric
/// scale: flat portions have side >= r0/3, the slab is at least r0 deep,
/// Green poles keep distance r0/2 from the conductor boundary.
struct AprioriData {
    int n_layers = 1;        // N: number of nested interior boxes
    double r0 = 0.25;
    double M0 = 1.0;
    double lambda = 10.0;    // ellipticity constant, > 1
    double gamma_bar = 10.0; // scalar bound, > 1
    double A_bar = 4.0;      // Lipschitz bound on the anisotropy
    static constexpr int dimension = 3;

    void validate() const;
};

struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Ones();

    Vec3 center() const { return 0.5 * (lo + hi); }
    Vec3 extent() const { return hi - lo; }
    double volume() const { return extent().prod(); }
    bool contains(const Vec3& x, double tol = 0.0) const {
        return (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
    }
    bool strictly_inside(const Vec3& x, double tol = 0.0) const {
        return (x.array() > lo.array() + tol).all() && (x.array() < hi.array() - tol).all();
    }
    /// Distance from x to the box surface. Zero on the surface, positive
    /// elsewhere (both inside and outside).
    double surface_distance(const Vec3& x) const;
};

enum class Face : int { XMinus = 0, XPlus, YMinus, YPlus, ZMinus, ZPlus };

int face_axis(Face f);
int face_sign(Face f);  // -1 for *Minus, +1 for *Plus
Vec3 face_normal(Face f);
/// The two in-plane axes of a face, in increasing axis order.
std::pair<int, int> face_tangent_axes(Face f);
Face parse_face(const std::string& name);  // "x-", "x+", ..., "z+"
std::string face_name(Face f);

/// Planar rectangle on one face of a nested box. `owner` is the index of the
/// box whose boundary carries it (0 = the outer conductor boundary).
struct FlatPortion {
    int owner = 0;
    Face face = Face::ZMinus;
    Eigen::Vector2d rect_lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d rect_hi = Eigen::Vector2d::Ones();
    double plane = 0.0;  // face plane coordinate along face_axis, filled at build

    Vec3 normal() const { return face_normal(face); }
    Vec3 center() const;
    Vec3 to_point(const Eigen::Vector2d& uv) const;
    bool contains(const Vec3& x, double tol, bool strict_in_plane) const;
};

/// Nested axis-aligned boxes Omega_0 .. Omega_N, outermost first, with one
/// flat portion on the outer boundary and one per interior interface.
/// Layer indices: D_m = Omega_{m-1} \ closure(Omega_m) for m = 1..N and
/// D_{N+1} = Omega_N; index 0 is reserved for the outer slab.
struct LayeredDomain {
    std::vector<Box> boxes;
    std::vector<FlatPortion> portions;
    double grid_pitch = 1.0 / 16.0;

    int n_layers() const { return static_cast<int>(boxes.size()); }  // N+1
    const Box& outer() const { return boxes.front(); }
    /// Index of the first portion with the given owner; -1 if absent.
    int portion_for(int owner) const;
    /// Convex box decomposition of layer m (m = 1..N+1): up to 26 boxes
    /// for a shell, a single box for the core.
    std::vector<Box> layer_pieces(int m) const;
    /// Exact distance to the conductor boundary (the outer box surface).
    double boundary_distance(const Vec3& x) const { return outer().surface_distance(x); }
};

LayeredDomain build_layered_domain(std::vector<Box> boxes, std::vector<FlatPortion> portions,
                                   double pitch, double r0);

enum class SlabFootprint { FullFace, Portion };

/// Conductor plus the outer slab D_0 glued along the face carrying the
/// measurement portion. With SlabFootprint::Portion the slab cross-section
/// is the portion rectangle itself, so fields vanishing on the augmented
/// boundary have traces supported exactly in the portion.
struct AugmentedDomain {
    LayeredDomain base;
    Box slab;
    SlabFootprint footprint = SlabFootprint::FullFace;
    int sigma_index = 0;  // index into base.portions of the attach portion
    double r0 = 0.25;
    Box bounding;  // hull of the conductor and the slab

    const FlatPortion& sigma() const { return base.portions[sigma_index]; }
    double pole_clearance() const { return 0.5 * r0; }
    bool in_slab(const Vec3& x, double tol = 0.0) const { return slab.contains(x, tol); }
    bool in_pole_region(const Vec3& x) const;
    /// Slab cells (at the domain pitch) whose centers lie in the pole region.
    std::vector<Vec3> pole_region_cells() const;
};

AugmentedDomain augment(const LayeredDomain& domain, double depth, double r0,
                        SlabFootprint footprint = SlabFootprint::FullFace);

/// Layer index of x: 0 for the slab, m for D_m, nullopt when x lies on an
/// interface plane. Throws OutsideDomain.
std::optional<int> layer_index(const AugmentedDomain& dom, const Vec3& x);
std::optional<int> layer_index(const LayeredDomain& dom, const Vec3& x);

/// P + r * nu where nu is the outward normal of the portion's owner boundary.
/// Signed r: positive offsets leave the owner box, negative ones enter it.
Vec3 probe_point(const AugmentedDomain& dom, int portion_index, double offset,
                 std::optional<Vec3> base = std::nullopt);

}  // namespace eitbox

#endif
