#include "eitbox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

namespace eitbox {

namespace {

bool aligned(double v, double pitch) {
    const double q = v / pitch;
    return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, std::abs(q));
}

}  // namespace

void AprioriData::validate() const {
    if (n_layers < 1) throw ValidationError("a-priori data: n_layers must be >= 1");
    if (!(r0 > 0.0)) throw ValidationError("a-priori data: r0 must be positive");
    if (!(lambda > 1.0)) throw ValidationError("a-priori data: lambda must exceed 1");
    if (!(gamma_bar > 1.0)) throw ValidationError("a-priori data: gamma_bar must exceed 1");
    if (!(A_bar > 0.0)) throw ValidationError("a-priori data: A_bar must be positive");
    if (!(M0 > 0.0)) throw ValidationError("a-priori data: M0 must be positive");
}

double Box::surface_distance(const Vec3& x) const {
    if (strictly_inside(x)) {
        double d = hi(0) - lo(0);
        for (int a = 0; a < 3; ++a) d = std::min({d, x(a) - lo(a), hi(a) - x(a)});
        return d;
    }
    Vec3 delta = Vec3::Zero();
    for (int a = 0; a < 3; ++a) {
        if (x(a) < lo(a)) delta(a) = lo(a) - x(a);
        else if (x(a) > hi(a)) delta(a) = x(a) - hi(a);
    }
    return delta.norm();
}

int face_axis(Face f) { return static_cast<int>(f) / 2; }
int face_sign(Face f) { return (static_cast<int>(f) % 2 == 0) ? -1 : +1; }

Vec3 face_normal(Face f) {
    Vec3 n = Vec3::Zero();
    n(face_axis(f)) = face_sign(f);
    return n;
}

std::pair<int, int> face_tangent_axes(Face f) {
    switch (face_axis(f)) {
        case 0: return {1, 2};
        case 1: return {0, 2};
        default: return {0, 1};
    }
}

Face parse_face(const std::string& name) {
    if (name == "x-") return Face::XMinus;
    if (name == "x+") return Face::XPlus;
    if (name == "y-") return Face::YMinus;
    if (name == "y+") return Face::YPlus;
    if (name == "z-") return Face::ZMinus;
    if (name == "z+") return Face::ZPlus;
    throw ParseError("unknown face name: " + name);
}

std::string face_name(Face f) {
    static const char* names[] = {"x-", "x+", "y-", "y+", "z-", "z+"};
    return names[static_cast<int>(f)];
}

Vec3 FlatPortion::to_point(const Eigen::Vector2d& uv) const {
    auto [ta, tb] = face_tangent_axes(face);
    Vec3 p;
    p(face_axis(face)) = plane;
    p(ta) = uv(0);
    p(tb) = uv(1);
    return p;
}

Vec3 FlatPortion::center() const { return to_point(0.5 * (rect_lo + rect_hi)); }

bool FlatPortion::contains(const Vec3& x, double tol, bool strict_in_plane) const {
    if (std::abs(x(face_axis(face)) - plane) > tol) return false;
    auto [ta, tb] = face_tangent_axes(face);
    const Eigen::Vector2d uv(x(ta), x(tb));
    if (strict_in_plane) {
        return uv(0) > rect_lo(0) + tol && uv(0) < rect_hi(0) - tol && uv(1) > rect_lo(1) + tol &&
               uv(1) < rect_hi(1) - tol;
    }
    return uv(0) >= rect_lo(0) - tol && uv(0) <= rect_hi(0) + tol && uv(1) >= rect_lo(1) - tol &&
           uv(1) <= rect_hi(1) + tol;
}

int LayeredDomain::portion_for(int owner) const {
    for (std::size_t i = 0; i < portions.size(); ++i)
        if (portions[i].owner == owner) return static_cast<int>(i);
    return -1;
}

std::vector<Box> LayeredDomain::layer_pieces(int m) const {
    const int np1 = n_layers();
    if (m < 1 || m > np1) throw OutsideDomain("layer_pieces: no such layer");
    if (m == np1) return {boxes.back()};
    const Box& out = boxes[m - 1];
    const Box& in = boxes[m];
    std::vector<Box> pieces;
    for (int ix = 0; ix < 3; ++ix) {
        const double x0 = (ix == 0) ? out.lo(0) : (ix == 1 ? in.lo(0) : in.hi(0));
        const double x1 = (ix == 0) ? in.lo(0) : (ix == 1 ? in.hi(0) : out.hi(0));
        for (int iy = 0; iy < 3; ++iy) {
            const double y0 = (iy == 0) ? out.lo(1) : (iy == 1 ? in.lo(1) : in.hi(1));
            const double y1 = (iy == 0) ? in.lo(1) : (iy == 1 ? in.hi(1) : out.hi(1));
            for (int iz = 0; iz < 3; ++iz) {
                if (ix == 1 && iy == 1 && iz == 1) continue;
                const double z0 = (iz == 0) ? out.lo(2) : (iz == 1 ? in.lo(2) : in.hi(2));
                const double z1 = (iz == 0) ? in.lo(2) : (iz == 1 ? in.hi(2) : out.hi(2));
                Box b{Vec3(x0, y0, z0), Vec3(x1, y1, z1)};
                if ((b.extent().array() > 1e-14).all()) pieces.push_back(b);
            }
        }
    }
    return pieces;
}

namespace {

void check_layers_connected(const LayeredDomain& dom) {
    // Flood fill at the domain pitch over the outer box.
    const Box& outer = dom.outer();
    const double h = dom.grid_pitch;
    const Eigen::Vector3i dims = ((outer.extent() / h).array() + 0.5).cast<int>();
    const auto cell_id = [&](int i, int j, int k) {
        return (static_cast<std::int64_t>(k) * dims(1) + j) * dims(0) + i;
    };
    std::vector<int8_t> layer(static_cast<std::size_t>(dims.prod()), -1);
    for (int k = 0; k < dims(2); ++k)
        for (int j = 0; j < dims(1); ++j)
            for (int i = 0; i < dims(0); ++i) {
                const Vec3 c = outer.lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
                auto li = layer_index(dom, c);
                layer[cell_id(i, j, k)] = static_cast<int8_t>(li.value_or(-1));
            }
    for (int m = 1; m <= dom.n_layers(); ++m) {
        std::vector<char> seen(layer.size(), 0);
        std::int64_t total = 0, seed = -1;
        for (std::size_t c = 0; c < layer.size(); ++c)
            if (layer[c] == m) {
                ++total;
                seed = static_cast<std::int64_t>(c);
            }
        if (total == 0)
            throw DisconnectedLayer("layer " + std::to_string(m) + " contains no cells at pitch");
        std::deque<std::int64_t> queue{seed};
        seen[seed] = 1;
        std::int64_t reached = 0;
        const std::int64_t sx = 1, sy = dims(0), sz = static_cast<std::int64_t>(dims(0)) * dims(1);
        while (!queue.empty()) {
            const std::int64_t c = queue.front();
            queue.pop_front();
            ++reached;
            const int i = static_cast<int>(c % dims(0));
            const int j = static_cast<int>((c / dims(0)) % dims(1));
            const int k = static_cast<int>(c / (static_cast<std::int64_t>(dims(0)) * dims(1)));
            const std::int64_t nbr[6] = {c - sx, c + sx, c - sy, c + sy, c - sz, c + sz};
            const bool ok[6] = {i > 0, i < dims(0) - 1, j > 0, j < dims(1) - 1, k > 0, k < dims(2) - 1};
            for (int d = 0; d < 6; ++d)
                if (ok[d] && !seen[nbr[d]] && layer[nbr[d]] == m) {
                    seen[nbr[d]] = 1;
                    queue.push_back(nbr[d]);
                }
        }
        if (reached != total)
            throw DisconnectedLayer("layer " + std::to_string(m) + " is not connected");
    }
}

}  // namespace

LayeredDomain build_layered_domain(std::vector<Box> boxes, std::vector<FlatPortion> portions,
                                   double pitch, double r0) {
    if (boxes.empty()) throw ValidationError("no boxes given");
    if (!(pitch > 0.0)) throw ValidationError("pitch must be positive");
    for (const Box& b : boxes) {
        if (!((b.hi - b.lo).array() > 0.0).all()) throw ValidationError("degenerate box");
        for (int a = 0; a < 3; ++a)
            if (!aligned(b.lo(a), pitch) || !aligned(b.hi(a), pitch))
                throw GridMisaligned("box coordinate not a multiple of the pitch");
    }
    for (std::size_t m = 0; m + 1 < boxes.size(); ++m) {
        const Box& out = boxes[m];
        const Box& in = boxes[m + 1];
        const double margin = std::min((in.lo - out.lo).minCoeff(), (out.hi - in.hi).minCoeff());
        if (margin < 2.0 * pitch - 1e-12)
            throw NestingViolation("nesting margin below twice the pitch between boxes " +
                                   std::to_string(m) + " and " + std::to_string(m + 1));
    }
    if (portions.empty()) throw ValidationError("at least one flat portion required");
    bool have_outer = false;
    for (FlatPortion& p : portions) {
        if (p.owner < 0 || p.owner >= static_cast<int>(boxes.size()))
            throw ValidationError("portion owner out of range");
        if (p.owner == 0) have_outer = true;
        const Box& b = boxes[p.owner];
        const int axis = face_axis(p.face);
        p.plane = face_sign(p.face) < 0 ? b.lo(axis) : b.hi(axis);
        auto [ta, tb] = face_tangent_axes(p.face);
        const Eigen::Vector2d flo(b.lo(ta), b.lo(tb)), fhi(b.hi(ta), b.hi(tb));
        if (!(p.rect_lo(0) > flo(0) + 1e-12 && p.rect_lo(1) > flo(1) + 1e-12 &&
              p.rect_hi(0) < fhi(0) - 1e-12 && p.rect_hi(1) < fhi(1) - 1e-12))
            throw ValidationError("portion rectangle not strictly inside its face");
        const Eigen::Vector2d side = p.rect_hi - p.rect_lo;
        if (side.minCoeff() < r0 / 3.0 - 1e-12)
            throw PortionTooSmall("portion side below r0/3 on boundary " + std::to_string(p.owner));
        for (int c = 0; c < 2; ++c)
            if (!aligned(p.rect_lo(c), pitch) || !aligned(p.rect_hi(c), pitch))
                throw GridMisaligned("portion rectangle not aligned to the pitch");
    }
    if (!have_outer) throw ValidationError("no portion on the outer boundary");

    LayeredDomain dom;
    dom.boxes = std::move(boxes);
    dom.portions = std::move(portions);
    dom.grid_pitch = pitch;
    check_layers_connected(dom);
    return dom;
}

std::optional<int> layer_index(const LayeredDomain& dom, const Vec3& x) {
    const double tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
    if (!dom.outer().contains(x, tol)) throw OutsideDomain("point outside the conductor");
    // Walk inward; the innermost box containing x decides the layer.
    int inner_most = 0;  // number of boxes containing x
    for (std::size_t m = 0; m < dom.boxes.size(); ++m) {
        const Box& b = dom.boxes[m];
        const bool in_closed = b.contains(x, tol);
        const bool in_open = b.strictly_inside(x, tol);
        if (in_closed && !in_open) return std::nullopt;  // on an interface plane
        if (in_open)
            inner_most = static_cast<int>(m) + 1;
        else
            break;
    }
    return inner_most;  // x in D_{inner_most}: strictly inside boxes 0..inner_most-1
}

std::optional<int> layer_index(const AugmentedDomain& dom, const Vec3& x) {
    const double tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
    const bool in_slab_closed = dom.slab.contains(x, tol);
    const bool in_omega_closed = dom.base.outer().contains(x, tol);
    if (!in_slab_closed && !in_omega_closed) throw OutsideDomain("point outside the augmented domain");
    if (in_slab_closed && in_omega_closed) return std::nullopt;  // on the attach plane
    if (in_slab_closed) {
        if (!dom.slab.strictly_inside(x, tol)) return std::nullopt;
        return 0;
    }
    return layer_index(dom.base, x);
}

bool AugmentedDomain::in_pole_region(const Vec3& x) const {
    if (!slab.strictly_inside(x)) return false;
    return base.boundary_distance(x) >= pole_clearance() - 1e-12;
}

std::vector<Vec3> AugmentedDomain::pole_region_cells() const {
    std::vector<Vec3> cells;
    const double h = base.grid_pitch;
    const Eigen::Vector3i dims = ((slab.extent() / h).array() + 0.5).cast<int>();
    for (int k = 0; k < dims(2); ++k)
        for (int j = 0; j < dims(1); ++j)
            for (int i = 0; i < dims(0); ++i) {
                const Vec3 c = slab.lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
                if (in_pole_region(c)) cells.push_back(c);
            }
    return cells;
}

AugmentedDomain augment(const LayeredDomain& domain, double depth, double r0,
                        SlabFootprint footprint) {
    if (depth < r0 - 1e-12) throw SlabTooThin("slab depth below r0");
    const double q = depth / domain.grid_pitch;
    if (std::abs(q - std::round(q)) > 1e-9)
        throw GridMisaligned("slab depth not a multiple of the pitch");
    const int sigma_index = domain.portion_for(0);
    if (sigma_index < 0) throw FootprintMismatch("no portion on the outer boundary to attach to");
    const FlatPortion& sigma = domain.portions[sigma_index];
    const Box& outer = domain.outer();
    const int axis = face_axis(sigma.face);
    const int sign = face_sign(sigma.face);

    Box slab;
    if (footprint == SlabFootprint::FullFace) {
        slab.lo = outer.lo;
        slab.hi = outer.hi;
    } else {
        auto [ta, tb] = face_tangent_axes(sigma.face);
        slab.lo(ta) = sigma.rect_lo(0);
        slab.lo(tb) = sigma.rect_lo(1);
        slab.hi(ta) = sigma.rect_hi(0);
        slab.hi(tb) = sigma.rect_hi(1);
    }
    if (sign < 0) {
        slab.hi(axis) = sigma.plane;
        slab.lo(axis) = sigma.plane - depth;
    } else {
        slab.lo(axis) = sigma.plane;
        slab.hi(axis) = sigma.plane + depth;
    }

    AugmentedDomain aug;
    aug.base = domain;
    aug.slab = slab;
    aug.footprint = footprint;
    aug.sigma_index = sigma_index;
    aug.r0 = r0;
    aug.bounding.lo = outer.lo.cwiseMin(slab.lo);
    aug.bounding.hi = outer.hi.cwiseMax(slab.hi);
    return aug;
}

Vec3 probe_point(const AugmentedDomain& dom, int portion_index, double offset,
                 std::optional<Vec3> base) {
    const FlatPortion& p = dom.base.portions.at(portion_index);
    if (std::abs(offset) >= 0.5 * dom.r0 - 1e-15)
        throw OffsetOutOfRange("probe offset magnitude must stay below r0/2");
    Vec3 point = base.value_or(p.center());
    if (!p.contains(point, 1e-9, false))
        throw OffsetOutOfRange("probe base point does not lie on the portion");
    point += offset * p.normal();
    const double tol = 1e-12;
    if (!dom.base.outer().contains(point, tol) && !dom.slab.contains(point, tol))
        throw OffsetOutOfRange("probe point leaves the augmented domain");
    return point;
}

}  // namespace eitbox
