#ifndef EITBOX_MESH_HPP
#define EITBOX_MESH_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "eitbox/geometry.hpp"

namespace eitbox {

/// Uniform hexahedral grid over the bounding box of the augmented domain.
/// Cells outside the augmented domain (portion-footprint slabs leave some)
/// carry layer id -1 and take no part in any assembly.
struct StructuredMesh {
    AugmentedDomain domain;
    Vec3 lo = Vec3::Zero();
    double h = 1.0 / 16.0;
    Eigen::Vector3i cells = Eigen::Vector3i::Zero();
    std::vector<std::int8_t> cell_layer;  // -1 inactive, 0 slab, m >= 1 conductor layers

    Eigen::Vector3i nodes() const { return cells + Eigen::Vector3i::Ones(); }
    std::int64_t n_cells() const { return static_cast<std::int64_t>(cells.prod()); }
    std::int64_t n_nodes() const { return static_cast<std::int64_t>(nodes().prod()); }

    std::int64_t cell_id(int i, int j, int k) const {
        return (static_cast<std::int64_t>(k) * cells(1) + j) * cells(0) + i;
    }
    Eigen::Vector3i cell_coords(std::int64_t c) const;
    std::int64_t node_id(int i, int j, int k) const {
        const Eigen::Vector3i n = nodes();
        return (static_cast<std::int64_t>(k) * n(1) + j) * n(0) + i;
    }
    Eigen::Vector3i node_coords(std::int64_t id) const;
    Vec3 node_pos(std::int64_t id) const;
    Vec3 cell_center(std::int64_t c) const;
    /// Cell containing x (clamped to the grid).
    Eigen::Vector3i locate_cell(const Vec3& x) const;
    /// Center of the active cell nearest to x; used for pole snapping.
    Vec3 snap_to_cell_center(const Vec3& x) const;
    int layer_of_cell(std::int64_t c) const { return cell_layer[static_cast<std::size_t>(c)]; }
    bool cell_active(std::int64_t c) const { return cell_layer[static_cast<std::size_t>(c)] >= 0; }
};

std::shared_ptr<const StructuredMesh> build_mesh(const AugmentedDomain& domain, double resolution);

/// Nodes of a flat portion: strictly interior ones (the trace DOF set of the
/// zero-boundary fractional space) and the rim on the rectangle boundary.
struct PortionNodes {
    std::vector<std::int64_t> dofs;
    std::vector<std::int64_t> rim;
};
PortionNodes classify_portion_nodes(const StructuredMesh& mesh, const FlatPortion& portion);

}  // namespace eitbox

#endif
