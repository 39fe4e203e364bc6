#include "eitbox/mesh.hpp"

#include <cmath>

namespace eitbox {

Eigen::Vector3i StructuredMesh::cell_coords(std::int64_t c) const {
    const int i = static_cast<int>(c % cells(0));
    const int j = static_cast<int>((c / cells(0)) % cells(1));
    const int k = static_cast<int>(c / (static_cast<std::int64_t>(cells(0)) * cells(1)));
    return {i, j, k};
}

Eigen::Vector3i StructuredMesh::node_coords(std::int64_t id) const {
    const Eigen::Vector3i n = nodes();
    const int i = static_cast<int>(id % n(0));
    const int j = static_cast<int>((id / n(0)) % n(1));
    const int k = static_cast<int>(id / (static_cast<std::int64_t>(n(0)) * n(1)));
    return {i, j, k};
}

Vec3 StructuredMesh::node_pos(std::int64_t id) const {
    const Eigen::Vector3i c = node_coords(id);
    return lo + h * c.cast<double>();
}

Vec3 StructuredMesh::cell_center(std::int64_t c) const {
    const Eigen::Vector3i cc = cell_coords(c);
    return lo + h * (cc.cast<double>() + Vec3::Constant(0.5));
}

Eigen::Vector3i StructuredMesh::locate_cell(const Vec3& x) const {
    Eigen::Vector3i c;
    for (int a = 0; a < 3; ++a) {
        int i = static_cast<int>(std::floor((x(a) - lo(a)) / h));
        c(a) = std::min(std::max(i, 0), cells(a) - 1);
    }
    return c;
}

Vec3 StructuredMesh::snap_to_cell_center(const Vec3& x) const {
    const Eigen::Vector3i c = locate_cell(x);
    const std::int64_t cid = cell_id(c(0), c(1), c(2));
    if (cell_active(cid)) return cell_center(cid);
    // Search outward for the nearest active cell; the grids here are small.
    double best = std::numeric_limits<double>::max();
    Vec3 best_center = x;
    for (std::int64_t cc = 0; cc < n_cells(); ++cc) {
        if (!cell_active(cc)) continue;
        const double d = (cell_center(cc) - x).squaredNorm();
        if (d < best) {
            best = d;
            best_center = cell_center(cc);
        }
    }
    return best_center;
}

std::shared_ptr<const StructuredMesh> build_mesh(const AugmentedDomain& domain,
                                                 double resolution) {
    if (!(resolution > 0.0)) throw ResolutionIncompatible("resolution must be positive");
    // Every geometry plane must land on the cell grid, so that interfaces
    // coincide with element faces.
    const auto on_grid = [&](double v) {
        const double q = v * resolution;
        return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, std::abs(q));
    };
    for (const Box& b : domain.base.boxes)
        for (int a = 0; a < 3; ++a)
            if (!on_grid(b.lo(a)) || !on_grid(b.hi(a)))
                throw ResolutionIncompatible("box face off the mesh grid at this resolution");
    for (const FlatPortion& p : domain.base.portions)
        if (!on_grid(p.plane) || !on_grid(p.rect_lo(0)) || !on_grid(p.rect_lo(1)) ||
            !on_grid(p.rect_hi(0)) || !on_grid(p.rect_hi(1)))
            throw ResolutionIncompatible("portion rectangle off the mesh grid at this resolution");
    for (int a = 0; a < 3; ++a)
        if (!on_grid(domain.slab.lo(a)) || !on_grid(domain.slab.hi(a)))
            throw ResolutionIncompatible("slab off the mesh grid at this resolution");

    auto mesh = std::make_shared<StructuredMesh>();
    mesh->domain = domain;
    mesh->h = 1.0 / resolution;
    mesh->lo = domain.bounding.lo;
    const Vec3 ext = domain.bounding.extent();
    for (int a = 0; a < 3; ++a) {
        const double n = ext(a) * resolution;
        if (std::abs(n - std::round(n)) > 1e-9)
            throw ResolutionIncompatible("domain extent is not a whole number of cells");
        mesh->cells(a) = static_cast<int>(std::round(n));
    }
    mesh->cell_layer.assign(static_cast<std::size_t>(mesh->n_cells()), -1);
    for (std::int64_t c = 0; c < mesh->n_cells(); ++c) {
        const Vec3 center = mesh->cell_center(c);
        const double tol = 1e-12;
        int layer = -1;
        if (domain.slab.strictly_inside(center, tol)) {
            layer = 0;
        } else if (domain.base.outer().strictly_inside(center, tol)) {
            const auto li = layer_index(domain.base, center);
            layer = li.value_or(-1);  // centers never sit on pitch-aligned planes
        }
        mesh->cell_layer[static_cast<std::size_t>(c)] = static_cast<std::int8_t>(layer);
    }
    return mesh;
}

PortionNodes classify_portion_nodes(const StructuredMesh& mesh, const FlatPortion& portion) {
    PortionNodes out;
    const auto [ta, tb] = face_tangent_axes(portion.face);
    const int axis = face_axis(portion.face);
    const Eigen::Vector3i n = mesh.nodes();
    const double tol = 1e-9 * std::max(1.0, std::abs(portion.plane));
    for (std::int64_t id = 0; id < mesh.n_nodes(); ++id) {
        const Vec3 p = mesh.node_pos(id);
        if (std::abs(p(axis) - portion.plane) > tol) continue;
        const double u = p(ta), v = p(tb);
        if (u < portion.rect_lo(0) - tol || u > portion.rect_hi(0) + tol ||
            v < portion.rect_lo(1) - tol || v > portion.rect_hi(1) + tol)
            continue;
        const bool on_rim = std::abs(u - portion.rect_lo(0)) < tol ||
                            std::abs(u - portion.rect_hi(0)) < tol ||
                            std::abs(v - portion.rect_lo(1)) < tol ||
                            std::abs(v - portion.rect_hi(1)) < tol;
        (on_rim ? out.rim : out.dofs).push_back(id);
    }
    (void)n;
    return out;
}

}  // namespace eitbox
