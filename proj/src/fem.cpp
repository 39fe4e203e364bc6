#include "eitbox/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eitbox {

namespace {

inline double shape_value_1d(double t, bool upper) { return upper ? t : 1.0 - t; }

}  // namespace

Complex DiscreteField::value_at(const Vec3& x) const {
    const StructuredMesh& m = *mesh;
    const Eigen::Vector3i c = m.locate_cell(x);
    const Vec3 cell_lo = m.lo + m.h * c.cast<double>();
    const Vec3 t = (x - cell_lo) / m.h;
    Complex val{0.0, 0.0};
    for (int a = 0; a < 8; ++a) {
        const double w = shape_value_1d(t(0), a & 1) * shape_value_1d(t(1), a & 2) *
                         shape_value_1d(t(2), a & 4);
        const std::int64_t n =
            m.node_id(c(0) + (a & 1 ? 1 : 0), c(1) + (a & 2 ? 1 : 0), c(2) + (a & 4 ? 1 : 0));
        val += w * values(n);
    }
    return val;
}

Vec3c DiscreteField::gradient_at(const Vec3& x) const {
    const StructuredMesh& m = *mesh;
    const Eigen::Vector3i c = m.locate_cell(x);
    const Vec3 cell_lo = m.lo + m.h * c.cast<double>();
    const Vec3 t = (x - cell_lo) / m.h;
    Vec3c g = Vec3c::Zero();
    for (int a = 0; a < 8; ++a) {
        const double f0 = shape_value_1d(t(0), a & 1);
        const double f1 = shape_value_1d(t(1), a & 2);
        const double f2 = shape_value_1d(t(2), a & 4);
        const double d0 = (a & 1 ? 1.0 : -1.0) / m.h;
        const double d1 = (a & 2 ? 1.0 : -1.0) / m.h;
        const double d2 = (a & 4 ? 1.0 : -1.0) / m.h;
        const std::int64_t n =
            m.node_id(c(0) + (a & 1 ? 1 : 0), c(1) + (a & 2 ? 1 : 0), c(2) + (a & 4 ? 1 : 0));
        const Complex v = values(n);
        g(0) += d0 * f1 * f2 * v;
        g(1) += f0 * d1 * f2 * v;
        g(2) += f0 * f1 * d2 * v;
    }
    return g;
}

AssembledSystem::AssembledSystem(Admittivity adm, std::shared_ptr<const StructuredMesh> mesh,
                                 Region region)
    : adm_(std::move(adm)), mesh_(std::move(mesh)), region_(region) {
    build_index();
    assemble();
}

void AssembledSystem::build_index() {
    const StructuredMesh& m = *mesh_;
    const int min_layer = region_ == Region::Omega ? 1 : 0;
    std::vector<char> node_active(static_cast<std::size_t>(m.n_nodes()), 0);
    std::vector<char> node_bdry(static_cast<std::size_t>(m.n_nodes()), 0);

    auto cell_in_region = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= m.cells(0) || j >= m.cells(1) || k >= m.cells(2))
            return false;
        return m.layer_of_cell(m.cell_id(i, j, k)) >= min_layer;
    };

    for (std::int64_t c = 0; c < m.n_cells(); ++c) {
        if (m.layer_of_cell(c) < min_layer) continue;
        active_cells_.push_back(c);
        const Eigen::Vector3i cc = m.cell_coords(c);
        for (int a = 0; a < 8; ++a) {
            const std::int64_t n = m.node_id(cc(0) + (a & 1 ? 1 : 0), cc(1) + (a & 2 ? 1 : 0),
                                             cc(2) + (a & 4 ? 1 : 0));
            node_active[static_cast<std::size_t>(n)] = 1;
        }
        // Faces against out-of-region space make their four nodes Dirichlet.
        static const int dirs[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                       {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
        for (const auto& d : dirs) {
            if (cell_in_region(cc(0) + d[0], cc(1) + d[1], cc(2) + d[2])) continue;
            for (int a = 0; a < 8; ++a) {
                const int bi = a & 1 ? 1 : 0, bj = a & 2 ? 1 : 0, bk = a & 4 ? 1 : 0;
                if ((d[0] == -1 && bi != 0) || (d[0] == 1 && bi != 1)) continue;
                if ((d[1] == -1 && bj != 0) || (d[1] == 1 && bj != 1)) continue;
                if ((d[2] == -1 && bk != 0) || (d[2] == 1 && bk != 1)) continue;
                node_bdry[static_cast<std::size_t>(
                    m.node_id(cc(0) + bi, cc(1) + bj, cc(2) + bk))] = 1;
            }
        }
    }

    node_rank_.assign(static_cast<std::size_t>(m.n_nodes()), -1);
    for (std::int64_t n = 0; n < m.n_nodes(); ++n)
        if (node_active[static_cast<std::size_t>(n)]) {
            node_rank_[static_cast<std::size_t>(n)] = static_cast<int>(active_nodes_.size());
            active_nodes_.push_back(n);
        }
    node_boundary_.resize(active_nodes_.size());
    free_index_.assign(active_nodes_.size(), -1);
    for (std::size_t r = 0; r < active_nodes_.size(); ++r) {
        node_boundary_[r] = node_bdry[static_cast<std::size_t>(active_nodes_[r])];
        if (!node_boundary_[r]) {
            free_index_[r] = n_free_++;
            free_nodes_.push_back(static_cast<int>(r));
        }
    }
}

void AssembledSystem::assemble() {
    const StructuredMesh& m = *mesh_;
    const double h = m.h;
    const double g = 1.0 / std::sqrt(3.0);
    for (int q = 0; q < 8; ++q) {
        const Vec3 xi((q & 1 ? g : -g), (q & 2 ? g : -g), (q & 4 ? g : -g));
        quad_offset_[q] = 0.5 * h * (Vec3::Ones() + xi);
        for (int a = 0; a < 8; ++a) {
            const Vec3 s((a & 1 ? 1.0 : -1.0), (a & 2 ? 1.0 : -1.0), (a & 4 ? 1.0 : -1.0));
            Vec3 grad;
            grad(0) = s(0) * (1 + s(1) * xi(1)) * (1 + s(2) * xi(2)) / 8.0;
            grad(1) = s(1) * (1 + s(0) * xi(0)) * (1 + s(2) * xi(2)) / 8.0;
            grad(2) = s(2) * (1 + s(0) * xi(0)) * (1 + s(1) * xi(1)) / 8.0;
            grad_ref_[q][a] = (2.0 / h) * grad;
        }
    }
    w_quad_ = std::pow(0.5 * h, 3);

    std::vector<Eigen::Triplet<double>> tr, ti;
    tr.reserve(active_cells_.size() * 64);
    ti.reserve(active_cells_.size() * 64);
    for (const std::int64_t c : active_cells_) {
        const Eigen::Vector3i cc = m.cell_coords(c);
        const Vec3 cell_lo = m.lo + h * cc.cast<double>();
        const int layer = m.layer_of_cell(c);
        int rank[8];
        for (int a = 0; a < 8; ++a)
            rank[a] = node_rank_[static_cast<std::size_t>(m.node_id(
                cc(0) + (a & 1 ? 1 : 0), cc(1) + (a & 2 ? 1 : 0), cc(2) + (a & 4 ? 1 : 0)))];
        double ke_r[8][8] = {}, ke_i[8][8] = {};
        for (int q = 0; q < 8; ++q) {
            const Vec3 xq = cell_lo + quad_offset_[q];
            Complex gamma;
            Mat3 A;
            if (layer == 0) {
                gamma = Complex{1.0, 0.0};
                A = Mat3::Identity();
            } else {
                gamma = adm_.layer_gamma(layer).eval(xq);
                A = adm_.anisotropy.eval(xq);
            }
            Vec3 Ag[8];
            for (int a = 0; a < 8; ++a) Ag[a] = A * grad_ref_[q][a];
            for (int a = 0; a < 8; ++a)
                for (int b = a; b < 8; ++b) {
                    const double base = w_quad_ * grad_ref_[q][a].dot(Ag[b]);
                    ke_r[a][b] += gamma.real() * base;
                    ke_i[a][b] += gamma.imag() * base;
                }
        }
        for (int a = 0; a < 8; ++a)
            for (int b = a; b < 8; ++b) {
                tr.emplace_back(rank[a], rank[b], ke_r[a][b]);
                ti.emplace_back(rank[a], rank[b], ke_i[a][b]);
                if (a != b) {
                    tr.emplace_back(rank[b], rank[a], ke_r[a][b]);
                    ti.emplace_back(rank[b], rank[a], ke_i[a][b]);
                }
            }
    }
    const int n = n_active();
    Kr_.resize(n, n);
    Ki_.resize(n, n);
    Kr_.setFromTriplets(tr.begin(), tr.end());
    Ki_.setFromTriplets(ti.begin(), ti.end());
    Kr_.makeCompressed();
    Ki_.makeCompressed();
}

Eigen::VectorXcd AssembledSystem::apply_K(const Eigen::VectorXcd& u) const {
    const Eigen::VectorXd ur = u.real(), ui = u.imag();
    const Eigen::VectorXd rr = Kr_ * ur - Ki_ * ui;
    const Eigen::VectorXd ri = Ki_ * ur + Kr_ * ui;
    return rr + Complex(0, 1) * ri;
}

void AssembledSystem::ensure_factorization() const {
    if (lu_) return;
    const int nf = n_free_;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(Kr_.nonZeros()) * 2);
    for (int col = 0; col < Kr_.outerSize(); ++col) {
        const int fc = free_index_[static_cast<std::size_t>(col)];
        if (fc < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(Kr_, col); it; ++it) {
            const int fr = free_index_[static_cast<std::size_t>(it.row())];
            if (fr < 0) continue;
            trip.emplace_back(fr, fc, it.value());
            trip.emplace_back(fr + nf, fc + nf, it.value());
        }
        for (Eigen::SparseMatrix<double>::InnerIterator it(Ki_, col); it; ++it) {
            const int fr = free_index_[static_cast<std::size_t>(it.row())];
            if (fr < 0) continue;
            trip.emplace_back(fr + nf, fc, it.value());
            trip.emplace_back(fr, fc + nf, -it.value());
        }
    }
    auto reduced = std::make_shared<Eigen::SparseMatrix<double>>(2 * nf, 2 * nf);
    reduced->setFromTriplets(trip.begin(), trip.end());
    reduced->makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(*reduced);
    if (lu->info() != Eigen::Success)
        throw SingularSystem("sparse factorization of the block system failed");
    reduced_ = reduced;
    lu_ = lu;
}

Eigen::VectorXcd AssembledSystem::solve(const Eigen::VectorXcd& boundary_values,
                                        const Eigen::VectorXcd& rhs_free, double rtol) const {
    ensure_factorization();
    const int n = n_active();
    const int nf = n_free_;

    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
    for (int r = 0; r < n; ++r)
        if (node_boundary_[static_cast<std::size_t>(r)]) g(r) = boundary_values(r);
    const Eigen::VectorXcd kg = apply_K(g);

    Eigen::VectorXd b(2 * nf);
    for (int fr = 0; fr < n; ++fr) {
        const int f = free_index_[static_cast<std::size_t>(fr)];
        if (f < 0) continue;
        Complex rhs = -kg(fr);
        if (rhs_free.size()) rhs += rhs_free(fr);
        b(f) = rhs.real();
        b(f + nf) = rhs.imag();
    }
    const Eigen::VectorXd x = lu_->solve(b);
    const double bnorm = b.norm();
    const double resid = (*reduced_ * x - b).norm();
    if (bnorm > 0 && resid > rtol * bnorm)
        throw ToleranceNotMet("reduced-system residual " + fmt_double(resid / bnorm) +
                              " above tolerance");

    Eigen::VectorXcd u = g;
    for (int r = 0; r < n; ++r) {
        const int f = free_index_[static_cast<std::size_t>(r)];
        if (f >= 0) u(r) = Complex(x(f), x(f + nf));
    }
    return u;
}

DiscreteField AssembledSystem::to_field(const Eigen::VectorXcd& active_values) const {
    DiscreteField f;
    f.mesh = mesh_;
    f.values = Eigen::VectorXcd::Zero(mesh_->n_nodes());
    for (std::size_t r = 0; r < active_nodes_.size(); ++r)
        f.values(active_nodes_[r]) = active_values(static_cast<Eigen::Index>(r));
    return f;
}

Eigen::VectorXcd AssembledSystem::from_field(const DiscreteField& f) const {
    Eigen::VectorXcd u(n_active());
    for (std::size_t r = 0; r < active_nodes_.size(); ++r)
        u(static_cast<Eigen::Index>(r)) = f.values(active_nodes_[r]);
    return u;
}

void AssembledSystem::for_each_quad_point(const std::vector<std::int64_t>& cells,
                                          const std::function<void(const QuadPoint&)>& fn) const {
    const StructuredMesh& m = *mesh_;
    for (const std::int64_t c : cells) {
        const Eigen::Vector3i cc = m.cell_coords(c);
        const Vec3 cell_lo = m.lo + m.h * cc.cast<double>();
        const int layer = m.layer_of_cell(c);
        for (int q = 0; q < 8; ++q) fn(QuadPoint{cell_lo + quad_offset_[q], w_quad_, c, layer});
    }
}

std::array<Vec3, 8> AssembledSystem::quad_points_of_cell(std::int64_t cell) const {
    const StructuredMesh& m = *mesh_;
    const Eigen::Vector3i cc = m.cell_coords(cell);
    const Vec3 cell_lo = m.lo + m.h * cc.cast<double>();
    std::array<Vec3, 8> pts;
    for (int q = 0; q < 8; ++q) pts[q] = cell_lo + quad_offset_[q];
    return pts;
}

std::shared_ptr<AssembledSystem> assemble(const Admittivity& adm,
                                          std::shared_ptr<const StructuredMesh> mesh,
                                          Region region) {
    return std::make_shared<AssembledSystem>(adm, std::move(mesh), region);
}

DiscreteField solve_dirichlet(const AssembledSystem& sys, const BoundaryFn& g, double rtol) {
    const int n = sys.n_active();
    Eigen::VectorXcd bv = Eigen::VectorXcd::Zero(n);
    for (int r = 0; r < n; ++r)
        if (sys.is_boundary_rank(r))
            bv(r) = g(sys.mesh().node_pos(sys.active_nodes()[static_cast<std::size_t>(r)]));
    return sys.to_field(sys.solve(bv, Eigen::VectorXcd(), rtol));
}

DiscreteField solve_dirichlet_dofs(const AssembledSystem& sys,
                                   const std::vector<std::int64_t>& dof_nodes,
                                   const Eigen::VectorXcd& dof_values, double rtol) {
    const int n = sys.n_active();
    Eigen::VectorXcd bv = Eigen::VectorXcd::Zero(n);
    for (std::size_t i = 0; i < dof_nodes.size(); ++i) {
        const int r = sys.rank_of_node(dof_nodes[i]);
        if (r < 0 || !sys.is_boundary_rank(r))
            throw UnsupportedTrace("trace node " + std::to_string(dof_nodes[i]) +
                                   " is not a boundary node of the system");
        bv(r) = dof_values(static_cast<Eigen::Index>(i));
    }
    return sys.to_field(sys.solve(bv, Eigen::VectorXcd(), rtol));
}

DiscreteField solve_with_source(const AssembledSystem& sys, const SourceFn& F, const BoundaryFn& g,
                                const std::vector<std::int64_t>& cells, std::int64_t skip_cell,
                                double rtol) {
    const StructuredMesh& m = sys.mesh();
    const int n = sys.n_active();
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    const auto& grads = sys.shape_gradients();
    const std::vector<std::int64_t>& src = cells.empty() ? sys.active_cells() : cells;
    for (const std::int64_t c : src) {
        if (c == skip_cell) continue;
        const Eigen::Vector3i cc = m.cell_coords(c);
        int rank[8];
        for (int a = 0; a < 8; ++a)
            rank[a] = sys.rank_of_node(m.node_id(cc(0) + (a & 1 ? 1 : 0), cc(1) + (a & 2 ? 1 : 0),
                                                 cc(2) + (a & 4 ? 1 : 0)));
        const auto pts = sys.quad_points_of_cell(c);
        for (int q = 0; q < 8; ++q) {
            const Vec3c f = F(pts[q]);
            for (int a = 0; a < 8; ++a)
                rhs(rank[a]) += sys.quad_weight() * bdot(f, grads[q][a]);
        }
    }
    Eigen::VectorXcd bv = Eigen::VectorXcd::Zero(n);
    for (int r = 0; r < n; ++r)
        if (sys.is_boundary_rank(r))
            bv(r) = g(m.node_pos(sys.active_nodes()[static_cast<std::size_t>(r)]));
    return sys.to_field(sys.solve(bv, rhs, rtol));
}

double interior_residual(const AssembledSystem& sys, const Eigen::VectorXcd& u) {
    const Eigen::VectorXcd r = sys.apply_K(u);
    double rmax = 0.0;
    for (int rank = 0; rank < sys.n_active(); ++rank)
        if (!sys.is_boundary_rank(rank)) rmax = std::max(rmax, std::abs(r(rank)));
    double row_scale = 0.0;
    {
        Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(sys.n_active());
        for (int col = 0; col < sys.Kr().outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(sys.Kr(), col); it; ++it)
                rowsum(it.row()) += std::abs(it.value());
            for (Eigen::SparseMatrix<double>::InnerIterator it(sys.Ki(), col); it; ++it)
                rowsum(it.row()) += std::abs(it.value());
        }
        row_scale = rowsum.maxCoeff();
    }
    const double umax = u.cwiseAbs().maxCoeff();
    return rmax / std::max(row_scale * umax, std::numeric_limits<double>::min());
}

FluxTrace variational_flux(const DiscreteField& u, const AssembledSystem& sys,
                           const FlatPortion& portion, double residual_tol) {
    const Eigen::VectorXcd ua = sys.from_field(u);
    if (interior_residual(sys, ua) > residual_tol)
        throw NotASolution("field does not solve the assembled system");
    const Eigen::VectorXcd r = sys.apply_K(ua);

    const StructuredMesh& m = sys.mesh();
    const PortionNodes pn = classify_portion_nodes(m, portion);
    FluxTrace flux;
    flux.dofs = pn.dofs;
    flux.values.resize(static_cast<Eigen::Index>(pn.dofs.size()));
    flux.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pn.dofs.size()));
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(m.n_nodes()), -1);
    for (std::size_t i = 0; i < pn.dofs.size(); ++i) {
        const int rank = sys.rank_of_node(pn.dofs[i]);
        flux.values(static_cast<Eigen::Index>(i)) = rank >= 0 ? r(rank) : Complex{0, 0};
        slot[static_cast<std::size_t>(pn.dofs[i])] = static_cast<Eigen::Index>(i);
    }
    // Lumped portion mass: every portion face of an active region cell
    // contributes h^2/4 to each of its corner nodes.
    const int axis = face_axis(portion.face);
    const auto [ta, tb] = face_tangent_axes(portion.face);
    for (const std::int64_t c : sys.active_cells()) {
        const Eigen::Vector3i cc = m.cell_coords(c);
        const Vec3 cell_lo = m.lo + m.h * cc.cast<double>();
        const Vec3 cell_hi = cell_lo + Vec3::Constant(m.h);
        int off;
        if (std::abs(cell_lo(axis) - portion.plane) < 1e-9)
            off = 0;
        else if (std::abs(cell_hi(axis) - portion.plane) < 1e-9)
            off = 1;
        else
            continue;
        const double tol = 1e-9;
        if (cell_lo(ta) < portion.rect_lo(0) - tol || cell_hi(ta) > portion.rect_hi(0) + tol ||
            cell_lo(tb) < portion.rect_lo(1) - tol || cell_hi(tb) > portion.rect_hi(1) + tol)
            continue;
        for (int u1 = 0; u1 <= 1; ++u1)
            for (int u2 = 0; u2 <= 1; ++u2) {
                Eigen::Vector3i nc = cc;
                nc(axis) += off;
                nc(ta) += u1;
                nc(tb) += u2;
                const std::int64_t node = m.node_id(nc(0), nc(1), nc(2));
                const Eigen::Index s = slot[static_cast<std::size_t>(node)];
                if (s >= 0) flux.weights(s) += 0.25 * m.h * m.h;
            }
    }
    return flux;
}

}  // namespace eitbox
