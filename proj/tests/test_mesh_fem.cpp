#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "eitbox/fem.hpp"
#include "eitbox/kernels.hpp"

using namespace eitbox;

namespace {

AugmentedDomain make_domain(SlabFootprint fp = SlabFootprint::FullFace, double depth = 0.25) {
    std::vector<Box> boxes{Box{Vec3(0, 0, 0), Vec3(1, 1, 1)},
                           Box{Vec3(0.25, 0.25, 0.25), Vec3(0.75, 0.75, 0.75)}};
    FlatPortion sigma;
    sigma.owner = 0;
    sigma.face = Face::ZMinus;
    sigma.rect_lo = Eigen::Vector2d(0.25, 0.25);
    sigma.rect_hi = Eigen::Vector2d(0.75, 0.75);
    FlatPortion sigma1;
    sigma1.owner = 1;
    sigma1.face = Face::ZMinus;
    sigma1.rect_lo = Eigen::Vector2d(0.375, 0.375);
    sigma1.rect_hi = Eigen::Vector2d(0.625, 0.625);
    const LayeredDomain dom =
        build_layered_domain(boxes, {sigma, sigma1}, 1.0 / 16.0, 3 * depth > 0.75 ? 0.25 : depth);
    return augment(dom, depth, depth, fp);
}

Admittivity unit_adm() {
    Admittivity adm;
    adm.gammas = {AffineComplexScalar{Complex(1, 0), Vec3c::Zero()},
                  AffineComplexScalar{Complex(1, 0), Vec3c::Zero()}};
    return adm;
}

/// Exact trilinear Laplace element matrix on a cube of pitch h, by the
/// separated 1D integrals; the oracle the assembly is checked against.
Eigen::Matrix<double, 8, 8> laplace_element(double h) {
    Eigen::Matrix<double, 8, 8> K;
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
            double total = 0.0;
            for (int d = 0; d < 3; ++d) {
                double term = 1.0;
                for (int e = 0; e < 3; ++e) {
                    const bool same = ((a >> e) & 1) == ((b >> e) & 1);
                    if (e == d)
                        term *= (same ? 1.0 : -1.0) / h;
                    else
                        term *= h * (same ? 1.0 / 3.0 : 1.0 / 6.0);
                }
                total += term;
            }
            K(a, b) = total;
        }
    return K;
}

}  // namespace

TEST_CASE("mesh cell counts and resolution compatibility") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 16);
    CHECK(mesh->cells(0) == 16);
    CHECK(mesh->cells(1) == 16);
    CHECK(mesh->cells(2) == 20);
    CHECK(mesh->n_nodes() == 17 * 17 * 21);
    CHECK_THROWS_AS(build_mesh(aug, 10), ResolutionIncompatible);
}

TEST_CASE("portion node classification matches the closed-form count") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 16);
    const auto pn = classify_portion_nodes(*mesh, aug.sigma());
    // Portion [0.25,0.75]^2 at h = 1/16: 9x9 nodes in the closed rectangle,
    // 7x7 strictly inside.
    CHECK(pn.dofs.size() == 49);
    CHECK(pn.rim.size() == 81 - 49);
}

TEST_CASE("chimney footprint masks cells outside the slab column") {
    const AugmentedDomain aug = make_domain(SlabFootprint::Portion);
    const auto mesh = build_mesh(aug, 16);
    // slab column is 8x8 cells wide, 4 deep; the rest of the bottom layer
    // is inactive.
    std::int64_t active = 0, slab = 0;
    for (std::int64_t c = 0; c < mesh->n_cells(); ++c) {
        if (mesh->cell_active(c)) ++active;
        if (mesh->layer_of_cell(c) == 0) ++slab;
    }
    CHECK(slab == 8 * 8 * 4);
    CHECK(active == 16 * 16 * 16 + 8 * 8 * 4);
}

TEST_CASE("assembly reduces to the trilinear Laplace stiffness") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 8);
    const auto sys = assemble(unit_adm(), mesh, Region::Omega);

    CHECK(sys->Ki().nonZeros() > 0);  // stored structurally
    double ki_max = 0.0;
    for (int c = 0; c < sys->Ki().outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys->Ki(), c); it; ++it)
            ki_max = std::max(ki_max, std::abs(it.value()));
    CHECK(ki_max == 0.0);

    // Oracle: assemble the Laplace matrix from the exact element matrix.
    const double h = mesh->h;
    const auto Ke = laplace_element(h);
    std::map<std::pair<int, int>, double> oracle;
    for (const std::int64_t c : sys->active_cells()) {
        const Eigen::Vector3i cc = mesh->cell_coords(c);
        int rank[8];
        for (int a = 0; a < 8; ++a)
            rank[a] = sys->rank_of_node(mesh->node_id(cc(0) + (a & 1 ? 1 : 0),
                                                      cc(1) + (a & 2 ? 1 : 0),
                                                      cc(2) + (a & 4 ? 1 : 0)));
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) oracle[{rank[a], rank[b]}] += Ke(a, b);
    }
    double err = 0.0;
    for (int c = 0; c < sys->Kr().outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys->Kr(), c); it; ++it)
            err = std::max(err, std::abs(it.value() - oracle[{static_cast<int>(it.row()),
                                                              static_cast<int>(it.col())}]));
    CHECK(err < 1e-13);

    // Symmetry of both blocks.
    CHECK((Eigen::MatrixXd(sys->Kr()) - Eigen::MatrixXd(sys->Kr()).transpose()).norm() == 0.0);
    CHECK((Eigen::MatrixXd(sys->Ki()) - Eigen::MatrixXd(sys->Ki()).transpose()).norm() == 0.0);
}

TEST_CASE("constant scalar factors scale the blocks linearly") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 8);
    Admittivity two = unit_adm();
    two.gammas[0].s = two.gammas[1].s = Complex(2, 0);
    const auto s1 = assemble(unit_adm(), mesh, Region::Omega);
    const auto s2 = assemble(two, mesh, Region::Omega);
    CHECK((Eigen::MatrixXd(s2->Kr()) - 2.0 * Eigen::MatrixXd(s1->Kr())).norm() < 1e-12);
}

TEST_CASE("block quadratic form dominates the scaled Laplace form") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 8);
    Rng rng(3);
    Admittivity adm = unit_adm();
    adm.gammas[0] = AffineComplexScalar{Complex(0.7, 0.3), Vec3c(Complex(0.2, 0.1), 0, 0)};
    adm.gammas[1] = AffineComplexScalar{Complex(2.0, -0.5), Vec3c(0, Complex(0.3, 0), 0)};
    const double lambda_inv = 0.4;  // min Re(gamma) over the conductor is 0.7

    const auto sys = assemble(adm, mesh, Region::Omega);
    const auto lap = assemble(unit_adm(), mesh, Region::Omega);
    const int n = sys->n_active();
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXcd v(n);
        for (int i = 0; i < n; ++i) v(i) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Eigen::VectorXd vr = v.real(), vi = v.imag();
        const double quad = vr.dot(sys->Kr() * vr) + vi.dot(sys->Kr() * vi);
        const double lquad = vr.dot(lap->Kr() * vr) + vi.dot(lap->Kr() * vi);
        CHECK(quad >= lambda_inv * lquad - 1e-10);
    }
}

TEST_CASE("manufactured solutions solve to roundoff") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 16);

    SUBCASE("gamma = 1 + x1 with boundary data x2") {
        Admittivity adm = unit_adm();
        adm.gammas[0] = AffineComplexScalar{Complex(1, 0), Vec3c(Complex(1, 0), 0, 0)};
        adm.gammas[1] = adm.gammas[0];
        const auto sys = assemble(adm, mesh, Region::Omega);
        const auto u = solve_dirichlet(*sys, [](const Vec3& x) { return Complex(x(1), 0); });
        double err = 0.0;
        for (const std::int64_t node : sys->active_nodes()) {
            const Vec3 p = mesh->node_pos(node);
            err = std::max(err, std::abs(u.values(node) - Complex(p(1), 0)));
        }
        CHECK(err < 1e-9);
    }

    SUBCASE("constant complex coefficient with data x1") {
        Admittivity adm = unit_adm();
        adm.gammas[0].s = adm.gammas[1].s = Complex(1, 1);
        const auto sys = assemble(adm, mesh, Region::Omega);
        const auto u = solve_dirichlet(*sys, [](const Vec3& x) { return Complex(x(0), 0); });
        double err = 0.0;
        for (const std::int64_t node : sys->active_nodes()) {
            const Vec3 p = mesh->node_pos(node);
            err = std::max(err, std::abs(u.values(node) - Complex(p(0), 0)));
        }
        CHECK(err < 1e-9);
    }

    SUBCASE("zero data gives the zero solution") {
        const auto sys = assemble(unit_adm(), mesh, Region::Omega);
        const auto u = solve_dirichlet(*sys, [](const Vec3&) { return Complex(0, 0); });
        CHECK(u.max_abs() == 0.0);
    }
}

TEST_CASE("variational flux") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 16);
    const auto sys = assemble(unit_adm(), mesh, Region::Omega);
    const FlatPortion& sigma = aug.sigma();

    SUBCASE("unit outflow for u = x3 on the bottom portion") {
        const auto u = solve_dirichlet(*sys, [](const Vec3& x) { return Complex(x(2), 0); });
        const auto flux = variational_flux(u, *sys, sigma);
        for (Eigen::Index i = 0; i < flux.values.size(); ++i) {
            // outward normal is -e3, so sigma grad u . nu = -1; dual values
            // carry the lumped mass.
            CHECK(std::abs(flux.values(i) - Complex(-flux.weights(i), 0)) < 1e-10);
        }
    }

    SUBCASE("constant solutions carry no flux") {
        const auto u = solve_dirichlet(*sys, [](const Vec3&) { return Complex(3, 1); });
        const auto flux = variational_flux(u, *sys, sigma);
        CHECK(flux.values.cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("dual pairing equals the volume bilinear form") {
        Admittivity adm = unit_adm();
        adm.gammas[0] = AffineComplexScalar{Complex(1.4, 0.6), Vec3c(Complex(0.3, 0), 0, 0)};
        adm.gammas[1] = AffineComplexScalar{Complex(2.2, -0.4), Vec3c::Zero()};
        const auto csys = assemble(adm, mesh, Region::Omega);
        const auto pn = classify_portion_nodes(*mesh, sigma);
        Rng rng(17);
        Eigen::VectorXcd data(static_cast<Eigen::Index>(pn.dofs.size()));
        for (Eigen::Index i = 0; i < data.size(); ++i)
            data(i) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const auto u = solve_dirichlet_dofs(*csys, pn.dofs, data);
        const auto flux = variational_flux(u, *csys, sigma);

        for (int trial = 0; trial < 10; ++trial) {
            // Random discrete test function vanishing on the boundary away
            // from the portion DOFs.
            Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(csys->n_active());
            for (int r = 0; r < csys->n_active(); ++r)
                if (!csys->is_boundary_rank(r))
                    phi(r) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
            Eigen::VectorXcd trace = Eigen::VectorXcd::Zero(data.size());
            for (Eigen::Index i = 0; i < trace.size(); ++i) {
                trace(i) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
                phi(csys->rank_of_node(pn.dofs[static_cast<std::size_t>(i)])) = trace(i);
            }
            // volume form by direct quadrature of the interpolated fields
            const DiscreteField phif = csys->to_field(phi);
            Complex volume{0, 0};
            csys->for_each_quad_point(csys->active_cells(), [&](const AssembledSystem::QuadPoint& qp) {
                const auto sv = eval_sigma_unchecked(adm, qp.x, qp.layer);
                volume += qp.w * bdot(sv.sigma * u.gradient_at(qp.x), phif.gradient_at(qp.x));
            });
            Complex paired{0, 0};
            for (Eigen::Index i = 0; i < trace.size(); ++i) paired += flux.values(i) * trace(i);
            CHECK(std::abs(paired - volume) < 1e-12 * std::max(1.0, std::abs(volume)));
        }
    }
}

TEST_CASE("weak-source solves") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 8);
    Admittivity adm = unit_adm();
    adm.gammas[0] = AffineComplexScalar{Complex(1.5, 0.5), Vec3c::Zero()};
    adm.gammas[1] = AffineComplexScalar{Complex(0.8, -0.2), Vec3c::Zero()};
    const auto sys = assemble(adm, mesh, Region::Augmented);

    SUBCASE("zero source and data give zero") {
        const auto u = solve_with_source(*sys, [](const Vec3&) { return Vec3c::Zero(); },
                                         [](const Vec3&) { return Complex(0, 0); });
        CHECK(u.max_abs() == 0.0);
    }

    SUBCASE("defining identity holds against quadrature") {
        const SourceFn F = [](const Vec3& x) {
            return Vec3c(Complex(x(1), 0.2), Complex(-x(0), 0), Complex(0.3, x(2)));
        };
        const auto u = solve_with_source(*sys, F, [](const Vec3&) { return Complex(0, 0); });
        // int sigma grad u . grad phi - int F . grad phi over random interior phi
        Rng rng(29);
        const Eigen::VectorXcd ua = sys->from_field(u);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(sys->n_active());
            for (int r = 0; r < sys->n_active(); ++r)
                if (!sys->is_boundary_rank(r))
                    phi(r) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
            const DiscreteField phif = sys->to_field(phi);
            Complex lhs{0, 0}, rhs{0, 0};
            sys->for_each_quad_point(sys->active_cells(), [&](const AssembledSystem::QuadPoint& qp) {
                const auto sv = eval_sigma_unchecked(adm, qp.x, qp.layer);
                const Vec3c gphi = phif.gradient_at(qp.x);
                lhs += qp.w * bdot(sv.sigma * u.gradient_at(qp.x), gphi);
                rhs += qp.w * bdot(F(qp.x), gphi);
            });
            CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
        }
        (void)ua;
    }

    SUBCASE("harmonic extension path matches a plain Dirichlet solve") {
        const Vec3 pole(0.5, 0.5, -0.125);
        const auto id_sys = assemble(unit_adm(), mesh, Region::Augmented);
        const BoundaryFn g = [&](const Vec3& x) { return Complex(-eval_Gamma(x, pole), 0); };
        const auto via_source = solve_with_source(*id_sys, [](const Vec3&) { return Vec3c::Zero(); }, g);
        const auto via_dirichlet = solve_dirichlet(*id_sys, g);
        CHECK((via_source.values - via_dirichlet.values).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("Galerkin orthogonality of Dirichlet solves") {
    const AugmentedDomain aug = make_domain();
    const auto mesh = build_mesh(aug, 8);
    Admittivity adm = unit_adm();
    adm.gammas[0] = AffineComplexScalar{Complex(1.2, 0.4), Vec3c(0, Complex(0.5, 0.2), 0)};
    adm.gammas[1] = AffineComplexScalar{Complex(2.0, 0.8), Vec3c::Zero()};
    const auto sys = assemble(adm, mesh, Region::Omega);
    const auto u = solve_dirichlet(*sys, [](const Vec3& x) { return Complex(x(0) * x(2), x(1)); });
    CHECK(interior_residual(*sys, sys->from_field(u)) < 1e-10);
}
