#include "eitbox/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace eitbox {

namespace {

constexpr double kFourPi = 4.0 * kPi;

double pair_scale(const Vec3& x, const Vec3& y) {
    return std::max(1.0, std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff()));
}

void check_distinct(const Vec3& x, const Vec3& y) {
    if ((x - y).norm() < 1e-14 * pair_scale(x, y))
        throw CoincidentPoints("kernel evaluated at coincident points");
}

Vec3 grad_gamma3(const Vec3& d) { return -d / (kFourPi * std::pow(d.norm(), 3)); }

Mat3 hess_gamma3(const Vec3& d) {
    const double r = d.norm();
    return (3.0 * d * d.transpose() / std::pow(r, 5) - Mat3::Identity() / std::pow(r, 3)) / kFourPi;
}

int side_of(double coord, HSide forced, double scale) {
    if (forced == HSide::Plus) return +1;
    if (forced == HSide::Minus) return -1;
    if (std::abs(coord) < 1e-13 * scale)
        throw OnInterface("evaluation point on the frozen interface; perturb or force a side");
    return coord > 0.0 ? +1 : -1;
}

struct BranchCoefs {
    Complex direct;
    Complex reflected;
};

BranchCoefs branch_coefs(const FrozenCoefficients& fc, int sx, int sy) {
    const Complex gm = fc.gamma_minus, gp = fc.gamma_plus;
    if (sx > 0 && sy > 0) return {1.0 / gp, (gp - gm) / (gp * (gp + gm))};
    if (sx < 0 && sy < 0) return {1.0 / gm, (gm - gp) / (gm * (gp + gm))};
    return {2.0 / (gm + gp), Complex{0.0, 0.0}};
}

const Mat3 kReflect = (Mat3() << 1, 0, 0, 0, 1, 0, 0, 0, -1).finished();

}  // namespace

double eval_Gamma(const Vec3& x, const Vec3& y) {
    check_distinct(x, y);
    return 1.0 / (kFourPi * (x - y).norm());
}

Vec3 grad_x_Gamma(const Vec3& x, const Vec3& y) {
    check_distinct(x, y);
    return grad_gamma3(x - y);
}

Mat3 mixed_xy_Gamma(const Vec3& x, const Vec3& y) {
    check_distinct(x, y);
    return -hess_gamma3(x - y);
}

AnisotropicMap build_anisotropic_map(const Mat3& A0) {
    if ((A0 - A0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A0.norm()))
        throw NotSPD("anisotropy matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(A0);
    if (es.info() != Eigen::Success) throw NotSPD("eigendecomposition failed");
    Vec3 ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0) throw NotSPD("anisotropy matrix has a non-positive eigenvalue");
    ev = ev.cwiseMax(1e-14);  // conditioning guard
    const Mat3 sqrtA = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                       es.eigenvectors().transpose();
    const Mat3 J = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();

    const Vec3 v = sqrtA * Vec3::UnitZ();
    const Vec3 a = v.normalized();
    Mat3 R = Mat3::Identity();
    const Vec3 w = a.cross(Vec3::UnitZ());
    const double s2 = w.squaredNorm();
    if (s2 > 1e-28) {
        const double c = a.dot(Vec3::UnitZ());
        Mat3 wx;
        wx << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
        R = Mat3::Identity() + wx + wx * wx * ((1.0 - c) / s2);
    }

    AnisotropicMap map;
    map.J = J;
    map.detJ = J.determinant();
    map.Ltilde = R * J;
    map.Lstar = map.Ltilde;
    map.Lstar.row(2) *= -1.0;
    return map;
}

FrozenCoefficients make_frozen(Complex gamma_minus, Complex gamma_plus, const Mat3& A0_local,
                               const Vec3& origin, const Mat3& frame) {
    if (std::abs(gamma_minus + gamma_plus) < 1e-14)
        throw ValidationError("frozen coefficients with gamma + gamma~ = 0");
    FrozenCoefficients fc;
    fc.gamma_minus = gamma_minus;
    fc.gamma_plus = gamma_plus;
    fc.A0 = A0_local;
    fc.origin = origin;
    fc.frame = frame;
    fc.map = build_anisotropic_map(A0_local);
    return fc;
}

FrozenCoefficients freeze_at_interface(const Admittivity& adm, const AugmentedDomain& dom,
                                       int interface, const Vec3& P) {
    if (interface < 1 || interface + 1 > adm.n_layer_functions())
        throw OutsideDomain("no such interface");
    const Box& box = dom.base.boxes.at(interface);
    // Identify the face of boundary(interface) containing P.
    Face face = Face::ZMinus;
    bool found = false;
    for (int f = 0; f < 6 && !found; ++f) {
        const Face cand = static_cast<Face>(f);
        const int axis = face_axis(cand);
        const double plane = face_sign(cand) < 0 ? box.lo(axis) : box.hi(axis);
        if (std::abs(P(axis) - plane) < 1e-12 && box.contains(P, 1e-12)) {
            face = cand;
            found = true;
        }
    }
    if (!found) throw OutsideDomain("freeze point not on the interface boundary");

    // Local frame: +e3 is the inward normal of the interface owner box.
    const Vec3 nu = face_normal(face);
    const Vec3 e3 = -nu;
    const int axis = face_axis(face);
    const Vec3 e1 = Vec3::Unit((axis + 1) % 3);
    const Vec3 e2 = e3.cross(e1);
    Mat3 frame;
    frame.row(0) = e1;
    frame.row(1) = e2;
    frame.row(2) = e3;

    const Complex gm = adm.layer_gamma(interface).eval(P);       // outer layer D_k
    const Complex gp = adm.layer_gamma(interface + 1).eval(P);   // inner layer D_{k+1}
    const Mat3 A_local = frame * adm.anisotropy.eval(P) * frame.transpose();
    return make_frozen(gm, gp, A_local, P, frame);
}

Complex eval_H(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y, HSide x_side,
               HSide y_side) {
    check_distinct(x, y);
    const double scale = pair_scale(x, y);
    const int sx = side_of(x(2), x_side, scale);
    const int sy = side_of(y(2), y_side, scale);
    const BranchCoefs c = branch_coefs(fc, sx, sy);
    const Vec3 xi = fc.map.Ltilde * x;
    const Vec3 eta = fc.map.Ltilde * y;
    Complex val = c.direct / (kFourPi * (xi - eta).norm());
    if (c.reflected != Complex{0.0, 0.0}) {
        const Vec3 eta_star = fc.map.Lstar * y;
        val += c.reflected / (kFourPi * (xi - eta_star).norm());
    }
    return fc.map.detJ * val;
}

Vec3c grad_x_H(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y, HSide x_side,
               HSide y_side) {
    check_distinct(x, y);
    const double scale = pair_scale(x, y);
    const int sx = side_of(x(2), x_side, scale);
    const int sy = side_of(y(2), y_side, scale);
    const BranchCoefs c = branch_coefs(fc, sx, sy);
    const Mat3& L = fc.map.Ltilde;
    const Vec3 xi = L * x;
    Vec3c g = c.direct * (L.transpose() * grad_gamma3(xi - L * y)).cast<Complex>();
    if (c.reflected != Complex{0.0, 0.0})
        g += c.reflected * (L.transpose() * grad_gamma3(xi - fc.map.Lstar * y)).cast<Complex>();
    return fc.map.detJ * g;
}

Mat3c mixed_xy_H(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y, HSide x_side,
                 HSide y_side) {
    check_distinct(x, y);
    const double scale = pair_scale(x, y);
    const int sx = side_of(x(2), x_side, scale);
    const int sy = side_of(y(2), y_side, scale);
    const BranchCoefs c = branch_coefs(fc, sx, sy);
    const Mat3& L = fc.map.Ltilde;
    const Vec3 xi = L * x;
    Mat3c m = -c.direct * (L.transpose() * hess_gamma3(xi - L * y) * L).cast<Complex>();
    if (c.reflected != Complex{0.0, 0.0}) {
        const Mat3 refl = L.transpose() * hess_gamma3(xi - fc.map.Lstar * y) * fc.map.Lstar;
        m += -c.reflected * refl.cast<Complex>();
    }
    return fc.map.detJ * m;
}

Complex H_value(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y) {
    return eval_H(fc, fc.to_local(x), fc.to_local(y));
}

Vec3c H_grad_x(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y) {
    const Vec3c g = grad_x_H(fc, fc.to_local(x), fc.to_local(y));
    return fc.frame.transpose().cast<Complex>() * g;
}

Mat3c H_mixed_xy(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y) {
    const Mat3c m = mixed_xy_H(fc, fc.to_local(x), fc.to_local(y));
    return fc.frame.transpose().cast<Complex>() * m * fc.frame.cast<Complex>();
}

Mat3c frozen_sigma_local(const FrozenCoefficients& fc, const Vec3& x_local) {
    const Complex g = x_local(2) > 0.0 ? fc.gamma_plus : fc.gamma_minus;
    return g * fc.A0.cast<Complex>();
}

Complex H_pole_flux(const FrozenCoefficients& fc, const Vec3& y, double radius, int n_polar,
                    int n_azimuth) {
    // Piecewise Gauss-Legendre in u = cos(theta), split where the sphere
    // crosses the interface plane; trapezoid in the azimuth.
    std::vector<double> breaks{-1.0, 1.0};
    const double u0 = -y(2) / radius;
    if (u0 > -1.0 + 1e-12 && u0 < 1.0 - 1e-12) breaks.insert(breaks.begin() + 1, u0);

    // 16-point Gauss-Legendre nodes on [-1, 1].
    static const double gx[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                 0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                 0.9445750230732326, 0.9894009349916499};
    static const double gw[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                 0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                 0.0622535239386479, 0.0271524594117541};
    (void)n_polar;

    Complex flux{0.0, 0.0};
    for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
        const double a = breaks[seg], b = breaks[seg + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int iu = 0; iu < 16; ++iu) {
            const double node = iu < 8 ? -gx[iu] : gx[iu - 8];
            const double wu = gw[iu % 8] * half;
            const double u = mid + half * node;
            const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
            for (int ip = 0; ip < n_azimuth; ++ip) {
                const double phi = 2.0 * kPi * (ip + 0.5) / n_azimuth;
                const Vec3 n(su * std::cos(phi), su * std::sin(phi), u);
                const Vec3 x = y + radius * n;
                const Mat3c sigma = frozen_sigma_local(fc, x);
                const Vec3c g = grad_x_H(fc, x, y);
                const Complex integrand = -bdot(sigma * g, n);
                flux += integrand * wu * (2.0 * kPi / n_azimuth) * radius * radius;
            }
        }
    }
    return flux;
}

TransmissionReport transmission_residuals(const FrozenCoefficients& fc, const Vec3& y,
                                          const std::vector<double>& deltas,
                                          const std::vector<double>& flux_radii) {
    TransmissionReport rep;
    const Vec3 x0(0.3 * std::abs(y(2)) + 0.05, -0.2 * std::abs(y(2)), 0.0);
    for (double delta : deltas) {
        TransmissionReport::Row row{};
        row.delta = delta;
        const Vec3 xp = x0 + Vec3(0, 0, delta);
        const Vec3 xm = x0 - Vec3(0, 0, delta);
        row.value_jump_raw = std::abs(eval_H(fc, xp, y) - eval_H(fc, xm, y));
        const Complex up = eval_H(fc, x0, y, HSide::Plus);
        const Complex um = eval_H(fc, x0, y, HSide::Minus);
        row.value_jump_limit = std::abs(up - um);
        const Vec3c gp = grad_x_H(fc, x0, y, HSide::Plus);
        const Vec3c gm = grad_x_H(fc, x0, y, HSide::Minus);
        const Vec3c fp = fc.gamma_plus * (fc.A0.cast<Complex>() * gp);
        const Vec3c fm = fc.gamma_minus * (fc.A0.cast<Complex>() * gm);
        row.flux_jump_limit = std::abs(fp(2) - fm(2));
        // Interior FD residual of div(sigma0 grad H) on the pole's side.
        const Vec3 z = y + Vec3(0.11, 0.07, 0.13 * (y(2) > 0 ? 1.0 : -1.0));
        Complex resid{0.0, 0.0};
        const Complex g = z(2) > 0 ? fc.gamma_plus : fc.gamma_minus;
        for (int k = 0; k < 3; ++k) {
            const Vec3 e = Vec3::Unit(k);
            const Vec3c dgrad = (grad_x_H(fc, z + delta * e, y) - grad_x_H(fc, z - delta * e, y)) /
                                (2.0 * delta);
            resid += g * bdot(fc.A0.row(k).transpose().cast<Complex>().eval(), dgrad);
        }
        row.fd_residual = std::abs(resid);
        rep.rows.push_back(row);
    }
    rep.pole_flux_radii = flux_radii;
    for (double r : flux_radii) rep.pole_flux.push_back(H_pole_flux(fc, y, r));
    return rep;
}

}  // namespace eitbox
