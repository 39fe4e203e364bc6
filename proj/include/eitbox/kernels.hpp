#ifndef EITBOX_KERNELS_HPP
#define EITBOX_KERNELS_HPP

#include "eitbox/admittivity.hpp"
#include "eitbox/geometry.hpp"

namespace eitbox {

/// Free-space kernel 1/(4 pi |x-y|), normalized so the flux of -grad
/// through any sphere enclosing the pole is one.
double eval_Gamma(const Vec3& x, const Vec3& y);
Vec3 grad_x_Gamma(const Vec3& x, const Vec3& y);
/// d^2/(dx_h dy_l) of the kernel.
Mat3 mixed_xy_Gamma(const Vec3& x, const Vec3& y);

/// Linear map that straightens the constant anisotropy: Ltilde = R sqrt(A^-1)
/// with R the rotation carrying sqrt(A) e3 to e3 and fixing the orthogonal
/// complement of the plane they span. Lstar is Ltilde with the last row
/// negated (the reflected-pole map).
struct AnisotropicMap {
    Mat3 Ltilde = Mat3::Identity();
    Mat3 Lstar = Mat3::Identity();
    Mat3 J = Mat3::Identity();  // sqrt(A^-1)
    double detJ = 1.0;
};

AnisotropicMap build_anisotropic_map(const Mat3& A0);

/// Coefficients frozen at an interface point: gamma_minus on the local
/// half-space {x3 < 0} (the outer layer), gamma_plus on {x3 > 0} (the inner
/// layer), A0 expressed in the local frame. The frame is a rigid transform
/// with the interface mapped to {x3 = 0} and local +e3 the inward normal.
struct FrozenCoefficients {
    Complex gamma_minus{1.0, 0.0};
    Complex gamma_plus{1.0, 0.0};
    Mat3 A0 = Mat3::Identity();  // local frame
    Vec3 origin = Vec3::Zero();
    Mat3 frame = Mat3::Identity();  // rows = local axes in world coordinates
    AnisotropicMap map;

    Vec3 to_local(const Vec3& x) const { return frame * (x - origin); }
    Vec3 to_world(const Vec3& x) const { return origin + frame.transpose() * x; }
};

/// Freeze an admittivity at a point P of the interface boundary(k)
/// (the plane between layers D_k and D_{k+1}).
FrozenCoefficients freeze_at_interface(const Admittivity& adm, const AugmentedDomain& dom,
                                       int interface, const Vec3& P);
/// Freeze with explicitly given data (local-frame A0).
FrozenCoefficients make_frozen(Complex gamma_minus, Complex gamma_plus, const Mat3& A0_local,
                               const Vec3& origin = Vec3::Zero(),
                               const Mat3& frame = Mat3::Identity());

enum class HSide { Auto, Plus, Minus };

/// Two-phase fundamental solution of div(gamma0 A grad .) with one flat
/// interface, in local-frame coordinates. Branches:
///   x3,y3 > 0:      (1/gp)  G(Lx,Ly) + (gp-gm)/(gp(gp+gm)) G(Lx,L*y)
///   x3*y3 < 0:      (2/(gm+gp)) G(Lx,Ly)
///   x3,y3 < 0:      (1/gm)  G(Lx,Ly) + (gm-gp)/(gm(gp+gm)) G(Lx,L*y)
/// all times |J|. Sides may be forced to evaluate one-sided limits on the
/// interface itself.
Complex eval_H(const FrozenCoefficients& fc, const Vec3& x_local, const Vec3& y_local,
               HSide x_side = HSide::Auto, HSide y_side = HSide::Auto);
Vec3c grad_x_H(const FrozenCoefficients& fc, const Vec3& x_local, const Vec3& y_local,
               HSide x_side = HSide::Auto, HSide y_side = HSide::Auto);
Mat3c mixed_xy_H(const FrozenCoefficients& fc, const Vec3& x_local, const Vec3& y_local,
                 HSide x_side = HSide::Auto, HSide y_side = HSide::Auto);

/// World-frame wrappers.
Complex H_value(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y);
Vec3c H_grad_x(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y);
Mat3c H_mixed_xy(const FrozenCoefficients& fc, const Vec3& x, const Vec3& y);

/// gamma0(x) A0 of the frozen operator, local frame.
Mat3c frozen_sigma_local(const FrozenCoefficients& fc, const Vec3& x_local);

struct TransmissionReport {
    struct Row {
        double delta;
        double value_jump_raw;      // |H(+delta) - H(-delta)|
        double value_jump_limit;    // |H(0+) - H(0-)| via one-sided branches
        double flux_jump_limit;     // conormal flux mismatch of the one-sided limits
        double fd_residual;         // FD residual of div(sigma0 grad H) off interface
    };
    std::vector<Row> rows;
    std::vector<double> pole_flux_radii;
    std::vector<Complex> pole_flux;  // expected 1 at every radius
};

/// Interface/jump/pole-flux diagnostics for the two-phase kernel.
TransmissionReport transmission_residuals(const FrozenCoefficients& fc, const Vec3& y_local,
                                          const std::vector<double>& deltas,
                                          const std::vector<double>& flux_radii);

/// Conormal flux of -sigma0 grad H through the sphere |x-y| = radius
/// (local frame), with the quadrature split at the interface circle.
Complex H_pole_flux(const FrozenCoefficients& fc, const Vec3& y_local, double radius,
                    int n_polar = 48, int n_azimuth = 96);

}  // namespace eitbox

#endif
