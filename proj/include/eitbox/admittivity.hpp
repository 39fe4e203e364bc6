#ifndef EITBOX_ADMITTIVITY_HPP
#define EITBOX_ADMITTIVITY_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "eitbox/geometry.hpp"

namespace eitbox {

/// gamma(x) = s + S . x, exactly representable affine complex scalar.
struct AffineComplexScalar {
    Complex s{1.0, 0.0};
    Vec3c S = Vec3c::Zero();

    Complex eval(const Vec3& x) const { return s + bdot(S, x); }
    bool same_real_part(const AffineComplexScalar& o) const;
    bool same_imag_part(const AffineComplexScalar& o) const;
};

/// Known symmetric positive definite anisotropy A(x); constant or affine.
struct AnisotropyField {
    enum class Kind { Constant, Affine } kind = Kind::Constant;
    Mat3 A0 = Mat3::Identity();
    std::array<Mat3, 3> linear = {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
    double lipschitz_bound = 4.0;  // bound on the C^{0,1} norm

    Mat3 eval(const Vec3& x) const {
        if (kind == Kind::Constant) return A0;
        return A0 + x(0) * linear[0] + x(1) * linear[1] + x(2) * linear[2];
    }
    bool same_field(const AnisotropyField& o) const;
};

/// Real 2x2-block form of the complex tensor sigma at a point.
struct BlockTensor {
    Mat3 re = Mat3::Identity();
    Mat3 im = Mat3::Zero();

    Eigen::Matrix<double, 6, 6> as_matrix() const;
    /// Quadratic form xi^T C xi for xi in R^6; equals
    /// sigma_r xi_1.xi_1 + sigma_r xi_2.xi_2 (the skew blocks cancel).
    double quad(const Eigen::Matrix<double, 6, 1>& xi) const;
};

/// sigma = gamma A with per-layer affine complex gamma. Layer index 0 refers
/// to the slab extension gamma = 1, A = I.
struct Admittivity {
    std::vector<AffineComplexScalar> gammas;  // entry m-1 belongs to layer m
    AnisotropyField anisotropy;
    bool extended = true;

    const AffineComplexScalar& layer_gamma(int m) const { return gammas.at(m - 1); }
    int n_layer_functions() const { return static_cast<int>(gammas.size()); }
};

Complex eval_gamma(const Admittivity& adm, const AugmentedDomain& dom, const Vec3& x, int layer);

struct SigmaValue {
    Mat3c sigma;
    BlockTensor block;
};
SigmaValue eval_sigma(const Admittivity& adm, const AugmentedDomain& dom, const Vec3& x, int layer);

/// sigma at a point with known layer, bypassing the containment check
/// (assembly uses this on quadrature points that are interior to cells).
SigmaValue eval_sigma_unchecked(const Admittivity& adm, const Vec3& x, int layer);

struct ValidationCheck {
    std::string name;
    bool pass = true;
    std::string detail;
    std::optional<Vec3> witness;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    std::vector<std::string> warnings;
    bool all_pass() const;
    std::string summary() const;
};

/// Assumption checks (bounds, Lipschitz anisotropy, ellipticity, visibility).
/// Exact at convex-piece vertices for affine data; grid nodes at the domain
/// pitch are added for the affine-anisotropy case.
ValidationReport validate_apriori(const Admittivity& adm, const AprioriData& apriori,
                                  const LayeredDomain& domain);

struct SupNormDiff {
    double value = 0.0;
    Vec3 witness = Vec3::Zero();
    int layer = 0;  // maximizing layer M
};

/// Exact sup of |gamma1 - gamma2| over the conductor via the vertex rule.
SupNormDiff sup_norm_diff(const Admittivity& a, const Admittivity& b, const LayeredDomain& domain);

}  // namespace eitbox

#endif
