#include "eitbox/admittivity.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace eitbox {

namespace {

constexpr double kCoefTol = 1e-14;


std::vector<Vec3> box_vertices(const Box& b) {
    std::vector<Vec3> v;
    v.reserve(8);
    for (int i = 0; i < 8; ++i)
        v.emplace_back(i & 1 ? b.hi(0) : b.lo(0), i & 2 ? b.hi(1) : b.lo(1),
                       i & 4 ? b.hi(2) : b.lo(2));
    return v;
}

}  // namespace

bool AffineComplexScalar::same_real_part(const AffineComplexScalar& o) const {
    if (std::abs(s.real() - o.s.real()) > kCoefTol) return false;
    for (int a = 0; a < 3; ++a)
        if (std::abs(S(a).real() - o.S(a).real()) > kCoefTol) return false;
    return true;
}

bool AffineComplexScalar::same_imag_part(const AffineComplexScalar& o) const {
    if (std::abs(s.imag() - o.s.imag()) > kCoefTol) return false;
    for (int a = 0; a < 3; ++a)
        if (std::abs(S(a).imag() - o.S(a).imag()) > kCoefTol) return false;
    return true;
}

bool AnisotropyField::same_field(const AnisotropyField& o) const {
    if (kind != o.kind) return false;
    if ((A0 - o.A0).cwiseAbs().maxCoeff() > kCoefTol) return false;
    for (int a = 0; a < 3; ++a)
        if ((linear[a] - o.linear[a]).cwiseAbs().maxCoeff() > kCoefTol) return false;
    return true;
}

Eigen::Matrix<double, 6, 6> BlockTensor::as_matrix() const {
    Eigen::Matrix<double, 6, 6> c;
    c.block<3, 3>(0, 0) = re;
    c.block<3, 3>(0, 3) = -im;
    c.block<3, 3>(3, 0) = im;
    c.block<3, 3>(3, 3) = re;
    return c;
}

double BlockTensor::quad(const Eigen::Matrix<double, 6, 1>& xi) const {
    const Vec3 a = xi.head<3>(), b = xi.tail<3>();
    return a.dot(re * a) + b.dot(re * b);
}

Complex eval_gamma(const Admittivity& adm, const AugmentedDomain& dom, const Vec3& x, int layer) {
    const double tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
    if (layer == 0) {
        if (!adm.extended) throw LayerMismatch("admittivity not extended to the slab");
        if (!dom.slab.contains(x, tol)) throw LayerMismatch("point not in the slab closure");
        return Complex{1.0, 0.0};
    }
    if (layer < 1 || layer > adm.n_layer_functions())
        throw LayerMismatch("no such layer function");
    // x must lie in the closure of D_layer: inside box layer-1, not strictly
    // inside box layer.
    const auto& boxes = dom.base.boxes;
    if (!boxes[layer - 1].contains(x, tol)) throw LayerMismatch("point outside the layer closure");
    if (layer < static_cast<int>(boxes.size()) && boxes[layer].strictly_inside(x, tol))
        throw LayerMismatch("point strictly inside the next nested box");
    return adm.layer_gamma(layer).eval(x);
}

SigmaValue eval_sigma_unchecked(const Admittivity& adm, const Vec3& x, int layer) {
    Complex g;
    Mat3 a;
    if (layer == 0) {
        g = Complex{1.0, 0.0};
        a = Mat3::Identity();
    } else {
        g = adm.layer_gamma(layer).eval(x);
        a = adm.anisotropy.eval(x);
    }
    SigmaValue out;
    out.block.re = g.real() * a;
    out.block.im = g.imag() * a;
    out.sigma = out.block.re.cast<Complex>() + Complex(0, 1) * out.block.im.cast<Complex>();
    return out;
}

SigmaValue eval_sigma(const Admittivity& adm, const AugmentedDomain& dom, const Vec3& x,
                      int layer) {
    eval_gamma(adm, dom, x, layer);  // containment check
    return eval_sigma_unchecked(adm, x, layer);
}

bool ValidationReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& c : checks) {
        out += (c.pass ? "[pass] " : "[FAIL] ") + c.name;
        if (!c.detail.empty()) out += ": " + c.detail;
        out += "\n";
    }
    for (const auto& w : warnings) out += "[warn] " + w + "\n";
    return out;
}

ValidationReport validate_apriori(const Admittivity& adm, const AprioriData& apriori,
                                  const LayeredDomain& domain) {
    apriori.validate();
    ValidationReport rep;
    const int np1 = domain.n_layers();
    if (adm.n_layer_functions() != np1) {
        rep.checks.push_back({"layer count", false,
                              "admittivity carries " + std::to_string(adm.n_layer_functions()) +
                                  " layer functions, domain has " + std::to_string(np1),
                              std::nullopt});
        return rep;
    }

    // Sample set per layer: vertices of the convex pieces, plus pitch-grid
    // nodes of each piece when the anisotropy varies.
    const bool affine_a = adm.anisotropy.kind == AnisotropyField::Kind::Affine;
    auto layer_samples = [&](int m) {
        std::vector<Vec3> pts;
        for (const Box& piece : domain.layer_pieces(m)) {
            for (const Vec3& v : box_vertices(piece)) pts.push_back(v);
            if (affine_a) {
                const double h = domain.grid_pitch;
                const Eigen::Vector3i n = ((piece.extent() / h).array() + 0.5).cast<int>();
                for (int k = 0; k <= n(2); ++k)
                    for (int j = 0; j <= n(1); ++j)
                        for (int i = 0; i <= n(0); ++i)
                            pts.push_back(piece.lo + h * Vec3(i, j, k));
            }
        }
        return pts;
    };

    ValidationCheck bound_lo{"(a) lower bound gamma_bar^-1 <= Re gamma", true, "", std::nullopt};
    ValidationCheck bound_hi{"(a) upper bound |gamma| <= gamma_bar", true, "", std::nullopt};
    ValidationCheck lip{"(b) anisotropy C^{0,1} norm <= A_bar", true, "", std::nullopt};
    ValidationCheck spd{"(b) anisotropy positive definite", true, "", std::nullopt};
    ValidationCheck ell{"(c) ellipticity of Re sigma in [lambda^-1, lambda]", true, "", std::nullopt};
    ValidationCheck vis{"(d) visibility of adjacent layers", true, "", std::nullopt};

    double min_im_eig = std::numeric_limits<double>::max();
    for (int m = 1; m <= np1; ++m) {
        const AffineComplexScalar& g = adm.layer_gamma(m);
        for (const Vec3& x : layer_samples(m)) {
            const Complex gv = g.eval(x);
            if (bound_lo.pass && gv.real() < 1.0 / apriori.gamma_bar - 1e-12) {
                bound_lo.pass = false;
                bound_lo.detail = "Re gamma = " + fmt_double(gv.real()) + " in layer " +
                                  std::to_string(m);
                bound_lo.witness = x;
            }
            if (bound_hi.pass && std::abs(gv) > apriori.gamma_bar + 1e-12) {
                bound_hi.pass = false;
                bound_hi.detail = "|gamma| = " + fmt_double(std::abs(gv)) + " in layer " +
                                  std::to_string(m);
                bound_hi.witness = x;
            }
            const Mat3 a = adm.anisotropy.eval(x);
            Eigen::SelfAdjointEigenSolver<Mat3> es(a, Eigen::EigenvaluesOnly);
            const double amin = es.eigenvalues().minCoeff();
            if (spd.pass && amin <= 0.0) {
                spd.pass = false;
                spd.detail = "min eig A = " + fmt_double(amin);
                spd.witness = x;
            }
            const double smin = gv.real() * amin;
            const double smax = gv.real() * es.eigenvalues().maxCoeff();
            if (ell.pass && (smin < 1.0 / apriori.lambda - 1e-12 || smax > apriori.lambda + 1e-12)) {
                ell.pass = false;
                ell.detail = "eig Re sigma in [" + fmt_double(smin) + ", " + fmt_double(smax) +
                             "] in layer " + std::to_string(m);
                ell.witness = x;
            }
            min_im_eig = std::min(min_im_eig, gv.imag() * amin);
        }
    }

    {
        Eigen::SelfAdjointEigenSolver<Mat3> es(adm.anisotropy.A0, Eigen::EigenvaluesOnly);
        double sup = es.eigenvalues().cwiseAbs().maxCoeff();
        double lip_semi = 0.0;
        if (affine_a)
            for (int a = 0; a < 3; ++a) lip_semi += adm.anisotropy.linear[a].norm();
        const double norm = sup + apriori.r0 * lip_semi;
        if (norm > apriori.A_bar + 1e-12) {
            lip.pass = false;
            lip.detail = "norm = " + fmt_double(norm);
        }
    }

    for (int m = 1; m < np1; ++m) {
        const auto& g0 = adm.layer_gamma(m);
        const auto& g1 = adm.layer_gamma(m + 1);
        if (g0.same_real_part(g1) || g0.same_imag_part(g1)) {
            vis.pass = false;
            vis.detail = "layers " + std::to_string(m) + " and " + std::to_string(m + 1) +
                         (g0.same_real_part(g1) ? " share the real part" : " share the imaginary part");
            break;
        }
    }

    rep.checks = {bound_lo, bound_hi, lip, spd, ell, vis};
    if (min_im_eig <= 0.0)
        rep.warnings.push_back(
            "Im sigma is not uniformly positive definite; the three-sphere propositions assume "
            "two-sided bounds on it");
    return rep;
}

SupNormDiff sup_norm_diff(const Admittivity& a, const Admittivity& b,
                          const LayeredDomain& domain) {
    if (!a.anisotropy.same_field(b.anisotropy))
        throw AnisotropyMismatch("admittivities do not share the anisotropy field");
    if (a.n_layer_functions() != b.n_layer_functions() ||
        a.n_layer_functions() != domain.n_layers())
        throw ValidationError("layer count mismatch in sup_norm_diff");
    SupNormDiff best;
    for (int m = 1; m <= domain.n_layers(); ++m) {
        AffineComplexScalar diff;
        diff.s = a.layer_gamma(m).s - b.layer_gamma(m).s;
        diff.S = a.layer_gamma(m).S - b.layer_gamma(m).S;
        for (const Box& piece : domain.layer_pieces(m))
            for (const Vec3& v : box_vertices(piece)) {
                const double val = std::abs(diff.eval(v));
                if (val > best.value) {
                    best.value = val;
                    best.witness = v;
                    best.layer = m;
                }
            }
    }
    return best;
}

}  // namespace eitbox
