#ifndef EITBOX_COMMON_HPP
#define EITBOX_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eitbox {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3c = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double kPi = 3.14159265358979323846;

/// Bilinear (non-conjugated) dot product; Eigen's dot() conjugates the
/// first factor, which is never what the identities here want.
inline Complex bdot(const Vec3c& a, const Vec3c& b) {
    return a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

inline Complex bdot(const Vec3c& a, const Vec3& b) {
    return a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

struct EitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define EITBOX_ERROR_TYPE(Name)                    \
    struct Name : EitError {                       \
        using EitError::EitError;                  \
    }

// domain_model
EITBOX_ERROR_TYPE(NestingViolation);
EITBOX_ERROR_TYPE(DisconnectedLayer);
EITBOX_ERROR_TYPE(PortionTooSmall);
EITBOX_ERROR_TYPE(GridMisaligned);
EITBOX_ERROR_TYPE(OutsideDomain);
EITBOX_ERROR_TYPE(SlabTooThin);
EITBOX_ERROR_TYPE(FootprintMismatch);
EITBOX_ERROR_TYPE(OffsetOutOfRange);
// admittivity
EITBOX_ERROR_TYPE(LayerMismatch);
EITBOX_ERROR_TYPE(AnisotropyMismatch);
// mesh_fem
EITBOX_ERROR_TYPE(ResolutionIncompatible);
EITBOX_ERROR_TYPE(SingularSystem);
EITBOX_ERROR_TYPE(ToleranceNotMet);
EITBOX_ERROR_TYPE(NotASolution);
// kernels
EITBOX_ERROR_TYPE(CoincidentPoints);
EITBOX_ERROR_TYPE(NotSPD);
EITBOX_ERROR_TYPE(OnInterface);
// green
EITBOX_ERROR_TYPE(PoleOutsideRegion);
EITBOX_ERROR_TYPE(LadderTooFine);
// dtn
EITBOX_ERROR_TYPE(EigSolveFailure);
EITBOX_ERROR_TYPE(GramMismatch);
EITBOX_ERROR_TYPE(UnsupportedTrace);
// probes
EITBOX_ERROR_TYPE(PoleTooClose);
EITBOX_ERROR_TYPE(GridOutsidePoleRegion);
EITBOX_ERROR_TYPE(RadiiOrdering);
EITBOX_ERROR_TYPE(BallOutsideDomain);
// experiments
EITBOX_ERROR_TYPE(ParseError);
EITBOX_ERROR_TYPE(ValidationError);
EITBOX_ERROR_TYPE(SamplingExhausted);
EITBOX_ERROR_TYPE(IoError);

#undef EITBOX_ERROR_TYPE

/// FNV-1a 64-bit; used for provenance hashes in sidecars and manifests.
struct Fnv1a {
    std::uint64_t state = 1469598103934665603ull;

    void feed(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 1099511628211ull;
        }
    }
    void feed(const std::string& s) { feed(s.data(), s.size()); }
    void feed(double v) { feed(&v, sizeof v); }
    void feed(std::int64_t v) { feed(&v, sizeof v); }
    std::uint64_t digest() const { return state; }
};

std::string hash_hex(std::uint64_t h);

/// Canonical float formatting ("%.17g") so repeated runs emit identical bytes.
std::string fmt_double(double v);
std::string fmt_complex(const Complex& v);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Deterministic RNG: raw mt19937_64 bits mapped to doubles directly, so
/// the stream does not depend on the standard library's distribution code.
struct Rng {
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

  private:
    std::uint64_t state_;
};

}  // namespace eitbox

#endif
