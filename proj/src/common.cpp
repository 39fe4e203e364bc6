#include "eitbox/common.hpp"

#include <cstdio>

namespace eitbox {

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_complex(const Complex& v) {
    return fmt_double(v.real()) + (v.imag() < 0 ? "" : "+") + fmt_double(v.imag()) + "i";
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw ValidationError("fit_slope needs at least two samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw ValidationError("fit_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace eitbox
