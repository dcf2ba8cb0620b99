#include "sbd/dft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <vector>

namespace sbd::dft {
namespace {

// Eigen::FFT caches twiddle plans and is not safe to share between threads.
Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

}  // namespace

CVec forward(const CVec& x) {
    const auto n = x.size();
    if (n <= 1) return x;  // kissfft does not handle a single point
    std::vector<cplx> in(x.data(), x.data() + n);
    std::vector<cplx> out;
    engine().fwd(out, in);
    CVec y(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) y(k) = out[static_cast<std::size_t>(k)] * scale;
    return y;
}

CVec inverse(const CVec& x) {
    const auto n = x.size();
    if (n <= 1) return x;
    std::vector<cplx> in(x.data(), x.data() + n);
    std::vector<cplx> out;
    // Eigen's inverse already divides by n.
    engine().inv(out, in);
    CVec y(n);
    const double scale = std::sqrt(static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) y(k) = out[static_cast<std::size_t>(k)] * scale;
    return y;
}

CMat matrix(Eigen::Index n) {
    CMat f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto jk = static_cast<double>((j * k) % n);
            const double angle = -2.0 * std::numbers::pi * jk / static_cast<double>(n);
            f(j, k) = std::polar(scale, angle);
        }
    return f;
}

CVec circular_convolution(const CVec& x, const CVec& y) {
    const double root_n = std::sqrt(static_cast<double>(x.size()));
    CVec prod = forward(x).cwiseProduct(forward(y));
    return root_n * inverse(prod);
}

}  // namespace sbd::dft
