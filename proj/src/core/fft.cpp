#include "vocapose/core/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace vp::core {

int64_t next_pow2(int64_t n) {
    int64_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

std::vector<double> magnitude_spectrum(const double* frame, int64_t frame_len, int64_t n_fft) {
    if ((n_fft & (n_fft - 1)) != 0) throw std::invalid_argument("n_fft must be a power of two");
    std::vector<std::complex<double>> buf(static_cast<size_t>(n_fft), {0.0, 0.0});
    const int64_t n = std::min(frame_len, n_fft);
    for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = frame[i];
    fft(buf);
    std::vector<double> mag(static_cast<size_t>(n_fft / 2 + 1));
    for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(buf[i]);
    return mag;
}

}  // namespace vp::core
