#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace vp::core {

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// Magnitude spectrum of a real frame zero-padded to n_fft (power of two);
// returns n_fft/2 + 1 bins.
std::vector<double> magnitude_spectrum(const double* frame, int64_t frame_len, int64_t n_fft);

int64_t next_pow2(int64_t n);

}  // namespace vp::core
