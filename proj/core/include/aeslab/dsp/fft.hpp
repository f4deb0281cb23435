#pragma once

#include <complex>
#include <vector>

namespace aeslab::dsp {

// In-place iterative radix-2 FFT. Size must be a power of two.
// Forward transform is unnormalized; inverse applies the 1/K factor.
void fft(std::vector<std::complex<double>>& a, bool inverse);

// Real input convenience: forward FFT of a real buffer zero-padded to `size`,
// returning only bins 0..size/2.
std::vector<std::complex<double>> rfft(const std::vector<double>& x, int size);

}  // namespace aeslab::dsp
