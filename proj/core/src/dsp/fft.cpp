#include "aeslab/dsp/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aeslab::dsp {

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft: size must be a power of two");
  }
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                       (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv;
  }
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x, int size) {
  std::vector<std::complex<double>> buf(static_cast<size_t>(size));
  const size_t m = std::min(x.size(), static_cast<size_t>(size));
  for (size_t i = 0; i < m; ++i) buf[i] = x[i];
  fft(buf, false);
  buf.resize(static_cast<size_t>(size) / 2 + 1);
  return buf;
}

}  // namespace aeslab::dsp
