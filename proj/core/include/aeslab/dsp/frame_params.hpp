#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "aeslab/common.hpp"

namespace aeslab::dsp {

// Frame/transform geometry shared by every model. The feature length L pads
// the K/2+1 spectral bins up to a count divisible by the product of all
// encoder strides (264 = 8 * 33).
struct FrameParams {
  int frame_len = 424;
  int frame_shift = 212;
  int dft_size = 512;
  int feature_len = 264;
  double compression_exponent = 0.3;

  int bins() const { return dft_size / 2 + 1; }

  void validate() const {
    if (frame_shift * 2 != frame_len)
      throw ConfigError("FrameParams: frame_shift must be frame_len/2");
    if (dft_size < frame_len)
      throw ConfigError("FrameParams: dft_size must be >= frame_len");
    if (feature_len < bins())
      throw ConfigError("FrameParams: feature_len must be >= dft_size/2+1");
    if (compression_exponent <= 0.0 || compression_exponent > 1.0)
      throw ConfigError("FrameParams: compression exponent must be in (0,1]");
  }

  // Periodic square-root Hann, w[n] = sin(pi*n/N). Squares to a periodic Hann
  // which sums to exactly 1 at 50% overlap, so analysis+synthesis windows give
  // perfect reconstruction on interior samples.
  std::vector<double> sqrt_hann() const {
    std::vector<double> w(static_cast<size_t>(frame_len));
    for (int n = 0; n < frame_len; ++n) {
      w[static_cast<size_t>(n)] =
          std::sin(std::numbers::pi * n / static_cast<double>(frame_len));
    }
    return w;
  }

  int frame_count(size_t signal_len) const {
    if (signal_len < static_cast<size_t>(frame_len)) return 0;
    return static_cast<int>((signal_len - static_cast<size_t>(frame_len)) /
                            static_cast<size_t>(frame_shift)) +
           1;
  }

  size_t synthesis_length(int frames) const {
    if (frames <= 0) return 0;
    return static_cast<size_t>(frames - 1) * static_cast<size_t>(frame_shift) +
           static_cast<size_t>(frame_len);
  }
};

}  // namespace aeslab::dsp
