#pragma once

#include <array>
#include <cstdint>

#include "aeslab/common.hpp"

namespace aeslab::synth {

// Rectangular room for the image-method impulse response. Reflection
// coefficients are per wall pair: [x0, x1, y0, y1, z0, z1].
struct RoomSpec {
  std::array<double, 3> dimensions{5.0, 4.0, 3.0};
  std::array<double, 3> source_pos{1.0, 1.0, 1.5};
  std::array<double, 3> mic_pos{3.0, 2.0, 1.5};
  std::array<double, 6> reflection{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  int rir_length = 4096;
  uint64_t seed = 0;

  void validate() const;
};

constexpr double kSoundSpeed = 343.0;

// Sampled-delay image method: each mirror source contributes an impulse at
// round(distance*fs/c) with amplitude prod(beta^hits)/(4*pi*distance).
// Deterministic for a fixed spec.
TimeSignal simulate_rir(const RoomSpec& room);

}  // namespace aeslab::synth
