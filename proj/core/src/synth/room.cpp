#include "aeslab/synth/room.hpp"

#include <cmath>
#include <numbers>

namespace aeslab::synth {

void RoomSpec::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (dimensions[static_cast<size_t>(i)] <= 0.0)
      throw ConfigError("RoomSpec: non-positive room dimension");
    const double dim = dimensions[static_cast<size_t>(i)];
    if (source_pos[static_cast<size_t>(i)] <= 0.0 ||
        source_pos[static_cast<size_t>(i)] >= dim)
      throw ConfigError("RoomSpec: source position outside room");
    if (mic_pos[static_cast<size_t>(i)] <= 0.0 ||
        mic_pos[static_cast<size_t>(i)] >= dim)
      throw ConfigError("RoomSpec: mic position outside room");
  }
  for (double b : reflection) {
    if (b < 0.0 || b >= 1.0)
      throw ConfigError("RoomSpec: reflection coefficients must be in [0,1)");
  }
  if (rir_length <= 0) throw ConfigError("RoomSpec: rir_length must be > 0");
}

TimeSignal simulate_rir(const RoomSpec& room) {
  room.validate();
  TimeSignal h(static_cast<size_t>(room.rir_length), 0.0);

  const double max_dist =
      (static_cast<double>(room.rir_length) + 0.5) / kSampleRate * kSoundSpeed;
  int order[3];
  for (int i = 0; i < 3; ++i) {
    order[i] = static_cast<int>(
                   std::ceil(max_dist / (2.0 * room.dimensions[static_cast<size_t>(i)]))) +
               1;
  }

  // Allen-Berkley image enumeration: image position along axis a for mirror
  // bit p and shift m is (1-2p)*src + 2m*L; wall hit counts are |m-p| on the
  // near wall and |m| on the far wall.
  for (int px = 0; px <= 1; ++px) {
    for (int py = 0; py <= 1; ++py) {
      for (int pz = 0; pz <= 1; ++pz) {
        for (int mx = -order[0]; mx <= order[0]; ++mx) {
          for (int my = -order[1]; my <= order[1]; ++my) {
            for (int mz = -order[2]; mz <= order[2]; ++mz) {
              const double ix = (1 - 2 * px) * room.source_pos[0] +
                                2.0 * mx * room.dimensions[0];
              const double iy = (1 - 2 * py) * room.source_pos[1] +
                                2.0 * my * room.dimensions[1];
              const double iz = (1 - 2 * pz) * room.source_pos[2] +
                                2.0 * mz * room.dimensions[2];
              const double dx = ix - room.mic_pos[0];
              const double dy = iy - room.mic_pos[1];
              const double dz = iz - room.mic_pos[2];
              const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
              const int delay =
                  static_cast<int>(std::lround(dist * kSampleRate / kSoundSpeed));
              if (delay >= room.rir_length) continue;

              double gain = 1.0 / (4.0 * std::numbers::pi * std::max(dist, 1e-3));
              const int hits[6] = {std::abs(mx - px), std::abs(mx),
                                   std::abs(my - py), std::abs(my),
                                   std::abs(mz - pz), std::abs(mz)};
              bool dead = false;
              for (int w = 0; w < 6; ++w) {
                if (hits[w] == 0) continue;
                const double beta = room.reflection[static_cast<size_t>(w)];
                if (beta == 0.0) {
                  dead = true;
                  break;
                }
                gain *= std::pow(beta, hits[w]);
              }
              if (dead) continue;
              h[static_cast<size_t>(delay)] += gain;
            }
          }
        }
      }
    }
  }
  return h;
}

}  // namespace aeslab::synth
