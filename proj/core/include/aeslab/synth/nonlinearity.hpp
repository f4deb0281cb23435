#pragma once

#include <string>

#include "aeslab/common.hpp"

namespace aeslab::synth {

enum class NonlinearityKind { kIdentity, kSef, kArctan };

// Loudspeaker saturation model applied to the farend reference before the
// room impulse response.
struct NonlinearityModel {
  NonlinearityKind kind = NonlinearityKind::kIdentity;
  double mu = 1.0;     // SEF shape
  double alpha = 1.0;  // arctan shape

  void validate() const {
    if (kind == NonlinearityKind::kSef && mu <= 0.0)
      throw ConfigError("NonlinearityModel: mu must be > 0");
    if (kind == NonlinearityKind::kArctan && alpha <= 0.0)
      throw ConfigError("NonlinearityModel: alpha must be > 0");
  }

  std::string describe() const;
};

// Scaled error function: f(v) = integral_0^v exp(-t^2/(2 mu^2)) dt, evaluated
// in closed form via erf. Odd, monotone, saturating.
double sef_sample(double v, double mu);
TimeSignal sef_nonlinearity(const TimeSignal& x, double mu);

// f(v) = arctan(alpha*v)/alpha.
double arctan_sample(double v, double alpha);
TimeSignal arctan_nonlinearity(const TimeSignal& x, double alpha);

TimeSignal apply_nonlinearity(const TimeSignal& x, const NonlinearityModel& model);

}  // namespace aeslab::synth
