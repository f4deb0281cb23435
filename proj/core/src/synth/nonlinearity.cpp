#include "aeslab/synth/nonlinearity.hpp"

#include <cmath>
#include <numbers>

namespace aeslab::synth {

std::string NonlinearityModel::describe() const {
  switch (kind) {
    case NonlinearityKind::kIdentity:
      return "identity";
    case NonlinearityKind::kSef:
      return "sef(mu=" + std::to_string(mu) + ")";
    case NonlinearityKind::kArctan:
      return "arctan(alpha=" + std::to_string(alpha) + ")";
  }
  return "?";
}

double sef_sample(double v, double mu) {
  // integral_0^v exp(-t^2/(2 mu^2)) dt = mu*sqrt(pi/2)*erf(v/(mu*sqrt(2)))
  const double s = mu * std::numbers::sqrt2;
  return mu * std::sqrt(std::numbers::pi / 2.0) * std::erf(v / s);
}

TimeSignal sef_nonlinearity(const TimeSignal& x, double mu) {
  if (mu <= 0.0) throw ConfigError("sef_nonlinearity: mu must be > 0");
  TimeSignal out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = sef_sample(x[i], mu);
  return out;
}

double arctan_sample(double v, double alpha) {
  return std::atan(alpha * v) / alpha;
}

TimeSignal arctan_nonlinearity(const TimeSignal& x, double alpha) {
  if (alpha <= 0.0) throw ConfigError("arctan_nonlinearity: alpha must be > 0");
  TimeSignal out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = arctan_sample(x[i], alpha);
  return out;
}

TimeSignal apply_nonlinearity(const TimeSignal& x, const NonlinearityModel& model) {
  model.validate();
  switch (model.kind) {
    case NonlinearityKind::kIdentity:
      return x;
    case NonlinearityKind::kSef:
      return sef_nonlinearity(x, model.mu);
    case NonlinearityKind::kArctan:
      return arctan_nonlinearity(x, model.alpha);
  }
  return x;
}

}  // namespace aeslab::synth
