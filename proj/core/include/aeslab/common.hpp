#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aeslab {

// Error taxonomy mapped to CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericError -> 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

using TimeSignal = std::vector<double>;

constexpr int kSampleRate = 16000;

inline double mean_power(const TimeSignal& s) {
  if (s.empty()) return 0.0;
  double acc = 0.0;
  for (double v : s) acc += v * v;
  return acc / static_cast<double>(s.size());
}

inline double db10(double ratio) { return 10.0 * std::log10(ratio); }

inline bool all_finite(const TimeSignal& s) {
  for (double v : s) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace aeslab
