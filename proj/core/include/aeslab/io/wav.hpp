#pragma once

#include <string>

#include "aeslab/common.hpp"

namespace aeslab::io {

// 16-bit PCM, mono, 16 kHz only. Samples map to [-1, 1) via s/32768.
TimeSignal read_wav(const std::string& path);
void write_wav(const std::string& path, const TimeSignal& samples);

}  // namespace aeslab::io
