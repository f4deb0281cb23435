#include "aeslab/io/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace aeslab::io {

namespace {

void put_u32(std::ofstream& f, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  f.write(b, 4);
}

void put_u16(std::ofstream& f, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  f.write(b, 2);
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

TimeSignal read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_wav: cannot open " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
    throw DataError("read_wav: not a RIFF/WAVE file: " + path);
  }
  size_t pos = 12;
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  uint32_t data_len = 0;
  while (pos + 8 <= raw.size()) {
    const uint32_t chunk_len = get_u32(raw.data() + pos + 4);
    if (std::memcmp(raw.data() + pos, "fmt ", 4) == 0 && pos + 8 + 16 <= raw.size()) {
      const unsigned char* p = raw.data() + pos + 8;
      const uint16_t format = get_u16(p);
      channels = get_u16(p + 2);
      rate = get_u32(p + 4);
      bits = get_u16(p + 14);
      if (format != 1) throw DataError("read_wav: only PCM supported: " + path);
    } else if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
      data = raw.data() + pos + 8;
      data_len = std::min<uint32_t>(chunk_len, static_cast<uint32_t>(raw.size() - pos - 8));
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (!data) throw DataError("read_wav: missing data chunk: " + path);
  if (channels != 1) throw DataError("read_wav: expected mono audio: " + path);
  if (rate != static_cast<uint32_t>(kSampleRate))
    throw DataError("read_wav: expected 16 kHz audio: " + path);
  if (bits != 16) throw DataError("read_wav: expected 16-bit PCM: " + path);

  const size_t n = data_len / 2;
  TimeSignal out(n);
  for (size_t i = 0; i < n; ++i) {
    const int16_t s = static_cast<int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
    out[i] = static_cast<double>(s) / 32768.0;
  }
  return out;
}

void write_wav(const std::string& path, const TimeSignal& samples) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_wav: cannot open " + path);
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  f.write("RIFF", 4);
  put_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, 1);  // PCM
  put_u16(f, 1);  // mono
  put_u32(f, kSampleRate);
  put_u32(f, kSampleRate * 2);
  put_u16(f, 2);
  put_u16(f, 16);
  f.write("data", 4);
  put_u32(f, data_len);
  for (double v : samples) {
    const double scaled = std::round(v * 32768.0);
    const int16_t s = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    const char b[2] = {static_cast<char>(s & 0xff), static_cast<char>((s >> 8) & 0xff)};
    f.write(b, 2);
  }
  if (!f) throw DataError("write_wav: write failed: " + path);
}

}  // namespace aeslab::io
