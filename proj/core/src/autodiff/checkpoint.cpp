#include "aeslab/autodiff/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace aeslab::ad {

namespace {

constexpr char kMagic[8] = {'A', 'E', 'S', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& f, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  f.write(buf, sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  char buf[sizeof(T)];
  f.read(buf, sizeof(T));
  if (!f) throw DataError("checkpoint: truncated file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void put_tensor_data(std::ofstream& f, const Tensor& t) {
  f.write(reinterpret_cast<const char*>(t.v.data()),
          static_cast<std::streamsize>(t.v.size() * sizeof(double)));
}

void get_tensor_data(std::ifstream& f, Tensor& t) {
  f.read(reinterpret_cast<char*>(t.v.data()),
         static_cast<std::streamsize>(t.v.size() * sizeof(double)));
  if (!f) throw DataError("checkpoint: truncated tensor data");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot write " + path);
  f.write(kMagic, 8);
  put<uint32_t>(f, 1);
  put<uint32_t>(f, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    put<uint16_t>(f, static_cast<uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<uint32_t>(f, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put<int64_t>(f, d);
    put_tensor_data(f, t);
  }
  put<uint8_t>(f, ckpt.optimizer.has_value() ? 1 : 0);
  if (ckpt.optimizer.has_value()) {
    const AdamState& s = *ckpt.optimizer;
    put<double>(f, s.lr);
    put<double>(f, s.beta1);
    put<double>(f, s.beta2);
    put<double>(f, s.eps);
    put<uint64_t>(f, s.step);
    for (const auto& [name, t] : ckpt.params) {
      const auto mi = s.m.find(name);
      const auto vi = s.v.find(name);
      Tensor zero(t.shape);
      put_tensor_data(f, mi != s.m.end() ? mi->second : zero);
      put_tensor_data(f, vi != s.v.end() ? vi->second : zero);
    }
  }
  put<uint8_t>(f, ckpt.meta_json.empty() ? 0 : 1);
  if (!ckpt.meta_json.empty()) {
    put<uint32_t>(f, static_cast<uint32_t>(ckpt.meta_json.size()));
    f.write(ckpt.meta_json.data(), static_cast<std::streamsize>(ckpt.meta_json.size()));
  }
  if (!f) throw DataError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  const uint32_t version = get<uint32_t>(f);
  if (version != 1) throw DataError("checkpoint: unsupported version");
  Checkpoint ckpt;
  const uint32_t count = get<uint32_t>(f);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = get<uint16_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const uint32_t rank = get<uint32_t>(f);
    std::vector<int> shape(rank);
    for (uint32_t r = 0; r < rank; ++r) shape[r] = static_cast<int>(get<int64_t>(f));
    Tensor t(shape);
    get_tensor_data(f, t);
    ckpt.params.emplace(std::move(name), std::move(t));
  }
  if (get<uint8_t>(f)) {
    AdamState s;
    s.lr = get<double>(f);
    s.beta1 = get<double>(f);
    s.beta2 = get<double>(f);
    s.eps = get<double>(f);
    s.step = get<uint64_t>(f);
    for (const auto& [name, t] : ckpt.params) {
      Tensor m(t.shape), v(t.shape);
      get_tensor_data(f, m);
      get_tensor_data(f, v);
      s.m.emplace(name, std::move(m));
      s.v.emplace(name, std::move(v));
    }
    ckpt.optimizer = std::move(s);
  }
  if (f.peek() != EOF && get<uint8_t>(f)) {
    const uint32_t len = get<uint32_t>(f);
    ckpt.meta_json.resize(len);
    f.read(ckpt.meta_json.data(), len);
  }
  return ckpt;
}

}  // namespace aeslab::ad
