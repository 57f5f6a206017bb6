// SPDX-License-Identifier: Apache-2.0
#include "dapt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dapt {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'P', 'T'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

void put_blob(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string blob() {
    const uint64_t len = u64();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  std::string raw(std::size_t len) {
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t len) const {
    if (pos_ + len > data_.size()) throw std::runtime_error("truncated checkpoint");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, Checkpoint::kVersion);
  put_blob(out, ckpt.config_text);
  put_blob(out, ckpt.aux_json);
  put_blob(out, ckpt.rng_state);
  put_u64(out, ckpt.step);
  put_u64(out, ckpt.tensors.size());
  for (const auto& nt : ckpt.tensors) {
    put_blob(out, nt.name);
    put_u64(out, static_cast<uint64_t>(nt.tensor.rank()));
    for (int d : nt.tensor.dims()) put_u64(out, static_cast<uint64_t>(d));
    for (std::size_t i = 0; i < nt.tensor.numel(); ++i) put_f64(out, nt.tensor.data()[i]);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(data));

  if (r.raw(4) != std::string(kMagic, 4)) throw std::runtime_error("bad magic");
  const uint32_t version = r.u32();
  if (version != Checkpoint::kVersion)
    throw std::runtime_error("unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config_text = r.blob();
  ckpt.aux_json = r.blob();
  ckpt.rng_state = r.blob();
  ckpt.step = r.u64();
  const uint64_t count = r.u64();
  for (uint64_t k = 0; k < count; ++k) {
    const std::string name = r.blob();
    const uint64_t rank = r.u64();
    std::vector<int> dims;
    std::size_t numel = 1;
    for (uint64_t i = 0; i < rank; ++i) {
      dims.push_back(static_cast<int>(r.u64()));
      numel *= static_cast<std::size_t>(dims.back());
    }
    std::vector<double> values(numel);
    for (auto& v : values) v = r.f64();
    ckpt.tensors.push_back({name, Tensor::from(std::move(dims), std::move(values))});
  }
  if (!r.exhausted()) throw std::runtime_error("trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace dapt
