// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dapt/tensor.hpp"

namespace dapt {

// Binary container: magic "DAPT", 32-bit version, then length-prefixed
// config/aux/rng blobs, the step counter and the named tensors, each as
// (name length, name bytes, rank, dims as 64-bit, 64-bit float payload).
// Everything little-endian; writes are byte-deterministic.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string config_text;  // resolved RunConfig snapshot
  std::string aux_json;     // vocab, label schemes, task
  std::string rng_state;
  uint64_t step = 0;
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dapt
