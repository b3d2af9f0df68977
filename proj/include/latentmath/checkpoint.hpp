#pragma once

#include <map>
#include <string>

#include "latentmath/tensor.hpp"

namespace latentmath {

// Named-tensor container: "LMCK" magic, u32 format version, u64 manifest
// length, JSON manifest (tensor names, shapes, blob offsets, plus an
// arbitrary meta object), then the raw little-endian float32 blob.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::string meta_json = "{}";
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace latentmath
