#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ldcvae/tape.hpp"

namespace ldc {

// Binary layout, all integers little-endian:
//   "LDCV1"
//   repeated until EOF:
//     u32 name_length, name bytes, u32 rank, u64 extents[rank], f64 values[numel]
struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot(const std::vector<const Parameter*>& params);
// Copies values by name; every parameter must be present with a matching shape.
void restore(const std::vector<NamedTensor>& records, const std::vector<Parameter*>& params);

}  // namespace ldc
