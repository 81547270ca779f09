#pragma once

// Binary model checkpoint.
//
//   "NET3CKPT" | u32 version
//   u32 n | n × (string key, string value)          configuration echo
//   u64 P | P × f64 mean | P × f64 std | P × u8 constant   normalization
//   u32 k | k × (string name, u32 order, order × u64 dim, f64 data…)
//
// Strings are u32 length + bytes. All integers and floats little-endian.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "net3/dataset.hpp"
#include "net3/model.hpp"

namespace net3 {

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> meta;
  NormStats stats;
  std::vector<std::pair<std::string, Matrix>> blocks;

  /// Value for `key`; throws ValidationError if absent.
  const std::string& get(const std::string& key) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::vector<std::pair<std::string, Matrix>> collect_blocks(const Net3Params& params);

/// Copies blocks by name into `params`; every block must be present with its shape.
void assign_blocks(Net3Params& params, const std::vector<std::pair<std::string, Matrix>>& blocks);

}  // namespace net3
