#pragma once

#include "wearbench/training.hpp"

#include <filesystem>
#include <string>

// Checkpoint file layout:
//   8 bytes   magic "WBCKPT01"
//   8 bytes   header length n (little-endian u64)
//   n bytes   JSON header: format_version, seed, spec, scalers, channel
//             statistics and the ordered tensor table (name + shape)
//   rest      weights as little-endian doubles, tensors in table order
namespace wearbench::model {

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws LoadError on a bad magic, unsupported version or a size that does
// not match the tensor table.
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

[[nodiscard]] std::string serialize_checkpoint(const Checkpoint& checkpoint);
[[nodiscard]] Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint");

} // namespace wearbench::model
