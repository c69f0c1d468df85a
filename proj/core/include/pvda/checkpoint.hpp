#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "pvda/tensor.hpp"

namespace pvda {

// Versioned binary container: flat string metadata plus named tensors.
// Doubles are stored raw (little-endian), so save -> load -> save round-trips
// bit-exactly.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::map<std::string, Tensor> tensors;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

// Round-trip-safe double <-> string conversion used for metadata values.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace pvda
