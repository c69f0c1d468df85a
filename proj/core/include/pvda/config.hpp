#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pvda/dataset.hpp"
#include "pvda/training.hpp"

namespace pvda {

// Flat key=value run configuration. Every key is registered with a default
// and a one-line doc; unknown keys are fatal both in files and in overrides.
class Config {
 public:
  struct KeyDoc {
    std::string key;
    std::string default_value;
    std::string doc;
  };

  Config();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // "key=value" as passed to --override.
  void apply_override(const std::string& key_value);
  // One of "256", "384", "toy".
  void apply_profile(const std::string& profile);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // Canonical "key = value" lines, sorted by key.
  std::string dump() const;
  // FNV-1a hash of the canonical dump, hex.
  std::string hash() const;

  static const std::vector<KeyDoc>& documented_keys();

  TrainConfig to_train_config(std::uint64_t seed) const;
  ToyConfig to_toy_config(std::uint64_t seed) const;
  int image_size() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pvda
