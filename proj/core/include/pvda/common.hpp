#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace pvda {

// Error taxonomy, mirrored by the CLI exit codes:
//   UsageError    -> 1 (bad flags, bad config keys, invalid values)
//   DataError     -> 2 (missing/broken datasets, unreadable checkpoints)
//   RuntimeFailure-> 3 (everything else that aborts a run)
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

template <typename E = RuntimeFailure>
[[noreturn]] inline void fail(const std::string& msg) {
  throw E(msg);
}

template <typename E = RuntimeFailure>
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw E(msg);
}

}  // namespace pvda
