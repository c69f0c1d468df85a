#include "pvda/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "pvda/common.hpp"

namespace pvda {

namespace {

constexpr char kMagic[8] = {'P', 'V', 'D', 'A', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require<DataError>(in.good(), "checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<std::uint64_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  require<DataError>(in.good(), "checkpoint: truncated string");
  return s;
}

}  // namespace

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  require<RuntimeFailure>(out.good(), "cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(out, kCheckpointFormatVersion);

  write_pod<std::uint64_t>(out, checkpoint.metadata.size());
  for (const auto& [key, value] : checkpoint.metadata) {
    write_string(out, key);
    write_string(out, value);
  }

  write_pod<std::uint64_t>(out, checkpoint.tensors.size());
  for (const auto& [name, tensor] : checkpoint.tensors) {
    write_string(out, name);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.ndim()));
    for (std::size_t d = 0; d < tensor.ndim(); ++d)
      write_pod<std::uint64_t>(out, tensor.dim(d));
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
  require<RuntimeFailure>(out.good(), "failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require<DataError>(in.good(), "cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  require<DataError>(in.good() && std::memcmp(magic, kMagic, sizeof kMagic) == 0,
                     "not a checkpoint file: " + path.string());
  const auto version = read_pod<std::uint32_t>(in);
  require<DataError>(version == kCheckpointFormatVersion,
                     "unsupported checkpoint format version " + std::to_string(version));

  Checkpoint ck;
  const auto meta_count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < meta_count; ++i) {
    std::string key = read_string(in);
    ck.metadata[key] = read_string(in);
  }

  const auto tensor_count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    std::string name = read_string(in);
    const auto ndim = read_pod<std::uint32_t>(in);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = read_pod<std::uint64_t>(in);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    require<DataError>(in.good(), "checkpoint: truncated tensor data for " + name);
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  return ck;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    require<UsageError>(pos == s.size(), "trailing characters in number: " + s);
    return v;
  } catch (const std::invalid_argument&) {
    fail<UsageError>("not a number: " + s);
  } catch (const std::out_of_range&) {
    fail<UsageError>("number out of range: " + s);
  }
}

}  // namespace pvda
