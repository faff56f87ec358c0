#pragma once

// Checkpoint file layout (little-endian throughout):
//
//   "FCGN"  u32 version  u32 entry_count
//   entry := u32 name_len, name bytes, u8 dtype, u32 rank, u64 dims[rank],
//            u64 payload_bytes, payload
//   dtype := 1 f32 | 2 f64 | 3 i64 | 4 u8
//
// Entries: "config" (u8 text of the TrainConfig), "step" (i64), "eq.k",
// "eq.gamma", "eq.lambda_k" (f64), "eq.step" (i64), then for every parameter
// of each network "G/<name>", "G/<name>.adam_m", "G/<name>.adam_v" (f32) and
// the same under "D/".

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "fcgan/config.hpp"
#include "fcgan/loss.hpp"
#include "fcgan/model.hpp"

namespace fcgan {

inline constexpr char kCheckpointMagic[4] = {'F', 'C', 'G', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2, kI64 = 3, kU8 = 4 };

struct Checkpoint {
  TrainConfig config;
  std::int64_t step = 0;
  EquilibriumState eq;
  ParameterSet<float> generator;
  ParameterSet<float> discriminator;
};

namespace detail {

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kI64: return 8;
    case DType::kU8: return 1;
  }
  return 0;
}

class ByteWriter {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }

  void entry(const std::string& name, DType dtype, const Shape& shape, const std::vector<std::uint8_t>& payload) {
    put(static_cast<std::uint32_t>(name.size()));
    put_bytes(name.data(), name.size());
    put(static_cast<std::uint8_t>(dtype));
    put(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put(static_cast<std::uint64_t>(d));
    put(static_cast<std::uint64_t>(payload.size()));
    put_bytes(payload.data(), payload.size());
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

template <typename U>
void append_le(std::vector<std::uint8_t>& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline std::vector<std::uint8_t> encode_f32(std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (float v : values) append_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline std::vector<std::uint8_t> encode_f64(double v) {
  std::vector<std::uint8_t> out;
  append_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline std::vector<std::uint8_t> encode_i64(std::int64_t v) {
  std::vector<std::uint8_t> out;
  append_le(out, static_cast<std::uint64_t>(v));
  return out;
}

struct RawEntry {
  DType dtype;
  Shape shape;
  std::size_t offset;  // payload start within the file
  std::vector<std::uint8_t> payload;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorKind::kFormat, std::string("checkpoint truncated at byte offset ") + std::to_string(pos_) +
                                   " while reading " + what);
    }
  }

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return value;
  }

  std::vector<std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

template <typename U>
U read_le(const std::uint8_t* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return value;
}

inline const RawEntry& find_entry(const std::map<std::string, RawEntry>& entries, const std::string& name, DType dtype) {
  const auto it = entries.find(name);
  if (it == entries.end()) fail(ErrorKind::kFormat, "checkpoint has no entry '" + name + "'");
  if (it->second.dtype != dtype) {
    fail(ErrorKind::kFormat, "checkpoint entry '" + name + "' at byte offset " + std::to_string(it->second.offset) +
                                 " has the wrong dtype");
  }
  return it->second;
}

inline double scalar_f64(const std::map<std::string, RawEntry>& entries, const std::string& name) {
  return std::bit_cast<double>(read_le<std::uint64_t>(find_entry(entries, name, DType::kF64).payload.data()));
}

inline std::int64_t scalar_i64(const std::map<std::string, RawEntry>& entries, const std::string& name) {
  return static_cast<std::int64_t>(read_le<std::uint64_t>(find_entry(entries, name, DType::kI64).payload.data()));
}

inline void fill_f32(const std::map<std::string, RawEntry>& entries, const std::string& name, Tensor<float>& dst) {
  const RawEntry& e = find_entry(entries, name, DType::kF32);
  if (e.shape != dst.shape()) {
    fail(ErrorKind::kFormat, "checkpoint entry '" + name + "' has shape " + shape_string(e.shape) + ", expected " +
                                 shape_string(dst.shape()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::bit_cast<float>(read_le<std::uint32_t>(&e.payload[4 * i]));
}

inline void write_params(ByteWriter& w, const std::string& prefix, const ParameterSet<float>& params) {
  for (const auto& p : params) {
    w.entry(prefix + p.name, DType::kF32, p.value.shape(), encode_f32(p.value.data()));
    w.entry(prefix + p.name + ".adam_m", DType::kF32, p.adam_m.shape(), encode_f32(p.adam_m.data()));
    w.entry(prefix + p.name + ".adam_v", DType::kF32, p.adam_v.shape(), encode_f32(p.adam_v.data()));
  }
}

inline void read_params(const std::map<std::string, RawEntry>& entries, const std::string& prefix,
                        ParameterSet<float>& params) {
  for (auto& p : params) {
    fill_f32(entries, prefix + p.name, p.value);
    fill_f32(entries, prefix + p.name + ".adam_m", p.adam_m);
    fill_f32(entries, prefix + p.name + ".adam_v", p.adam_v);
  }
}

inline std::size_t entry_count(const Checkpoint& c) { return 6 + 3 * (c.generator.size() + c.discriminator.size()); }

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(detail::entry_count(c)));
  const std::string text = format_config(c.config);
  w.entry("config", DType::kU8, {text.size()}, std::vector<std::uint8_t>(text.begin(), text.end()));
  w.entry("step", DType::kI64, {1}, detail::encode_i64(c.step));
  w.entry("eq.k", DType::kF64, {1}, detail::encode_f64(c.eq.k));
  w.entry("eq.gamma", DType::kF64, {1}, detail::encode_f64(c.eq.gamma));
  w.entry("eq.lambda_k", DType::kF64, {1}, detail::encode_f64(c.eq.lambda_k));
  w.entry("eq.step", DType::kI64, {1}, detail::encode_i64(c.eq.step));
  detail::write_params(w, "G/", c.generator);
  detail::write_params(w, "D/", c.discriminator);
  return w.bytes();
}

inline Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) fail(ErrorKind::kFormat, "not a checkpoint (bad magic at byte offset 0)");
  r.take(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kFormat, "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = r.get<std::uint32_t>("entry count");
  std::map<std::string, detail::RawEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>("entry name length");
    const auto name_bytes = r.take(name_len, "entry name");
    const std::string name(name_bytes.begin(), name_bytes.end());
    const auto dtype_offset = r.offset();
    const auto dtype = static_cast<DType>(r.get<std::uint8_t>("dtype"));
    if (detail::dtype_size(dtype) == 0) {
      fail(ErrorKind::kFormat, "unknown dtype tag at byte offset " + std::to_string(dtype_offset));
    }
    const auto rank = r.get<std::uint32_t>("rank");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>("dimension")));
    const auto payload_offset = r.offset();
    const auto length = r.get<std::uint64_t>("payload length");
    if (length != shape_size(shape) * detail::dtype_size(dtype)) {
      fail(ErrorKind::kFormat, "entry '" + name + "' payload length disagrees with its shape at byte offset " +
                                   std::to_string(payload_offset));
    }
    detail::RawEntry e{dtype, shape, r.offset(), r.take(static_cast<std::size_t>(length), "payload")};
    entries.emplace(name, std::move(e));
  }
  if (r.offset() != bytes.size()) {
    fail(ErrorKind::kFormat, "unexpected trailing bytes at byte offset " + std::to_string(r.offset()));
  }

  Checkpoint c;
  const auto& text = detail::find_entry(entries, "config", DType::kU8).payload;
  std::istringstream config_in(std::string(text.begin(), text.end()));
  c.config = parse_config(config_in);
  c.step = detail::scalar_i64(entries, "step");
  c.eq.k = detail::scalar_f64(entries, "eq.k");
  c.eq.gamma = detail::scalar_f64(entries, "eq.gamma");
  c.eq.lambda_k = detail::scalar_f64(entries, "eq.lambda_k");
  c.eq.step = detail::scalar_i64(entries, "eq.step");
  c.generator = init_network<float>(generator_spec(c.config.width_multiplier), 0);
  c.discriminator = init_network<float>(discriminator_spec(c.config.width_multiplier), 0);
  detail::read_params(entries, "G/", c.generator);
  detail::read_params(entries, "D/", c.discriminator);
  return c;
}

/// Writes to a temporary sibling, then renames over `path`.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = serialize_checkpoint(c);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kIo, "cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace fcgan
