#include "stan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "stan/error.hpp"

namespace stan {

namespace {

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  write_u32(out, static_cast<uint32_t>(v));
  write_u32(out, static_cast<uint32_t>(v >> 32));
}

void write_f32(std::ostream& out, const float* data, size_t count) {
  static_assert(sizeof(float) == 4);
  // x86 is little-endian; floats are written verbatim.
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * 4));
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw IoError("checkpoint truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t read_u64(std::istream& in) {
  const uint64_t lo = read_u32(in);
  const uint64_t hi = read_u32(in);
  return lo | (hi << 32);
}

}  // namespace

void Checkpoint::set_magic(const char* m) { std::memcpy(magic, m, 8); }

bool Checkpoint::magic_is(const char* m) const {
  return std::memcmp(magic, m, 8) == 0;
}

const NamedBlob& Checkpoint::blob(const std::string& name) const {
  for (const auto& b : blobs)
    if (b.name == name) return b;
  throw IoError("checkpoint is missing blob '" + name + "'");
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(ckpt.magic, 8);
  write_u32(out, ckpt.version);
  const std::string meta = ckpt.meta.dump();
  write_u64(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  write_u32(out, static_cast<uint32_t>(ckpt.blobs.size()));
  for (const auto& b : ckpt.blobs) {
    write_u32(out, static_cast<uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    write_u32(out, static_cast<uint32_t>(b.dims.size()));
    uint64_t count = 1;
    for (uint32_t d : b.dims) {
      write_u32(out, d);
      count *= d;
    }
    if (count != b.data.size())
      throw Error("blob '" + b.name + "': dims do not match data size");
    write_f32(out, b.data.data(), b.data.size());
  }
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path,
                           const char* expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  Checkpoint ckpt;
  if (!in.read(ckpt.magic, 8)) throw IoError("checkpoint truncated");
  if (expected_magic && !ckpt.magic_is(expected_magic))
    throw IoError("'" + path + "' is not a " +
                  std::string(expected_magic, strnlen(expected_magic, 8)) +
                  " checkpoint");
  ckpt.version = read_u32(in);
  if (ckpt.version > kCheckpointVersion)
    throw IoError("checkpoint version " + std::to_string(ckpt.version) +
                  " is newer than supported version " +
                  std::to_string(kCheckpointVersion));
  const uint64_t meta_len = read_u64(in);
  std::string meta(meta_len, '\0');
  if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len)))
    throw IoError("checkpoint truncated in metadata");
  ckpt.meta = nlohmann::json::parse(meta, nullptr, false);
  if (ckpt.meta.is_discarded())
    throw IoError("checkpoint metadata is not valid JSON");
  const uint32_t nblobs = read_u32(in);
  for (uint32_t i = 0; i < nblobs; ++i) {
    NamedBlob b;
    const uint32_t name_len = read_u32(in);
    b.name.resize(name_len);
    if (!in.read(b.name.data(), name_len))
      throw IoError("checkpoint truncated in blob name");
    const uint32_t ndim = read_u32(in);
    uint64_t count = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      b.dims.push_back(read_u32(in));
      count *= b.dims.back();
    }
    b.data.resize(count);
    if (!in.read(reinterpret_cast<char*>(b.data.data()),
                 static_cast<std::streamsize>(count * 4)))
      throw IoError("checkpoint truncated in blob '" + b.name + "'");
    ckpt.blobs.push_back(std::move(b));
  }
  return ckpt;
}

}  // namespace stan
