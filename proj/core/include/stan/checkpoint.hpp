#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace stan {

// On-disk model container:
//   magic   8 bytes (model family tag)
//   version u32 little-endian
//   meta    u64 byte length + UTF-8 JSON (schema, hyperparameters, scalers)
//   nblobs  u32
//   blob*   name (u32 length + bytes), dims (u32 count + u32 each),
//           float32 little-endian data
// Integers and floats are written in little-endian byte order.
inline constexpr char kStanMagic[] = "STANCKPT";
inline constexpr char kGmmMagic[] = "GMMCKPT\0";
inline constexpr char kBnMagic[] = "BNCKPT\0\0";
inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedBlob {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;
};

struct Checkpoint {
  char magic[8] = {0};
  uint32_t version = kCheckpointVersion;
  nlohmann::json meta;
  std::vector<NamedBlob> blobs;

  void set_magic(const char* m);
  bool magic_is(const char* m) const;
  // Returns the blob with this name or throws IoError.
  const NamedBlob& blob(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Reads and validates a checkpoint.  When expected_magic is non-null a
// mismatched family tag raises IoError; an unsupported version always does.
Checkpoint read_checkpoint(const std::string& path,
                           const char* expected_magic = nullptr);

}  // namespace stan
