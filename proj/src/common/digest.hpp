#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace hybridsynth {

// FNV-1a, 64-bit. Used only to fingerprint files in manifests; not a
// cryptographic hash.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fnv1a64_hex(std::string_view data);
// Throws DataError if the file cannot be read.
std::string file_digest(const std::filesystem::path& path);

}  // namespace hybridsynth
