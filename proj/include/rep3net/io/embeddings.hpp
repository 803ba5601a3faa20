#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rep3net::io {

inline constexpr std::string_view kEmbeddingMagic = "R3EMB1";

/// Fixed-width vectors keyed by canonical SMILES. Entry order is preserved
/// so that write(read(file)) reproduces the file byte for byte.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim = 768) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

  /// Throws DataError for a duplicate key, a wrong width, or a key longer
  /// than 65535 bytes.
  void add(std::string key, std::vector<float> vector);
  bool contains(std::string_view key) const;
  /// nullptr when absent.
  const std::vector<float>* find(std::string_view key) const;
  const std::vector<float>& at(std::size_t i) const { return vectors_[i]; }

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    return a.dim_ == b.dim_ && a.keys_ == b.keys_ && a.vectors_ == b.vectors_;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::vector<std::vector<float>> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// R3EMB1 layout: "R3EMB1", u32 count, u32 dim, then per entry u16 key
/// length, key bytes, dim float32. All integers and floats little-endian.
std::vector<char> encode_store(const EmbeddingStore& store);
/// Throws FormatError with "bad magic", "truncated file", "duplicate key",
/// "dimension mismatch" or "trailing bytes".
EmbeddingStore decode_store(const char* data, std::size_t size, const std::string& what = "embedding store");

EmbeddingStore read_store(const std::filesystem::path& path);
void write_store(const EmbeddingStore& store, const std::filesystem::path& path);

enum class MissingPolicy { kError, kDrop };

struct JoinResult {
  std::vector<std::vector<double>> rows;  // one per kept compound, compound order
  std::vector<std::size_t> kept;          // indices into the input key list
  std::vector<std::string> missing;       // keys dropped under kDrop
};

/// Exact-string lookup of each key. Under kError the first missing key
/// raises DataError naming it.
JoinResult join(const EmbeddingStore& store, const std::vector<std::string>& keys,
                MissingPolicy policy = MissingPolicy::kError);

}  // namespace rep3net::io
