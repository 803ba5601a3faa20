#include "rep3net/io/embeddings.hpp"

#include <cstdint>
#include <limits>

#include "binio.hpp"
#include "rep3net/error.hpp"

namespace rep3net::io {

void EmbeddingStore::add(std::string key, std::vector<float> vector) {
  if (vector.size() != dim_) {
    throw DataError("embedding for '" + key + "' has width " + std::to_string(vector.size()) + ", store dim is " +
                    std::to_string(dim_));
  }
  if (key.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("embedding key longer than 65535 bytes");
  if (index_.count(key)) throw DataError("duplicate key '" + key + "'");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  vectors_.push_back(std::move(vector));
}

bool EmbeddingStore::contains(std::string_view key) const { return index_.count(std::string(key)) != 0; }

const std::vector<float>* EmbeddingStore::find(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

std::vector<char> encode_store(const EmbeddingStore& store) {
  if (store.size() > std::numeric_limits<std::uint32_t>::max() || store.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("embedding store too large for R3EMB1");
  }
  binio::Writer w;
  w.text(kEmbeddingMagic);
  w.le(static_cast<std::uint32_t>(store.size()));
  w.le(static_cast<std::uint32_t>(store.dim()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::string& key = store.keys()[i];
    w.le(static_cast<std::uint16_t>(key.size()));
    w.text(key);
    for (float v : store.at(i)) w.f32(v);
  }
  return w.buffer();
}

EmbeddingStore decode_store(const char* data, std::size_t size, const std::string& what) {
  binio::Reader r(data, size, what);
  if (size < kEmbeddingMagic.size() || std::string_view(data, kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw FormatError(what + ": bad magic");
  }
  r.take(kEmbeddingMagic.size());
  const auto count = r.le<std::uint32_t>();
  const auto dim = r.le<std::uint32_t>();
  EmbeddingStore store(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint16_t>();
    std::string key = r.text(len);
    if (store.contains(key)) throw FormatError(what + ": duplicate key '" + key + "'");
    if (r.remaining() < static_cast<std::size_t>(dim) * 4) {
      // A final entry cut short reads as truncation; anything else is a width problem.
      throw FormatError(what + ": truncated file");
    }
    std::vector<float> v(dim);
    for (float& x : v) x = r.f32();
    store.add(std::move(key), std::move(v));
  }
  if (r.remaining() != 0) {
    throw FormatError(what + ": dimension mismatch (" + std::to_string(r.remaining()) +
                      " bytes left after the declared entries)");
  }
  return store;
}

EmbeddingStore read_store(const std::filesystem::path& path) {
  const std::vector<char> bytes = binio::read_file(path);
  return decode_store(bytes.data(), bytes.size(), path.string());
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  binio::write_file_atomic(path, encode_store(store));
}

JoinResult join(const EmbeddingStore& store, const std::vector<std::string>& keys, MissingPolicy policy) {
  JoinResult out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::vector<float>* v = store.find(keys[i]);
    if (!v) {
      if (policy == MissingPolicy::kError) throw DataError("no embedding for '" + keys[i] + "'");
      out.missing.push_back(keys[i]);
      continue;
    }
    out.kept.push_back(i);
    out.rows.emplace_back(v->begin(), v->end());
  }
  return out;
}

}  // namespace rep3net::io
