#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "rep3net/error.hpp"
#include "rep3net/io/embeddings.hpp"
#include "rep3net/nn/random.hpp"

using namespace rep3net;
using namespace rep3net::io;

namespace {

// Independent encoder: byte layout assembled by hand.
std::vector<char> hand_encode(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                              std::uint32_t dim) {
  std::vector<char> out = {'R', '3', 'E', 'M', 'B', '1'};
  auto put = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put(entries.size(), 4);
  put(dim, 4);
  for (const auto& [k, vec] : entries) {
    put(k.size(), 2);
    out.insert(out.end(), k.begin(), k.end());
    for (float f : vec) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put(bits, 4);
    }
  }
  return out;
}

std::string expect_format_error(const std::vector<char>& bytes) {
  try {
    decode_store(bytes.data(), bytes.size());
  } catch (const FormatError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST(EmbeddingStore, EmptyStoreRoundTrips) {
  const EmbeddingStore s;
  EXPECT_EQ(s.dim(), 768u);
  const auto bytes = encode_store(s);
  EXPECT_EQ(bytes, hand_encode({}, 768));
  const auto back = decode_store(bytes.data(), bytes.size());
  EXPECT_EQ(back, s);
  EXPECT_EQ(back.dim(), 768u);
}

TEST(EmbeddingStore, RandomVectorsRoundTripBitExactly) {
  nn::Rng rng(3);
  std::vector<std::pair<std::string, std::vector<float>>> entries;
  EmbeddingStore s(16);
  for (const char* k : {"CCO", "c1ccccc1", "CC(=O)O"}) {
    std::vector<float> v(16);
    for (float& x : v) x = static_cast<float>(rng.normal() * 1e3);
    v[0] = -0.0f;
    v[1] = std::numeric_limits<float>::denorm_min();
    entries.emplace_back(k, v);
    s.add(k, v);
  }
  const auto bytes = encode_store(s);
  EXPECT_EQ(bytes, hand_encode(entries, 16));
  const auto back = decode_store(bytes.data(), bytes.size());
  EXPECT_EQ(encode_store(back), bytes);
  EXPECT_EQ(back.keys(), s.keys());
  EXPECT_EQ(std::signbit((*back.find("CCO"))[0]), true);

  const auto path = std::filesystem::temp_directory_path() / "rep3net_store.r3emb";
  write_store(s, path);
  EXPECT_EQ(read_store(path), s);
  std::filesystem::remove(path);
}

TEST(EmbeddingStore, ErrorsAreNamed) {
  auto good = hand_encode({{"CCO", {1.0f, 2.0f}}, {"CCN", {3.0f, 4.0f}}}, 2);
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_NE(expect_format_error(bad_magic).find("bad magic"), std::string::npos);
  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  EXPECT_NE(expect_format_error(truncated).find("truncated"), std::string::npos);
  EXPECT_NE(expect_format_error(std::vector<char>(good.begin(), good.begin() + 8)).find("truncated"),
            std::string::npos);
  const auto dup = hand_encode({{"CCO", {1.0f, 2.0f}}, {"CCO", {3.0f, 4.0f}}}, 2);
  EXPECT_NE(expect_format_error(dup).find("duplicate key"), std::string::npos);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_NE(expect_format_error(trailing).find("dimension mismatch"), std::string::npos);
  EXPECT_THROW(read_store("/nonexistent/store.r3emb"), std::exception);
}

TEST(EmbeddingStore, AddValidates) {
  EmbeddingStore s(2);
  s.add("CCO", {1.0f, 2.0f});
  EXPECT_THROW(s.add("CCO", {1.0f, 2.0f}), DataError);
  EXPECT_THROW(s.add("CCN", {1.0f}), DataError);
  EXPECT_THROW(s.add(std::string(70000, 'C'), {1.0f, 2.0f}), DataError);
}

TEST(Join, PoliciesAndExactKeys) {
  EmbeddingStore s(2);
  s.add("CCO", {1.0f, 2.0f});
  s.add("c1ccccc1", {3.0f, 4.0f});
  const auto all = join(s, {"c1ccccc1", "CCO"});
  ASSERT_EQ(all.rows.size(), 2u);
  EXPECT_EQ(all.rows[0], (std::vector<double>{3.0, 4.0}));
  EXPECT_EQ(all.kept, (std::vector<std::size_t>{0, 1}));

  try {
    join(s, {"CCO", "OCC"});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("OCC"), std::string::npos);
  }
  const auto dropped = join(s, {"CCO", "OCC", "c1ccccc1"}, MissingPolicy::kDrop);
  EXPECT_EQ(dropped.rows.size(), 2u);
  EXPECT_EQ(dropped.kept, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(dropped.missing, (std::vector<std::string>{"OCC"}));
}
