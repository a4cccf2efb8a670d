#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "melrag/embedding_store.hpp"
#include "melrag/error.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

namespace melrag {
namespace {

using Bytes = std::vector<std::uint8_t>;

EmbeddingBundle random_bundle(std::size_t count, std::uint32_t image_dim, std::uint32_t text_dim,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EmbeddingBundle b;
  b.image_dim = image_dim;
  b.text_dim = text_dim;
  for (std::size_t i = 0; i < count; ++i) b.ids.push_back("ISIC_" + std::to_string(1000000 + i));
  b.image_vectors = testing::random_floats(rng, count * image_dim);
  b.text_vectors = testing::random_floats(rng, count * text_dim);
  b.serialization_mode = SerializationMode::Html;
  return b;
}

ErrorCode decode_error(const Bytes& bytes) {
  try {
    decode_bundle(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode unexpectedly succeeded";
  return ErrorCode::InvariantViolation;
}

void put_f32(Bytes& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

TEST(Bundle, EncodesExactLayout) {
  EmbeddingBundle b;
  b.ids = {"a", "bc"};
  b.image_dim = 2;
  b.text_dim = 1;
  b.image_vectors = {1.0f, -2.0f, 0.5f, 0.0f};
  b.text_vectors = {3.0f, -0.25f};
  b.serialization_mode = SerializationMode::AttributeValue;

  Bytes expected = {'M', 'M', 'E', 'B',  //
                    1, 0, 0, 0,          // version
                    2, 0, 0, 0, 0, 0, 0, 0,  // count
                    2, 0, 0, 0,          // image_dim
                    1, 0, 0, 0,          // text_dim
                    1, 0, 0, 0,          // mode + reserved
                    1, 0, 'a',           //
                    2, 0, 'b', 'c'};
  // 1.0f = 0x3f800000, -2.0f = 0xc0000000, 0.5f = 0x3f000000, 3.0f = 0x40400000, -0.25f = 0xbe800000
  for (std::uint32_t bits : {0x3f800000u, 0xc0000000u, 0x3f000000u, 0x00000000u, 0x40400000u, 0xbe800000u}) {
    for (int i = 0; i < 4; ++i) expected.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  EXPECT_EQ(encode_bundle(b), expected);
  EXPECT_TRUE(bitwise_equal(decode_bundle(expected), b));
}

TEST(Bundle, EmptyBundleRoundTrip) {
  EmbeddingBundle b;
  b.image_dim = 4;
  b.text_dim = 3;
  const auto bytes = encode_bundle(b);
  EXPECT_EQ(bytes.size(), kBundleHeaderSize);
  testing::TempDir dir("bundle");
  write_bundle(b, dir / "empty.mmeb");
  EXPECT_TRUE(bitwise_equal(read_bundle(dir / "empty.mmeb"), b));
}

TEST(Bundle, FullWidthByteCount) {
  auto b = random_bundle(2, 2048, 768, 11);
  const auto bytes = encode_bundle(b);
  std::size_t ids = 0;
  for (const auto& id : b.ids) ids += 2 + id.size();
  EXPECT_EQ(bytes.size(), 28u + ids + 2u * 2816u * 4u);
  testing::TempDir dir("bundle");
  write_bundle(b, dir / "b.mmeb");
  EXPECT_EQ(std::filesystem::file_size(dir / "b.mmeb"), bytes.size());
  const auto back = read_bundle(dir / "b.mmeb");
  EXPECT_TRUE(bitwise_equal(back, b));
  EXPECT_EQ(back.dim(), 2816u);
}

TEST(Bundle, RoundTripPreservesBitPatterns) {
  auto b = random_bundle(5, 3, 2, 3);
  b.image_vectors[0] = -0.0f;
  b.image_vectors[1] = std::numeric_limits<float>::denorm_min();
  b.text_vectors[0] = std::numeric_limits<float>::max();
  b.text_vectors[1] = std::numeric_limits<float>::lowest();
  b.ids[2] = "ünïcødé/中";
  const auto back = decode_bundle(encode_bundle(b));
  EXPECT_TRUE(bitwise_equal(back, b));
  EXPECT_TRUE(std::signbit(back.image_vectors[0]));
}

TEST(Bundle, SingleModality) {
  auto b = random_bundle(3, 0, 4, 5);
  EXPECT_TRUE(bitwise_equal(decode_bundle(encode_bundle(b)), b));
  b.text_dim = 0;
  b.text_vectors.clear();
  try {
    encode_bundle(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvariantViolation);
  }
}

TEST(Bundle, RefusesToWriteInvalid) {
  auto expect_refused = [](const EmbeddingBundle& b) {
    try {
      encode_bundle(b);
      ADD_FAILURE() << "encoded an invalid bundle";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvariantViolation) << e.what();
    }
  };
  auto nan = random_bundle(3, 2, 2, 1);
  nan.text_vectors[3] = std::numeric_limits<float>::quiet_NaN();
  expect_refused(nan);

  auto inf = random_bundle(3, 2, 2, 1);
  inf.image_vectors[0] = std::numeric_limits<float>::infinity();
  expect_refused(inf);

  auto dup = random_bundle(3, 2, 2, 1);
  dup.ids[2] = dup.ids[0];
  expect_refused(dup);

  auto short_payload = random_bundle(3, 2, 2, 1);
  short_payload.image_vectors.pop_back();
  expect_refused(short_payload);

  auto empty_id = random_bundle(3, 2, 2, 1);
  empty_id.ids[1].clear();
  expect_refused(empty_id);

  testing::TempDir dir("bundle");
  EXPECT_THROW(write_bundle(nan, dir / "nan.mmeb"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "nan.mmeb"));
}

TEST(Bundle, HeaderErrors) {
  const auto good = encode_bundle(random_bundle(2, 3, 2, 9));

  auto magic = good;
  magic[0] = 'X';
  EXPECT_EQ(decode_error(magic), ErrorCode::BadMagic);

  auto version = good;
  version[4] = 2;
  EXPECT_EQ(decode_error(version), ErrorCode::UnsupportedVersion);

  auto mode = good;
  mode[24] = 3;
  EXPECT_EQ(decode_error(mode), ErrorCode::InvalidHeader);

  auto reserved = good;
  reserved[26] = 1;
  EXPECT_EQ(decode_error(reserved), ErrorCode::InvalidHeader);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(decode_error(trailing), ErrorCode::TrailingBytes);

  auto huge_count = good;
  huge_count[15] = 0x7f;
  EXPECT_EQ(decode_error(huge_count), ErrorCode::TruncatedPayload);

  EXPECT_EQ(decode_error({}), ErrorCode::TruncatedPayload);
}

TEST(Bundle, TruncationAtEveryByte) {
  const auto good = encode_bundle(random_bundle(3, 4, 2, 21));
  for (std::size_t n = 0; n < good.size(); ++n) {
    const Bytes cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(decode_error(cut), ErrorCode::TruncatedPayload) << "cut at " << n;
  }
}

TEST(Bundle, NonFiniteOnRead) {
  auto b = random_bundle(2, 2, 2, 4);
  auto bytes = encode_bundle(b);
  // Overwrite the last text float with a NaN bit pattern.
  Bytes nan;
  put_f32(nan, std::numeric_limits<float>::quiet_NaN());
  std::copy(nan.begin(), nan.end(), bytes.end() - 4);
  EXPECT_EQ(decode_error(bytes), ErrorCode::NonFiniteValue);
}

TEST(Bundle, DuplicateIdsOnRead) {
  EmbeddingBundle b;
  b.ids = {"aa", "ab"};
  b.image_dim = 1;
  b.image_vectors = {1.0f, 2.0f};
  auto bytes = encode_bundle(b);
  bytes[28 + 2 + 2 + 2 + 1] = 'a';
  EXPECT_EQ(decode_error(bytes), ErrorCode::InvariantViolation);
}

TEST(Bundle, ReadErrorsNamePath) {
  testing::TempDir dir("bundle");
  {
    std::ofstream out(dir / "bad.mmeb", std::ios::binary);
    out << "NOPE0000";
  }
  try {
    read_bundle(dir / "bad.mmeb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadMagic);
    EXPECT_NE(std::string(e.what()).find("bad.mmeb"), std::string::npos);
  }
  try {
    read_bundle(dir / "absent.mmeb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(Bundle, RowsFollowIds) {
  const auto b = random_bundle(4, 3, 2, 8);
  for (std::size_t i = 0; i < b.count(); ++i) {
    EXPECT_EQ(b.image_row(i).data(), b.image_vectors.data() + i * 3);
    EXPECT_EQ(b.text_row(i).data(), b.text_vectors.data() + i * 2);
  }
}

TEST(Concat, Examples) {
  const std::vector<float> image{1, 0};
  const std::vector<float> text{0, 2, 3};
  EXPECT_EQ(concat_multimodal(image, text, 2, 3), (MultimodalVector{1, 0, 0, 2, 3}));
  EXPECT_EQ(concat_multimodal({}, std::vector<float>{5}, 0, 1), (MultimodalVector{5}));
  std::mt19937_64 rng(1);
  const auto wide = concat_multimodal(testing::random_floats(rng, 2048), testing::random_floats(rng, 768), 2048, 768);
  EXPECT_EQ(wide.size(), 2816u);
}

TEST(Concat, Errors) {
  const std::vector<float> image{1, 0};
  const std::vector<float> text{0, 2, 3};
  try {
    concat_multimodal(image, text, 3, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  const std::vector<float> bad{std::nanf("")};
  try {
    concat_multimodal(bad, text, 1, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteValue);
  }
}

TEST(Concat, BundleRow) {
  const auto b = random_bundle(3, 4, 2, 2);
  const auto v = concat_multimodal(b, 1);
  ASSERT_EQ(v.size(), 6u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(v[j], b.image_vectors[4 + j]);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(v[4 + j], b.text_vectors[2 + j]);
}

TEST(Concat, DotProductIsBlockwise) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t di = 1 + rng() % 40;
    const std::size_t dt = 1 + rng() % 20;
    const auto a = testing::random_floats(rng, di);
    const auto b = testing::random_floats(rng, dt);
    const auto c = testing::random_floats(rng, di);
    const auto d = testing::random_floats(rng, dt);
    const double whole = testing::naive_dot(concat_multimodal(a, b, di, dt), concat_multimodal(c, d, di, dt));
    const double parts = testing::naive_dot(a, c) + testing::naive_dot(b, d);
    EXPECT_NEAR(whole, parts, 1e-5 * std::max(1.0, std::abs(parts)));
  }
}

TEST(Normalize, Examples) {
  const auto r = l2_normalize(std::vector<float>{3, 4});
  EXPECT_FALSE(r.zero_vector);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_FLOAT_EQ(r.values[0], 0.6f);
  EXPECT_FLOAT_EQ(r.values[1], 0.8f);

  const auto z = l2_normalize(std::vector<float>{0, 0});
  EXPECT_TRUE(z.zero_vector);
  EXPECT_EQ(z.values, (MultimodalVector{0, 0}));

  std::vector<float> in_place{0, 0, 0};
  EXPECT_FALSE(l2_normalize_in_place(in_place));
  in_place = {0, 5, 0};
  EXPECT_TRUE(l2_normalize_in_place(in_place));
  EXPECT_EQ(in_place, (std::vector<float>{0, 1, 0}));
}

TEST(Normalize, UnitNormProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = testing::random_floats(rng, 16);
    const float scale = static_cast<float>(std::pow(10.0, static_cast<int>(rng() % 9) - 4));
    for (auto& x : v) x *= scale;
    const auto r = l2_normalize(v);
    double norm = 0;
    for (float x : r.values) norm += static_cast<double>(x) * x;
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
    // Same direction: positive dot with the input and proportional components.
    EXPECT_GT(testing::naive_dot(v, r.values), 0.0);
  }
}

}  // namespace
}  // namespace melrag
