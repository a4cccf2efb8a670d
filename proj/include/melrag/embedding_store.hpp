#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "melrag/serialization.hpp"

namespace melrag {

// Bundle file layout, all integers little-endian:
//
//   "MMEB" | version u32 (=1) | count u64 | image_dim u32 | text_dim u32 |
//   serialization_mode u8 | 3 reserved zero bytes |
//   count x (id length u16 | UTF-8 id bytes) |
//   count x image_dim f32 (row-major) | count x text_dim f32 (row-major)
inline constexpr char kBundleMagic[4] = {'M', 'M', 'E', 'B'};
inline constexpr std::uint32_t kBundleVersion = 1;
inline constexpr std::size_t kBundleHeaderSize = 28;

using MultimodalVector = std::vector<float>;

// Aligned per-case image and text embeddings. Row i of both arrays belongs to
// ids[i]. One of the two dims may be zero for single-modality bundles.
struct EmbeddingBundle {
  std::vector<std::string> ids;
  std::uint32_t image_dim = 0;
  std::uint32_t text_dim = 0;
  std::vector<float> image_vectors;
  std::vector<float> text_vectors;
  SerializationMode serialization_mode = SerializationMode::AttributeValue;

  std::size_t count() const { return ids.size(); }
  std::size_t dim() const { return std::size_t{image_dim} + text_dim; }
  std::span<const float> image_row(std::size_t i) const;
  std::span<const float> text_row(std::size_t i) const;

  // Throws InvariantViolation or NonFiniteValue.
  void validate() const;

  friend bool operator==(const EmbeddingBundle&, const EmbeddingBundle&) = default;
};

// Compares ids, dims, mode and every float bit pattern (NaN-safe, -0 != +0).
bool bitwise_equal(const EmbeddingBundle& a, const EmbeddingBundle& b);

std::vector<std::uint8_t> encode_bundle(const EmbeddingBundle& bundle);
// Decodes a whole buffer; trailing bytes are an error.
EmbeddingBundle decode_bundle(std::span<const std::uint8_t> data);

void write_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& destination);
EmbeddingBundle read_bundle(const std::filesystem::path& source);

// Image components first, text second, copied unmodified.
MultimodalVector concat_multimodal(std::span<const float> image_vec, std::span<const float> text_vec,
                                   std::size_t image_dim, std::size_t text_dim);
MultimodalVector concat_multimodal(const EmbeddingBundle& bundle, std::size_t row);

struct NormalizeResult {
  MultimodalVector values;
  bool zero_vector = false;  // input had zero norm and was returned unchanged
};

NormalizeResult l2_normalize(std::span<const float> vec);
// Returns false (and leaves the data untouched) for a zero vector.
bool l2_normalize_in_place(std::span<float> vec);

}  // namespace melrag
