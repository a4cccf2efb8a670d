#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "melrag/embedding_store.hpp"

namespace melrag {

// Index file layout: "MMIX" | version u32 (=1) | normalized u8 | embedded
// bundle (the MMEB layout) holding the stored rows split back into their
// image and text blocks.
inline constexpr char kIndexMagic[4] = {'M', 'M', 'I', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

struct RetrievedNeighbor {
  std::string id;
  float score = 0.0f;        // dot product, accumulated in f64
  std::size_t position = 0;  // row in the index

  friend bool operator==(const RetrievedNeighbor&, const RetrievedNeighbor&) = default;
};

using NeighborList = std::vector<RetrievedNeighbor>;

struct IndexBuildInfo {
  bool empty = false;                 // queries will return nothing
  std::size_t zero_norm_rows = 0;     // rows left unnormalized (normalize=true only)
};

// Exact flat index over concatenated image+text vectors. Immutable once built;
// any number of threads may query it concurrently.
class CaseIndex {
 public:
  CaseIndex() = default;

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  std::uint32_t image_dim() const { return image_dim_; }
  std::uint32_t text_dim() const { return text_dim_; }
  bool normalized() const { return normalized_; }
  SerializationMode serialization_mode() const { return mode_; }

  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const std::string> ids() const { return ids_; }
  std::span<const float> row(std::size_t r) const;
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  friend CaseIndex build_index(const EmbeddingBundle&, bool, IndexBuildInfo&);
  friend CaseIndex decode_index(std::span<const std::uint8_t>);

  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<float> vectors_;  // size() x dim_, row-major
  std::size_t dim_ = 0;
  std::uint32_t image_dim_ = 0;
  std::uint32_t text_dim_ = 0;
  bool normalized_ = false;
  SerializationMode mode_ = SerializationMode::AttributeValue;
};

// Stores row i as concat(image_i, text_i), L2-normalized iff normalize.
CaseIndex build_index(const EmbeddingBundle& bundle, bool normalize);
CaseIndex build_index(const EmbeddingBundle& bundle, bool normalize, IndexBuildInfo& info);

struct QueryOptions {
  std::optional<std::size_t> exclude_row;  // skipped during the scan
};

// Returns min(k, eligible rows) neighbors by descending score; equal scores
// keep ascending row order. Scores are computed row by row in a fixed
// sequential order, so results do not depend on threading.
NeighborList query_top_k(const CaseIndex& index, std::span<const float> query, std::size_t k,
                         const QueryOptions& options = {});

// result[i] == query_top_k(index, queries[i], k). threads = 0 picks the
// hardware concurrency.
std::vector<NeighborList> batch_query(const CaseIndex& index, std::span<const MultimodalVector> queries, std::size_t k,
                                      unsigned threads = 0);

std::vector<std::uint8_t> encode_index(const CaseIndex& index);
CaseIndex decode_index(std::span<const std::uint8_t> data);
void save_index(const CaseIndex& index, const std::filesystem::path& destination);
CaseIndex load_index(const std::filesystem::path& source);

}  // namespace melrag
