#include "melrag/retrieval_index.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "byte_io.hpp"
#include "melrag/error.hpp"

namespace melrag {
namespace {

struct Candidate {
  double score;
  std::size_t pos;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
  return a.score > b.score || (a.score == b.score && a.pos < b.pos);
}

// Bounded selection; the heap front is the weakest kept candidate.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(double score, std::size_t pos) {
    const Candidate c{score, pos};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    } else if (ranks_before(c, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    }
  }

  std::vector<Candidate> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), ranks_before);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

// Four rows per pass over the query. Each row keeps its own accumulator and
// sums in ascending component order, so every score equals the plain
// sequential loop bit for bit (f32*f32 is exact in f64).
void scan_rows(const float* rows, std::size_t dim, std::size_t begin, std::size_t end, const float* query,
               TopK& top) {
  std::size_t r = begin;
  for (; r + 4 <= end; r += 4) {
    const float* v0 = rows + r * dim;
    const float* v1 = v0 + dim;
    const float* v2 = v1 + dim;
    const float* v3 = v2 + dim;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double q = query[j];
      a0 += q * static_cast<double>(v0[j]);
      a1 += q * static_cast<double>(v1[j]);
      a2 += q * static_cast<double>(v2[j]);
      a3 += q * static_cast<double>(v3[j]);
    }
    top.offer(a0, r);
    top.offer(a1, r + 1);
    top.offer(a2, r + 2);
    top.offer(a3, r + 3);
  }
  for (; r < end; ++r) {
    const float* v = rows + r * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc += static_cast<double>(query[j]) * static_cast<double>(v[j]);
    top.offer(acc, r);
  }
}

void check_query(const CaseIndex& index, std::span<const float> query, std::size_t position) {
  if (query.size() != index.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query " + std::to_string(position) + " has dim " +
                                                  std::to_string(query.size()) + ", index dim is " +
                                                  std::to_string(index.dim()));
  }
  for (float v : query) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "query " + std::to_string(position) + " is not finite");
  }
}

NeighborList top_k_unchecked(const CaseIndex& index, std::span<const float> query, std::size_t k,
                             const QueryOptions& options) {
  TopK top(k);
  const float* rows = index.size() == 0 ? nullptr : index.row(0).data();
  const std::size_t n = index.size();
  if (options.exclude_row && *options.exclude_row < n) {
    scan_rows(rows, index.dim(), 0, *options.exclude_row, query.data(), top);
    scan_rows(rows, index.dim(), *options.exclude_row + 1, n, query.data(), top);
  } else {
    scan_rows(rows, index.dim(), 0, n, query.data(), top);
  }
  NeighborList out;
  for (const auto& c : std::move(top).sorted()) {
    out.push_back({index.id(c.pos), static_cast<float>(c.score), c.pos});
  }
  return out;
}

}  // namespace

std::span<const float> CaseIndex::row(std::size_t r) const {
  return std::span<const float>(vectors_).subspan(r * dim_, dim_);
}

std::optional<std::size_t> CaseIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

CaseIndex build_index(const EmbeddingBundle& bundle, bool normalize, IndexBuildInfo& info) {
  bundle.validate();
  CaseIndex index;
  index.ids_ = bundle.ids;
  index.image_dim_ = bundle.image_dim;
  index.text_dim_ = bundle.text_dim;
  index.dim_ = bundle.dim();
  index.normalized_ = normalize;
  index.mode_ = bundle.serialization_mode;
  index.by_id_.reserve(bundle.count());
  for (std::size_t i = 0; i < bundle.count(); ++i) index.by_id_.emplace(bundle.ids[i], i);

  index.vectors_.resize(bundle.count() * index.dim_);
  info = IndexBuildInfo{};
  info.empty = bundle.count() == 0;
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    float* dst = index.vectors_.data() + i * index.dim_;
    std::copy_n(bundle.image_row(i).data(), bundle.image_dim, dst);
    std::copy_n(bundle.text_row(i).data(), bundle.text_dim, dst + bundle.image_dim);
    if (normalize && !l2_normalize_in_place({dst, index.dim_})) ++info.zero_norm_rows;
  }
  return index;
}

CaseIndex build_index(const EmbeddingBundle& bundle, bool normalize) {
  IndexBuildInfo info;
  return build_index(bundle, normalize, info);
}

NeighborList query_top_k(const CaseIndex& index, std::span<const float> query, std::size_t k,
                         const QueryOptions& options) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  check_query(index, query, 0);
  return top_k_unchecked(index, query, k, options);
}

std::vector<NeighborList> batch_query(const CaseIndex& index, std::span<const MultimodalVector> queries, std::size_t k,
                                      unsigned threads) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  for (std::size_t i = 0; i < queries.size(); ++i) check_query(index, queries[i], i);

  std::vector<NeighborList> results(queries.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, queries.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) results[i] = top_k_unchecked(index, queries[i], k, {});
    return results;
  }

  // Contiguous slices; each query is computed by exactly one worker.
  const std::size_t per = (queries.size() + threads - 1) / threads;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * per;
    const std::size_t end = std::min(queries.size(), begin + per);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) results[i] = top_k_unchecked(index, queries[i], k, {});
    });
  }
  workers.clear();
  return results;
}

std::vector<std::uint8_t> encode_index(const CaseIndex& index) {
  EmbeddingBundle stored;
  stored.ids.assign(index.ids().begin(), index.ids().end());
  stored.image_dim = index.image_dim();
  stored.text_dim = index.text_dim();
  stored.serialization_mode = index.serialization_mode();
  stored.image_vectors.reserve(index.size() * index.image_dim());
  stored.text_vectors.reserve(index.size() * index.text_dim());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto row = index.row(r);
    stored.image_vectors.insert(stored.image_vectors.end(), row.begin(), row.begin() + index.image_dim());
    stored.text_vectors.insert(stored.text_vectors.end(), row.begin() + index.image_dim(), row.end());
  }
  detail::ByteWriter out;
  out.bytes(std::string_view(kIndexMagic, 4));
  out.u32(kIndexVersion);
  out.u8(index.normalized() ? 1 : 0);
  const auto bundle_bytes = encode_bundle(stored);
  out.buffer().insert(out.buffer().end(), bundle_bytes.begin(), bundle_bytes.end());
  return std::move(out.buffer());
}

CaseIndex decode_index(std::span<const std::uint8_t> data) {
  detail::ByteReader in(data);
  if (in.bytes(4, "index magic") != std::string_view(kIndexMagic, 4)) {
    throw Error(ErrorCode::BadMagic, "not an index file (magic is not MMIX)");
  }
  const auto version = in.u32("index version");
  if (version != kIndexVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "index version " + std::to_string(version) + " (supported: 1)");
  }
  const auto normalized = in.u8("normalized flag");
  if (normalized > 1) throw Error(ErrorCode::InvalidHeader, "normalized flag byte " + std::to_string(normalized));
  const EmbeddingBundle stored = decode_bundle(data.subspan(in.position()));
  // Stored rows are already in final form; never renormalize on load.
  CaseIndex index = build_index(stored, false);
  index.normalized_ = normalized == 1;
  return index;
}

void save_index(const CaseIndex& index, const std::filesystem::path& destination) {
  const auto bytes = encode_index(index);
  detail::write_file_bytes(destination.string(), bytes);
}

CaseIndex load_index(const std::filesystem::path& source) {
  const auto bytes = detail::read_file_bytes(source.string());
  try {
    return decode_index(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), source.string() + ": " + e.message());
  }
}

}  // namespace melrag
