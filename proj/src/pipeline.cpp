#include "melrag/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <iterator>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "melrag/error.hpp"

namespace melrag {
namespace {

std::string load_image_base64(const std::optional<std::string>& ref, const std::filesystem::path& root) {
  if (!ref) return {};
  const std::filesystem::path path = root.empty() ? std::filesystem::path(*ref) : root / *ref;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read image " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return base64_encode(bytes);
}

BackendResponse call_with_retries(InferenceBackend& backend, const BackendRequest& request,
                                  const ClassifyOptions& options) {
  auto backoff = options.initial_backoff;
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return backend.complete(request);
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= options.retries) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

MultimodalVector vector_from_row(const EmbeddingBundle& embeddings, std::size_t row, const CaseIndex& index) {
  if (embeddings.image_dim != index.image_dim() || embeddings.text_dim != index.text_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query embeddings are " + std::to_string(embeddings.image_dim) + "+" +
                    std::to_string(embeddings.text_dim) + ", index is " + std::to_string(index.image_dim()) + "+" +
                    std::to_string(index.text_dim()));
  }
  auto vec = concat_multimodal(embeddings, row);
  if (index.normalized()) l2_normalize_in_place(vec);
  return vec;
}

}  // namespace

NeighborList retrieve_neighbors(const CaseIndex& index, std::string_view query_id, std::span<const float> query_vector,
                                std::size_t k) {
  if (k == 0) return {};
  QueryOptions opts;
  opts.exclude_row = index.find(query_id);
  return query_top_k(index, query_vector, k, opts);
}

MultimodalVector query_vector_for(const EmbeddingBundle& embeddings, std::string_view id, const CaseIndex& index) {
  std::size_t row = embeddings.count();
  for (std::size_t i = 0; i < embeddings.count(); ++i) {
    if (embeddings.ids[i] == id) {
      row = i;
      break;
    }
  }
  if (row == embeddings.count()) {
    throw Error(ErrorCode::UnknownCaseId, "no embedding for case '" + std::string(id) + "'");
  }
  return vector_from_row(embeddings, row, index);
}

PredictionRecord classify_case(const CaseRecord& query, std::span<const float> query_vector, const CaseIndex& index,
                               const CaseStore& store, InferenceBackend& backend, const ClassifyOptions& options) {
  const auto neighbors = retrieve_neighbors(index, query.id, query_vector, options.k);

  PredictionRecord pred;
  pred.id = query.id;
  std::vector<CaseRecord> examples;
  examples.reserve(neighbors.size());
  for (const auto& n : neighbors) {
    examples.push_back(store.at(n.id));
    pred.neighbors_used.push_back(n.id);
  }

  const PromptBundle prompt = build_prompt(query, examples, options.mode, examples.size(), options.prompt);
  if (options.on_prompt) options.on_prompt(query, prompt);

  BackendRequest request;
  request.prompt_text = prompt.text;
  if (options.attach_images) {
    std::vector<std::optional<std::string>> refs;
    for (const auto& e : examples) refs.push_back(e.image_ref);
    refs.push_back(query.image_ref);
    for (const auto& ref : refs) request.images.push_back(load_image_base64(ref, options.image_root));
  }

  try {
    const auto response = call_with_retries(backend, request, options);
    pred.raw_text = response.text;
    pred.predicted = parse_response(response.text);
  } catch (const BackendError& e) {
    pred.error = e.what();
  }
  return pred;
}

std::vector<PredictionRecord> classify_cases(std::span<const CaseRecord> queries,
                                             const EmbeddingBundle& query_embeddings, const CaseIndex& index,
                                             const CaseStore& store, InferenceBackend& backend,
                                             const ClassifyOptions& options) {
  if (options.max_in_flight < 1) throw Error(ErrorCode::InvalidConfig, "max_in_flight must be at least 1");

  std::unordered_map<std::string_view, std::size_t> row_of;
  row_of.reserve(query_embeddings.count());
  for (std::size_t i = 0; i < query_embeddings.count(); ++i) row_of.emplace(query_embeddings.ids[i], i);

  // Resolve every vector up front so a missing embedding fails before any
  // backend call is made.
  std::vector<MultimodalVector> vectors;
  vectors.reserve(queries.size());
  for (const auto& q : queries) {
    auto it = row_of.find(q.id);
    if (it == row_of.end()) throw Error(ErrorCode::UnknownCaseId, "no embedding for case '" + q.id + "'");
    vectors.push_back(vector_from_row(query_embeddings, it->second, index));
  }

  std::vector<PredictionRecord> out(queries.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      try {
        out[i] = classify_case(queries[i], vectors[i], index, store, backend, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = queries.size();
      }
    }
  };

  const std::size_t workers = std::min(options.max_in_flight, std::max<std::size_t>(queries.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace melrag
