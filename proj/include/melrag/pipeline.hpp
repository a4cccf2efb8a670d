#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <span>
#include <string>

#include "melrag/backend.hpp"
#include "melrag/dataset.hpp"
#include "melrag/prompting.hpp"
#include "melrag/retrieval_index.hpp"

namespace melrag {

struct ClassifyOptions {
  SerializationMode mode = SerializationMode::AttributeValue;
  std::size_t k = 2;
  std::size_t retries = 2;
  std::chrono::milliseconds initial_backoff{250};
  std::size_t max_in_flight = 1;
  PromptOptions prompt;

  // Read each image_ref (relative to image_root) and send it base64 encoded.
  bool attach_images = false;
  std::filesystem::path image_root;

  // Called once per case with the prompt that was sent. May run on worker
  // threads.
  std::function<void(const CaseRecord&, const PromptBundle&)> on_prompt;
};

// Top-k neighbors for a query vector, skipping the row that carries the
// query's own id. k = 0 returns nothing.
NeighborList retrieve_neighbors(const CaseIndex& index, std::string_view query_id, std::span<const float> query_vector,
                                std::size_t k);

// Full path for one case. Backend failures (after retries) do not throw: the
// record comes back unparsed with error set.
PredictionRecord classify_case(const CaseRecord& query, std::span<const float> query_vector, const CaseIndex& index,
                               const CaseStore& store, InferenceBackend& backend, const ClassifyOptions& options);

// Query vectors are taken from query_embeddings by id (and normalized when the
// index is). Output order follows queries; up to max_in_flight backend calls
// run at once.
std::vector<PredictionRecord> classify_cases(std::span<const CaseRecord> queries,
                                             const EmbeddingBundle& query_embeddings, const CaseIndex& index,
                                             const CaseStore& store, InferenceBackend& backend,
                                             const ClassifyOptions& options);

// Concatenated (and, for a normalized index, normalized) query vector for id.
MultimodalVector query_vector_for(const EmbeddingBundle& embeddings, std::string_view id, const CaseIndex& index);

}  // namespace melrag
