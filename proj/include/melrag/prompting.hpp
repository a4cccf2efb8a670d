#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "melrag/serialization.hpp"
#include "melrag/types.hpp"

namespace melrag {

inline constexpr std::string_view kImagePlaceholder = "<image>";
inline constexpr std::string_view kDefaultInstruction =
    "You are a dermatology assistant. Based on the example cases, classify the final skin lesion as malignant or "
    "benign. Answer with exactly one word: malignant or benign.";

struct PromptOptions {
  std::string instruction{kDefaultInstruction};
};

// text carries one kImagePlaceholder per entry of image_refs, in the same
// order: retrieved examples first, the query last. A case without an image
// contributes an empty ref.
struct PromptBundle {
  std::string text;
  std::vector<std::string> image_refs;
  std::size_t k = 0;
};

// Layout (blocks separated by a blank line):
//
//   <instruction>
//
//   Example 1:
//   <image>
//   <serialized metadata>
//   Diagnosis: benign
//
//   Query:
//   <image>
//   <serialized metadata>
//   Diagnosis:
//
// The query's own label is never written. Throws NeighborCountMismatch when
// neighbors.size() != k.
PromptBundle build_prompt(const CaseRecord& query, std::span<const CaseRecord> neighbors, SerializationMode mode,
                          std::size_t k, const PromptOptions& options = {});

// First "malignant"/"benign" word (case-insensitive) wins. If "not", "no" or a
// "...n't" word appears within the two preceding words the label is flipped.
// nullopt when neither word occurs.
std::optional<Label> parse_response(std::string_view raw);

// Labels written on the "Diagnosis: <label>" lines of a built prompt, in
// example order. The query block's empty "Diagnosis:" is skipped.
std::vector<Label> example_labels(std::string_view prompt_text);

}  // namespace melrag
