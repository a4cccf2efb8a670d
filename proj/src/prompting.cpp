#include "melrag/prompting.hpp"

#include <cctype>

#include "melrag/error.hpp"

namespace melrag {
namespace {

constexpr std::string_view kDiagnosisPrefix = "Diagnosis:";

void append_block(std::string& text, std::string_view header, const ClinicalMetadata& meta, SerializationMode mode,
                  std::optional<Label> label) {
  text += header;
  text += '\n';
  text += kImagePlaceholder;
  text += '\n';
  text += serialize_metadata(meta, mode);
  text += '\n';
  text += kDiagnosisPrefix;
  if (label) {
    text += ' ';
    text += to_string(*label);
  }
}

// Lowercased runs of letters and inner apostrophes ("isn't"); quotes around a
// word are dropped.
std::vector<std::string> words(std::string_view raw) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && current.back() == '\'') current.pop_back();
    const auto first = current.find_first_not_of('\'');
    if (first != std::string::npos) out.push_back(current.substr(first));
    current.clear();
  };
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c) || c == '\'') {
      current += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool is_negator(std::string_view word) {
  return word == "not" || word == "no" || (word.size() > 3 && word.ends_with("n't"));
}

}  // namespace

PromptBundle build_prompt(const CaseRecord& query, std::span<const CaseRecord> neighbors, SerializationMode mode,
                          std::size_t k, const PromptOptions& options) {
  if (neighbors.size() != k) {
    throw Error(ErrorCode::NeighborCountMismatch,
                "got " + std::to_string(neighbors.size()) + " neighbors for k=" + std::to_string(k));
  }
  PromptBundle prompt;
  prompt.k = k;
  prompt.text = options.instruction;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    prompt.text += "\n\n";
    append_block(prompt.text, "Example " + std::to_string(i + 1) + ":", neighbors[i].metadata, mode,
                 neighbors[i].label);
    prompt.image_refs.push_back(neighbors[i].image_ref.value_or(""));
  }
  prompt.text += "\n\n";
  append_block(prompt.text, "Query:", query.metadata, mode, std::nullopt);
  prompt.image_refs.push_back(query.image_ref.value_or(""));
  return prompt;
}

std::optional<Label> parse_response(std::string_view raw) {
  const auto tokens = words(raw);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::optional<Label> label = parse_label(tokens[i]);
    if (!label) continue;
    const bool negated = (i >= 1 && is_negator(tokens[i - 1])) || (i >= 2 && is_negator(tokens[i - 2]));
    if (negated) label = *label == Label::Malignant ? Label::Benign : Label::Malignant;
    return label;
  }
  return std::nullopt;
}

std::vector<Label> example_labels(std::string_view prompt_text) {
  std::vector<Label> labels;
  std::size_t pos = 0;
  while (pos <= prompt_text.size()) {
    const std::size_t end = std::min(prompt_text.find('\n', pos), prompt_text.size());
    const std::string_view line = prompt_text.substr(pos, end - pos);
    if (line.starts_with(kDiagnosisPrefix)) {
      if (auto label = parse_label(line.substr(kDiagnosisPrefix.size()))) labels.push_back(*label);
    }
    pos = end + 1;
  }
  return labels;
}

}  // namespace melrag
