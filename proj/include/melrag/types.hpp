#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace melrag {

enum class Sex : std::uint8_t { Male, Female };
enum class Label : std::uint8_t { Benign, Malignant };

inline constexpr int kMaxAge = 130;

std::string_view to_string(Sex sex);
std::string_view to_string(Label label);

// Case-insensitive; surrounding whitespace ignored.
std::optional<Sex> parse_sex(std::string_view text);
std::optional<Label> parse_label(std::string_view text);

struct ClinicalMetadata {
  std::optional<int> age;
  std::optional<Sex> sex;
  std::optional<std::string> anatomical_site;

  friend bool operator==(const ClinicalMetadata&, const ClinicalMetadata&) = default;
};

struct CaseRecord {
  std::string id;
  ClinicalMetadata metadata;
  Label label = Label::Benign;
  std::optional<std::string> image_ref;

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

struct PredictionRecord {
  std::string id;
  std::optional<Label> predicted;  // nullopt: the backend text had no class token
  std::string raw_text;
  std::vector<std::string> neighbors_used;
  std::optional<std::string> error;  // set when the backend failed for this case

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct ConfusionCounts {
  std::uint64_t tn = 0;
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;

  std::uint64_t total() const { return tn + tp + fn + fp; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Returns the record unchanged when every field invariant holds, otherwise
// throws melrag::Error naming the offending field.
const CaseRecord& validate_case(const CaseRecord& record);
void validate_metadata(const ClinicalMetadata& metadata, std::string_view context = {});

}  // namespace melrag
