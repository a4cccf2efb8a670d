#include "melrag/types.hpp"

#include <algorithm>
#include <cctype>

#include "melrag/error.hpp"

namespace melrag {
namespace {

std::string lowercase_trimmed(std::string_view text) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto first = std::find_if(text.begin(), text.end(), not_space);
  auto last = std::find_if(text.rbegin(), text.rend(), not_space).base();
  std::string out;
  if (first < last) out.assign(first, last);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool has_control_char(std::string_view text) {
  return std::any_of(text.begin(), text.end(), [](unsigned char c) { return c < 0x20 || c == 0x7f; });
}

}  // namespace

std::string_view to_string(Sex sex) {
  return sex == Sex::Female ? "female" : "male";
}

std::string_view to_string(Label label) {
  return label == Label::Malignant ? "malignant" : "benign";
}

std::optional<Sex> parse_sex(std::string_view text) {
  const auto norm = lowercase_trimmed(text);
  if (norm == "male") return Sex::Male;
  if (norm == "female") return Sex::Female;
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view text) {
  const auto norm = lowercase_trimmed(text);
  if (norm == "malignant") return Label::Malignant;
  if (norm == "benign") return Label::Benign;
  return std::nullopt;
}

void validate_metadata(const ClinicalMetadata& metadata, std::string_view context) {
  const std::string where = context.empty() ? std::string() : std::string(context) + ": ";
  if (metadata.age && (*metadata.age < 0 || *metadata.age > kMaxAge)) {
    throw Error(ErrorCode::InvalidAge, where + "age " + std::to_string(*metadata.age) + " outside [0, 130]");
  }
  if (metadata.sex && *metadata.sex != Sex::Male && *metadata.sex != Sex::Female) {
    throw Error(ErrorCode::InvalidSex, where + "sex holds a value outside {male, female}");
  }
  if (metadata.anatomical_site) {
    const auto& site = *metadata.anatomical_site;
    if (site.empty()) throw Error(ErrorCode::InvalidSite, where + "anatomical_site is empty");
    if (has_control_char(site)) {
      throw Error(ErrorCode::InvalidSite, where + "anatomical_site contains control characters");
    }
    // "unknown" is what missing values render as.
    if (lowercase_trimmed(site) == "unknown") {
      throw Error(ErrorCode::InvalidSite, where + "anatomical_site 'unknown' must be stored as absent");
    }
  }
}

const CaseRecord& validate_case(const CaseRecord& record) {
  if (record.id.empty()) throw Error(ErrorCode::EmptyId, "case id is empty");
  if (record.label != Label::Benign && record.label != Label::Malignant) {
    throw Error(ErrorCode::InvalidLabel, "case '" + record.id + "': label outside {malignant, benign}");
  }
  if (record.image_ref && record.image_ref->empty()) {
    throw Error(ErrorCode::InvalidImageRef, "case '" + record.id + "': image_ref is empty");
  }
  validate_metadata(record.metadata, "case '" + record.id + "'");
  return record;
}

}  // namespace melrag
