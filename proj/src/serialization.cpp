#include "melrag/serialization.hpp"

#include <cctype>

namespace melrag {
namespace {

constexpr std::string_view kUnknown = "unknown";

std::string age_text(const ClinicalMetadata& m) {
  return m.age ? std::to_string(*m.age) : std::string(kUnknown);
}

std::string sex_text(const ClinicalMetadata& m) {
  return m.sex ? std::string(to_string(*m.sex)) : std::string(kUnknown);
}

std::string site_text(const ClinicalMetadata& m) {
  return m.anatomical_site ? *m.anatomical_site : std::string(kUnknown);
}

std::string capitalized(std::string text) {
  if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text;
}

std::string html_escaped(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SerializationMode mode) {
  switch (mode) {
    case SerializationMode::Sentence: return "sentence";
    case SerializationMode::AttributeValue: return "attribute_value";
    case SerializationMode::Html: return "html";
  }
  return "unknown";
}

std::optional<SerializationMode> parse_serialization_mode(std::string_view text) {
  for (auto mode : kAllSerializationModes) {
    if (text == to_string(mode)) return mode;
  }
  if (text == "attribute-value" || text == "av") return SerializationMode::AttributeValue;
  return std::nullopt;
}

std::string serialize_metadata(const ClinicalMetadata& m, SerializationMode mode) {
  switch (mode) {
    case SerializationMode::Sentence:
      return "Age is " + age_text(m) + ", Sex is " + sex_text(m) + ", Anatomical site is " + site_text(m) + ".";

    case SerializationMode::AttributeValue: {
      // Present values are capitalized; "unknown" stays lowercase.
      const std::string sex = m.sex ? capitalized(sex_text(m)) : std::string(kUnknown);
      const std::string site = m.anatomical_site ? capitalized(site_text(m)) : std::string(kUnknown);
      return "Age: " + age_text(m) + ", Sex: " + sex + ", Anatomical site: " + site;
    }

    case SerializationMode::Html:
      return "<table><tr><th>Age</th><th>Sex</th><th>Anatomical site</th></tr><tr><td>" + age_text(m) +
             "</td><td>" + sex_text(m) + "</td><td>" + html_escaped(site_text(m)) + "</td></tr></table>";
  }
  return {};
}

}  // namespace melrag
