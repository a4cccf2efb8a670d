#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "melrag/types.hpp"

namespace melrag {

// Numeric values are the on-disk codes used by the bundle format.
enum class SerializationMode : std::uint8_t { Sentence = 0, AttributeValue = 1, Html = 2 };

inline constexpr std::array kAllSerializationModes = {
    SerializationMode::Sentence, SerializationMode::AttributeValue, SerializationMode::Html};

std::string_view to_string(SerializationMode mode);  // "sentence", "attribute_value", "html"
std::optional<SerializationMode> parse_serialization_mode(std::string_view text);

// Renders metadata as text in fixed field order Age, Sex, Anatomical site.
// Missing fields render as "unknown".
//
//   sentence:        Age is 45, Sex is female, Anatomical site is posterior torso.
//   attribute_value: Age: 45, Sex: Female, Anatomical site: Posterior torso
//   html:            <table><tr><th>Age</th>...</tr><tr><td>45</td>...</tr></table>
//
// Only html escapes <, > and &.
std::string serialize_metadata(const ClinicalMetadata& metadata, SerializationMode mode);

}  // namespace melrag
