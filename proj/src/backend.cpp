#include "melrag/backend.hpp"

#include "json.hpp"
#include "melrag/prompting.hpp"

namespace melrag {
namespace {

using json = nlohmann::json;

json chat_content(const BackendRequest& request, bool elide_images) {
  json parts = json::array();
  std::string_view text = request.prompt_text;
  std::size_t image = 0;
  for (;;) {
    const auto at = text.find(kImagePlaceholder);
    const auto segment = text.substr(0, at);
    if (!segment.empty()) parts.push_back({{"type", "text"}, {"text", std::string(segment)}});
    if (at == std::string_view::npos) break;
    const std::string data = image < request.images.size() ? request.images[image] : std::string();
    const std::string url = elide_images ? "data:image/jpeg;base64,<" + std::to_string(data.size()) + " chars>"
                                         : "data:image/jpeg;base64," + data;
    parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    ++image;
    text.remove_prefix(at + kImagePlaceholder.size());
  }
  return parts;
}

}  // namespace

void BackendConfig::validate() const {
  if (kind == BackendKind::Http && (!endpoint || endpoint->empty())) {
    throw Error(ErrorCode::InvalidConfig, "http backend needs an endpoint");
  }
  if (kind == BackendKind::Mock && endpoint) {
    throw Error(ErrorCode::InvalidConfig, "endpoint given for the mock backend");
  }
  if (max_in_flight < 1) throw Error(ErrorCode::InvalidConfig, "max_in_flight must be at least 1");
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
}

Label mock_predict(std::span<const Label> neighbor_labels) {
  std::size_t malignant = 0;
  for (auto l : neighbor_labels) malignant += l == Label::Malignant ? 1 : 0;
  return 2 * malignant > neighbor_labels.size() ? Label::Malignant : Label::Benign;
}

Label mock_predict(std::span<const CaseRecord> neighbors) {
  std::vector<Label> labels;
  labels.reserve(neighbors.size());
  for (const auto& n : neighbors) labels.push_back(n.label);
  return mock_predict(labels);
}

BackendResponse MockBackend::complete(const BackendRequest& request) {
  const auto labels = example_labels(request.prompt_text);
  return {std::string(to_string(mock_predict(labels)))};
}

std::string encode_request_body(const BackendRequest& request, const BackendConfig& config, bool elide_images) {
  json body;
  if (config.adapter == WireAdapter::Neutral) {
    body["prompt"] = request.prompt_text;
    json images = json::array();
    for (const auto& img : request.images) {
      images.push_back(elide_images ? "<" + std::to_string(img.size()) + " chars>" : img);
    }
    body["images"] = std::move(images);
  } else {
    body["messages"] = json::array({{{"role", "user"}, {"content", chat_content(request, elide_images)}}});
  }
  if (config.model) body["model"] = *config.model;
  if (config.temperature) body["temperature"] = *config.temperature;
  if (config.max_tokens) body["max_tokens"] = *config.max_tokens;
  return body.dump();
}

std::string decode_response_text(std::string_view body, WireAdapter adapter) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw BackendError(ErrorCode::BackendUnavailable, "response body is not a JSON object", false);
  }
  if (adapter == WireAdapter::Neutral) {
    auto it = doc.find("text");
    if (it == doc.end() || !it->is_string()) {
      throw BackendError(ErrorCode::BackendUnavailable, "response has no string 'text'", false);
    }
    return it->get<std::string>();
  }
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers answer with a list of content parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const json::exception&) {
    throw BackendError(ErrorCode::BackendUnavailable, "response has no choices[0].message.content", false);
  }
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t{data[i]} << 16) | (std::uint32_t{data[i + 1]} << 8) | data[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = data.size() - i; rest > 0) {
    std::uint32_t v = std::uint32_t{data[i]} << 16;
    if (rest == 2) v |= std::uint32_t{data[i + 1]} << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::unique_ptr<InferenceBackend> make_backend(const BackendConfig& config, TraceSink trace) {
  config.validate();
  if (config.kind == BackendKind::Mock) return std::make_unique<MockBackend>();
  return std::make_unique<HttpBackend>(config, std::move(trace));
}

}  // namespace melrag
