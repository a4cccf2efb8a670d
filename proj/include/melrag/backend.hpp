#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "melrag/error.hpp"
#include "melrag/types.hpp"

namespace melrag {

enum class BackendKind { Mock, Http };

// Neutral:    POST {"prompt": str, "images": [base64, ...]} -> {"text": str}
// OpenAiChat: POST a chat-completions body whose single user message
//             interleaves text parts and data-URI image parts at the
//             placeholder positions -> choices[0].message.content
enum class WireAdapter { Neutral, OpenAiChat };

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::optional<std::string> endpoint;  // required iff kind == Http
  double timeout_s = 60.0;
  std::size_t max_in_flight = 1;
  std::size_t retries = 2;
  std::chrono::milliseconds initial_backoff{250};  // doubled after each failed attempt
  WireAdapter adapter = WireAdapter::Neutral;

  // Passed through to the endpoint only when set.
  std::optional<std::string> model;
  std::optional<double> temperature;
  std::optional<int> max_tokens;

  void validate() const;  // throws InvalidConfig
};

struct BackendRequest {
  std::string prompt_text;
  std::vector<std::string> images;  // base64, same order as the prompt's placeholders
};

struct BackendResponse {
  std::string text;
};

// Raised by a backend for a failed call. Code is BackendUnavailable or Timeout.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message, bool retryable)
      : Error(code, message), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;
  // Must be safe to call from several threads at once.
  virtual BackendResponse complete(const BackendRequest& request) = 0;
};

// Majority of the neighbor labels; a tie or no neighbors gives benign.
Label mock_predict(std::span<const Label> neighbor_labels);
Label mock_predict(std::span<const CaseRecord> neighbors);

// Offline stand-in for the model: reads the example labels back out of the
// prompt and answers with mock_predict of them.
class MockBackend final : public InferenceBackend {
 public:
  BackendResponse complete(const BackendRequest& request) override;
};

using TraceSink = std::function<void(std::string_view)>;

class HttpBackend final : public InferenceBackend {
 public:
  explicit HttpBackend(BackendConfig config, TraceSink trace = {});

  BackendResponse complete(const BackendRequest& request) override;

 private:
  BackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  TraceSink trace_;
};

std::unique_ptr<InferenceBackend> make_backend(const BackendConfig& config, TraceSink trace = {});

// Wire helpers, exposed for tests and tracing.
std::string encode_request_body(const BackendRequest& request, const BackendConfig& config,
                                bool elide_images = false);
std::string decode_response_text(std::string_view body, WireAdapter adapter);  // throws BackendError
std::string base64_encode(std::span<const std::uint8_t> data);

}  // namespace melrag
