#include <chrono>
#include <cmath>

#include "httplib.h"
#include "melrag/backend.hpp"

namespace melrag {
namespace {

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config, TraceSink trace) : config_(std::move(config)), trace_(std::move(trace)) {
  config_.validate();
  const std::string& url = *config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint '" + url + "' has no scheme (expected http:// or https://)");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidConfig, "unsupported endpoint scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw Error(ErrorCode::InvalidConfig, "built without TLS support; use an http:// endpoint");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (origin_.size() <= scheme_end + 3) throw Error(ErrorCode::InvalidConfig, "endpoint '" + url + "' has no host");
}

BackendResponse HttpBackend::complete(const BackendRequest& request) {
  // One client per call keeps concurrent calls independent.
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(timeout_us);
  client.set_read_timeout(timeout_us);
  client.set_write_timeout(timeout_us);

  const std::string body = encode_request_body(request, config_);
  if (trace_) trace_("request " + path_ + " " + encode_request_body(request, config_, true));

  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path_, body, "application/json");
  const auto elapsed = std::chrono::steady_clock::now() - started;

  if (!result) {
    const auto err = result.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= timeout * 0.9);
    const std::string what = httplib::to_string(err);
    if (trace_) trace_("transport error: " + what);
    if (timed_out) {
      throw BackendError(ErrorCode::Timeout, "no response within " + std::to_string(config_.timeout_s) + " s", true);
    }
    throw BackendError(ErrorCode::BackendUnavailable, origin_ + path_ + ": " + what, true);
  }
  if (trace_) trace_("response " + std::to_string(result->status) + " " + result->body);
  if (result->status < 200 || result->status >= 300) {
    throw BackendError(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(result->status),
                       retryable_status(result->status));
  }
  return {decode_response_text(result->body, config_.adapter)};
}

}  // namespace melrag
