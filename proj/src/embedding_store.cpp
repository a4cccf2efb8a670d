#include "melrag/embedding_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "byte_io.hpp"
#include "melrag/error.hpp"

namespace melrag {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::uint8_t> data(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorCode::IoFailure, "read failed for " + path);
  }
  return data;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out.flush()) throw Error(ErrorCode::IoFailure, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot move " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace detail

namespace {

void require_finite(std::span<const float> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteValue, std::string(what) + " entry " + std::to_string(i) + " is not finite");
    }
  }
}

// count * dim * 4 with overflow detection.
bool payload_bytes(std::uint64_t count, std::uint64_t dim, std::uint64_t& out) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (dim != 0 && count > kMax / dim / 4) return false;
  out = count * dim * 4;
  return true;
}

void read_payload(detail::ByteReader& in, std::uint64_t count, std::uint32_t dim, std::vector<float>& out,
                  const char* what) {
  std::uint64_t bytes = 0;
  if (!payload_bytes(count, dim, bytes)) throw Error(ErrorCode::TruncatedPayload, std::string(what) + " size overflows");
  in.require(bytes, what);
  out.resize(static_cast<std::size_t>(count) * dim);
  for (auto& v : out) v = in.f32_unchecked();
  require_finite(out, what);
}

}  // namespace

std::span<const float> EmbeddingBundle::image_row(std::size_t i) const {
  return std::span<const float>(image_vectors).subspan(i * image_dim, image_dim);
}

std::span<const float> EmbeddingBundle::text_row(std::size_t i) const {
  return std::span<const float>(text_vectors).subspan(i * text_dim, text_dim);
}

void EmbeddingBundle::validate() const {
  if (dim() == 0) throw Error(ErrorCode::InvariantViolation, "image_dim and text_dim are both zero");
  if (image_vectors.size() != count() * image_dim) {
    throw Error(ErrorCode::InvariantViolation, "image payload holds " + std::to_string(image_vectors.size()) +
                                                   " floats, expected " + std::to_string(count() * image_dim));
  }
  if (text_vectors.size() != count() * text_dim) {
    throw Error(ErrorCode::InvariantViolation, "text payload holds " + std::to_string(text_vectors.size()) +
                                                   " floats, expected " + std::to_string(count() * text_dim));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (id.empty()) throw Error(ErrorCode::InvariantViolation, "empty case id");
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::InvariantViolation, "case id longer than 65535 bytes");
    }
    if (!seen.insert(id).second) throw Error(ErrorCode::InvariantViolation, "duplicate case id '" + id + "'");
  }
  require_finite(image_vectors, "image payload");
  require_finite(text_vectors, "text payload");
}

bool bitwise_equal(const EmbeddingBundle& a, const EmbeddingBundle& b) {
  auto same_bits = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() && (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0);
  };
  return a.ids == b.ids && a.image_dim == b.image_dim && a.text_dim == b.text_dim &&
         a.serialization_mode == b.serialization_mode && same_bits(a.image_vectors, b.image_vectors) &&
         same_bits(a.text_vectors, b.text_vectors);
}

std::vector<std::uint8_t> encode_bundle(const EmbeddingBundle& bundle) {
  try {
    bundle.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, std::string("refusing to write bundle: ") + e.what());
  }
  detail::ByteWriter out;
  out.bytes(std::string_view(kBundleMagic, 4));
  out.u32(kBundleVersion);
  out.u64(bundle.count());
  out.u32(bundle.image_dim);
  out.u32(bundle.text_dim);
  out.u8(static_cast<std::uint8_t>(bundle.serialization_mode));
  out.u8(0);
  out.u8(0);
  out.u8(0);
  for (const auto& id : bundle.ids) {
    out.u16(static_cast<std::uint16_t>(id.size()));
    out.bytes(id);
  }
  out.f32s(bundle.image_vectors);
  out.f32s(bundle.text_vectors);
  return std::move(out.buffer());
}

EmbeddingBundle decode_bundle(std::span<const std::uint8_t> data) {
  detail::ByteReader in(data);
  if (in.bytes(4, "magic") != std::string_view(kBundleMagic, 4)) {
    throw Error(ErrorCode::BadMagic, "not an embedding bundle (magic is not MMEB)");
  }
  const auto version = in.u32("version");
  if (version != kBundleVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "bundle version " + std::to_string(version) + " (supported: 1)");
  }
  const auto count = in.u64("count");
  EmbeddingBundle bundle;
  bundle.image_dim = in.u32("image_dim");
  bundle.text_dim = in.u32("text_dim");
  const auto mode = in.u8("serialization_mode");
  if (mode > static_cast<std::uint8_t>(SerializationMode::Html)) {
    throw Error(ErrorCode::InvalidHeader, "serialization_mode byte " + std::to_string(mode));
  }
  bundle.serialization_mode = static_cast<SerializationMode>(mode);
  for (int i = 0; i < 3; ++i) {
    if (in.u8("reserved") != 0) throw Error(ErrorCode::InvalidHeader, "reserved header bytes are not zero");
  }
  if (bundle.dim() == 0) throw Error(ErrorCode::InvalidHeader, "image_dim and text_dim are both zero");

  // Each id entry needs at least its 2-byte length.
  if (count > in.remaining() / 2) in.require(count * 2, "id table");
  bundle.ids.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = in.u16("id table");
    bundle.ids.push_back(in.bytes(len, "id table"));
  }
  read_payload(in, count, bundle.image_dim, bundle.image_vectors, "image payload");
  read_payload(in, count, bundle.text_dim, bundle.text_vectors, "text payload");
  if (in.remaining() != 0) {
    throw Error(ErrorCode::TrailingBytes, std::to_string(in.remaining()) + " bytes after the text payload");
  }
  try {
    bundle.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NonFiniteValue) throw;
    throw Error(ErrorCode::InvariantViolation, e.message());
  }
  return bundle;
}

void write_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& destination) {
  const auto bytes = encode_bundle(bundle);
  detail::write_file_bytes(destination.string(), bytes);
}

EmbeddingBundle read_bundle(const std::filesystem::path& source) {
  const auto bytes = detail::read_file_bytes(source.string());
  try {
    return decode_bundle(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), source.string() + ": " + e.message());
  }
}

MultimodalVector concat_multimodal(std::span<const float> image_vec, std::span<const float> text_vec,
                                   std::size_t image_dim, std::size_t text_dim) {
  if (image_vec.size() != image_dim || text_vec.size() != text_dim) {
    throw Error(ErrorCode::DimensionMismatch, "got image/text lengths " + std::to_string(image_vec.size()) + "/" +
                                                  std::to_string(text_vec.size()) + ", expected " +
                                                  std::to_string(image_dim) + "/" + std::to_string(text_dim));
  }
  require_finite(image_vec, "image vector");
  require_finite(text_vec, "text vector");
  MultimodalVector out;
  out.reserve(image_dim + text_dim);
  out.insert(out.end(), image_vec.begin(), image_vec.end());
  out.insert(out.end(), text_vec.begin(), text_vec.end());
  return out;
}

MultimodalVector concat_multimodal(const EmbeddingBundle& bundle, std::size_t row) {
  if (row >= bundle.count()) throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(row) + " out of range");
  return concat_multimodal(bundle.image_row(row), bundle.text_row(row), bundle.image_dim, bundle.text_dim);
}

bool l2_normalize_in_place(std::span<float> vec) {
  double sq = 0.0;
  for (float v : vec) sq += static_cast<double>(v) * v;
  if (sq == 0.0) return false;
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& v : vec) v = static_cast<float>(v * inv);
  return true;
}

NormalizeResult l2_normalize(std::span<const float> vec) {
  require_finite(vec, "vector");
  NormalizeResult result{MultimodalVector(vec.begin(), vec.end()), false};
  result.zero_vector = !l2_normalize_in_place(result.values);
  return result;
}

}  // namespace melrag
