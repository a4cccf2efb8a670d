#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "melrag/serialization.hpp"
#include "melrag/types.hpp"

namespace melrag::testing {

std::filesystem::path fixtures_dir();

struct SerializationFixture {
  std::string name;
  ClinicalMetadata metadata;
};

// fixtures/serialization/inputs.jsonl
std::vector<SerializationFixture> serialization_fixtures();

// fixtures/serialization/<mode>/<name>.txt
std::string serialization_golden(SerializationMode mode, const std::string& name);

std::string read_file(const std::filesystem::path& path);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace melrag::testing
