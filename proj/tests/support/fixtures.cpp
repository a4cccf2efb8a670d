#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#ifndef MELRAG_FIXTURES_DIR
#error "MELRAG_FIXTURES_DIR must be defined"
#endif

namespace melrag::testing {

std::filesystem::path fixtures_dir() { return MELRAG_FIXTURES_DIR; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<SerializationFixture> serialization_fixtures() {
  std::istringstream in(read_file(fixtures_dir() / "serialization" / "inputs.jsonl"));
  std::vector<SerializationFixture> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto doc = nlohmann::json::parse(line);
    SerializationFixture f;
    f.name = doc.at("case").get<std::string>();
    if (!doc.at("age").is_null()) f.metadata.age = doc.at("age").get<int>();
    if (!doc.at("sex").is_null()) f.metadata.sex = parse_sex(doc.at("sex").get<std::string>());
    if (!doc.at("anatomical_site").is_null()) f.metadata.anatomical_site = doc.at("anatomical_site").get<std::string>();
    out.push_back(std::move(f));
  }
  return out;
}

std::string serialization_golden(SerializationMode mode, const std::string& name) {
  return read_file(fixtures_dir() / "serialization" / std::string(to_string(mode)) / (name + ".txt"));
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("melrag-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace melrag::testing
