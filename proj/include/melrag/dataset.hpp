#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "melrag/types.hpp"

namespace melrag {

using TruthMap = std::unordered_map<std::string, Label>;

// cases.jsonl: one object per line with keys id, age, sex, anatomical_site,
// label, image_ref; null marks a missing value. "" and "unknown" for sex or
// anatomical_site are read as missing. Every record is validated and ids must
// be unique across the file.
std::vector<CaseRecord> read_cases_jsonl(std::istream& in);
std::vector<CaseRecord> read_cases_jsonl(const std::filesystem::path& path);
void write_cases_jsonl(std::ostream& out, std::span<const CaseRecord> cases);
void write_cases_jsonl(const std::filesystem::path& path, std::span<const CaseRecord> cases);

CaseRecord case_from_json_line(std::string_view line);
std::string case_to_json_line(const CaseRecord& record);

// preds.jsonl: one PredictionRecord per line.
std::vector<PredictionRecord> read_predictions_jsonl(std::istream& in);
std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path);
void write_predictions_jsonl(std::ostream& out, std::span<const PredictionRecord> preds);
void write_predictions_jsonl(const std::filesystem::path& path, std::span<const PredictionRecord> preds);

// Immutable id -> record lookup over a validated dataset.
class CaseStore {
 public:
  CaseStore() = default;
  explicit CaseStore(std::vector<CaseRecord> records);

  const CaseRecord* find(std::string_view id) const;
  const CaseRecord& at(std::string_view id) const;  // throws UnknownCaseId
  std::span<const CaseRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  TruthMap truth() const;

 private:
  std::vector<CaseRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace melrag
