#include "melrag/dataset.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "melrag/error.hpp"

namespace melrag {
namespace {

using json = nlohmann::json;

bool is_missing_token(const json& value) {
  if (value.is_null()) return true;
  if (!value.is_string()) return false;
  const auto& text = value.get_ref<const std::string&>();
  if (text.empty()) return true;
  std::string lower(text);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "unknown";
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

json optional_string(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fn(line);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

json parse_object(std::string_view line) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::ParseError, "not a JSON object");
  }
  return obj;
}

}  // namespace

CaseRecord case_from_json_line(std::string_view line) {
  const json obj = parse_object(line);
  CaseRecord rec;

  const json* id = member(obj, "id");
  if (id == nullptr || !id->is_string()) throw Error(ErrorCode::EmptyId, "missing string 'id'");
  rec.id = id->get<std::string>();

  if (const json* age = member(obj, "age"); age != nullptr && !age->is_null()) {
    if (!age->is_number_integer()) throw Error(ErrorCode::InvalidAge, "age must be an integer or null");
    const auto value = age->get<std::int64_t>();
    if (value < 0 || value > kMaxAge) {
      throw Error(ErrorCode::InvalidAge, "age " + std::to_string(value) + " outside [0, 130]");
    }
    rec.metadata.age = static_cast<int>(value);
  }

  if (const json* sex = member(obj, "sex"); sex != nullptr && !is_missing_token(*sex)) {
    if (!sex->is_string()) throw Error(ErrorCode::InvalidSex, "sex must be a string or null");
    rec.metadata.sex = parse_sex(sex->get<std::string>());
    if (!rec.metadata.sex) throw Error(ErrorCode::InvalidSex, "sex '" + sex->get<std::string>() + "'");
  }

  if (const json* site = member(obj, "anatomical_site"); site != nullptr && !is_missing_token(*site)) {
    if (!site->is_string()) throw Error(ErrorCode::InvalidSite, "anatomical_site must be a string or null");
    rec.metadata.anatomical_site = site->get<std::string>();
  }

  const json* label = member(obj, "label");
  if (label == nullptr || !label->is_string()) throw Error(ErrorCode::InvalidLabel, "missing string 'label'");
  const auto parsed = parse_label(label->get<std::string>());
  if (!parsed) throw Error(ErrorCode::InvalidLabel, "label '" + label->get<std::string>() + "'");
  rec.label = *parsed;

  if (const json* ref = member(obj, "image_ref"); ref != nullptr && !ref->is_null()) {
    if (!ref->is_string()) throw Error(ErrorCode::InvalidImageRef, "image_ref must be a string or null");
    rec.image_ref = ref->get<std::string>();
  }

  validate_case(rec);
  return rec;
}

std::string case_to_json_line(const CaseRecord& record) {
  const auto& m = record.metadata;
  json obj = json::object();
  obj["id"] = record.id;
  obj["age"] = m.age ? json(*m.age) : json(nullptr);
  obj["sex"] = m.sex ? json(std::string(to_string(*m.sex))) : json(nullptr);
  obj["anatomical_site"] = optional_string(m.anatomical_site);
  obj["label"] = std::string(to_string(record.label));
  obj["image_ref"] = optional_string(record.image_ref);
  return obj.dump();
}

std::vector<CaseRecord> read_cases_jsonl(std::istream& in) {
  std::vector<CaseRecord> cases;
  std::unordered_set<std::string> seen;
  for_each_line(in, [&](const std::string& line) {
    CaseRecord rec = case_from_json_line(line);
    if (!seen.insert(rec.id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + rec.id + "'");
    cases.push_back(std::move(rec));
  });
  return cases;
}

std::vector<CaseRecord> read_cases_jsonl(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_cases_jsonl(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void write_cases_jsonl(std::ostream& out, std::span<const CaseRecord> cases) {
  for (const auto& rec : cases) out << case_to_json_line(validate_case(rec)) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed");
}

void write_cases_jsonl(const std::filesystem::path& path, std::span<const CaseRecord> cases) {
  auto out = open_out(path);
  write_cases_jsonl(out, cases);
}

std::vector<PredictionRecord> read_predictions_jsonl(std::istream& in) {
  std::vector<PredictionRecord> preds;
  for_each_line(in, [&](const std::string& line) {
    const json obj = parse_object(line);
    PredictionRecord rec;
    const json* id = member(obj, "id");
    if (id == nullptr || !id->is_string() || id->get_ref<const std::string&>().empty()) {
      throw Error(ErrorCode::EmptyId, "prediction without a string 'id'");
    }
    rec.id = id->get<std::string>();
    if (const json* p = member(obj, "predicted"); p != nullptr && !p->is_null()) {
      if (!p->is_string()) throw Error(ErrorCode::InvalidLabel, "predicted must be a string or null");
      rec.predicted = parse_label(p->get<std::string>());
      if (!rec.predicted) throw Error(ErrorCode::InvalidLabel, "predicted '" + p->get<std::string>() + "'");
    }
    if (const json* raw = member(obj, "raw_text"); raw != nullptr && raw->is_string()) {
      rec.raw_text = raw->get<std::string>();
    }
    if (const json* n = member(obj, "neighbors_used"); n != nullptr && !n->is_null()) {
      if (!n->is_array()) throw Error(ErrorCode::ParseError, "neighbors_used must be an array");
      for (const auto& v : *n) {
        if (!v.is_string()) throw Error(ErrorCode::ParseError, "neighbors_used entries must be strings");
        rec.neighbors_used.push_back(v.get<std::string>());
      }
    }
    if (const json* err = member(obj, "error"); err != nullptr && err->is_string()) {
      rec.error = err->get<std::string>();
    }
    preds.push_back(std::move(rec));
  });
  return preds;
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_predictions_jsonl(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void write_predictions_jsonl(std::ostream& out, std::span<const PredictionRecord> preds) {
  for (const auto& rec : preds) {
    json obj = json::object();
    obj["id"] = rec.id;
    obj["predicted"] = rec.predicted ? json(std::string(to_string(*rec.predicted))) : json(nullptr);
    obj["raw_text"] = rec.raw_text;
    obj["neighbors_used"] = rec.neighbors_used;
    if (rec.error) obj["error"] = *rec.error;
    out << obj.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed");
}

void write_predictions_jsonl(const std::filesystem::path& path, std::span<const PredictionRecord> preds) {
  auto out = open_out(path);
  write_predictions_jsonl(out, preds);
}

CaseStore::CaseStore(std::vector<CaseRecord> records) : records_(std::move(records)) {
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_case(records_[i]);
    if (!by_id_.emplace(records_[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id '" + records_[i].id + "'");
    }
  }
}

const CaseRecord* CaseStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

const CaseRecord& CaseStore::at(std::string_view id) const {
  const CaseRecord* rec = find(id);
  if (rec == nullptr) throw Error(ErrorCode::UnknownCaseId, "no case with id '" + std::string(id) + "'");
  return *rec;
}

TruthMap CaseStore::truth() const {
  TruthMap truth;
  truth.reserve(records_.size());
  for (const auto& rec : records_) truth.emplace(rec.id, rec.label);
  return truth;
}

}  // namespace melrag
