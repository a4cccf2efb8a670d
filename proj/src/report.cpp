#include "melrag/report.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "melrag/error.hpp"

namespace melrag {
namespace {

using json = nlohmann::json;

json pct_json(const std::optional<double>& pct) {
  return pct ? json(*pct) : json(nullptr);
}

std::vector<std::string> degenerate_names(unsigned bits) {
  std::vector<std::string> out;
  if (bits & kPrecisionUndefined) out.emplace_back("precision");
  if (bits & kSensitivityUndefined) out.emplace_back("sensitivity");
  if (bits & kSpecificityUndefined) out.emplace_back("specificity");
  if (bits & kF1Undefined) out.emplace_back("f1");
  return out;
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) throw Error(ErrorCode::ParseError, std::string("split file lacks '") + key + "'");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(ErrorCode::ParseError, std::string("non-string id in '") + key + "'");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string metric_report_json(const MetricReport& r, int indent) {
  json doc;
  doc["tn"] = r.counts.tn;
  doc["tp"] = r.counts.tp;
  doc["fn"] = r.counts.fn;
  doc["fp"] = r.counts.fp;
  doc["total"] = r.counts.total();
  doc["accuracy"] = r.accuracy;
  doc["balanced_accuracy"] = r.balanced_accuracy;
  doc["precision"] = r.precision;
  doc["sensitivity"] = r.sensitivity;
  doc["specificity"] = r.specificity;
  doc["f1"] = r.f1;
  doc["unparsed_count"] = r.unparsed_count;
  doc["backend_failures"] = r.backend_failures;
  doc["degenerate_metrics"] = degenerate_names(r.degenerate);
  return doc.dump(indent);
}

std::string metric_report_text(const MetricReport& r) {
  std::string out;
  out += fmt::format("Accuracy {:.4f}\n", r.accuracy);
  out += fmt::format("Balanced accuracy {:.4f}\n", r.balanced_accuracy);
  out += fmt::format("Precision {:.4f}\n", r.precision);
  out += fmt::format("Sensitivity {:.4f}\n", r.sensitivity);
  out += fmt::format("Specificity {:.4f}\n", r.specificity);
  out += fmt::format("F1 {:.4f}\n", r.f1);
  out += fmt::format("TN {}\nTP {}\nFN {}\nFP {}\n", r.counts.tn, r.counts.tp, r.counts.fn, r.counts.fp);
  out += fmt::format("Unparsed {} (backend failures {})\n", r.unparsed_count, r.backend_failures);
  if (r.degenerate != 0) {
    out += "Undefined (reported as 0):";
    for (const auto& name : degenerate_names(r.degenerate)) out += " " + name;
    out += '\n';
  }
  out += '\n';
  out += metric_table_text({{"run", r}});
  return out;
}

std::string metric_table_text(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::size_t name_width = 4;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>17}  {:>9}  {:>11}  {:>8}  {:>6}  {:>6}  {:>6}  {:>6}\n", "",
                                name_width, "Accuracy", "Balanced Accuracy", "Precision", "Sensitivity", "F1-score",
                                "TN", "TP", "FN", "FP");
  for (const auto& [name, r] : rows) {
    out += fmt::format("{:<{}}  {:>8.4f}  {:>17.4f}  {:>9.4f}  {:>11.4f}  {:>8.4f}  {:>6}  {:>6}  {:>6}  {:>6}\n", name,
                       name_width, r.accuracy, r.balanced_accuracy, r.precision, r.sensitivity, r.f1, r.counts.tn,
                       r.counts.tp, r.counts.fn, r.counts.fp);
  }
  return out;
}

std::string format_pct(const std::optional<double>& pct) {
  return pct ? fmt::format("{:.2f}", *pct) : std::string("n/a");
}

std::string recovery_report_json(const RecoveryReport& r, int indent) {
  json doc;
  doc["fp_baseline"] = r.fp_baseline;
  doc["fp_corrected"] = r.fp_corrected;
  doc["fp_recovery_pct"] = pct_json(r.fp_recovery_pct);
  doc["fn_baseline"] = r.fn_baseline;
  doc["fn_corrected"] = r.fn_corrected;
  doc["fn_recovery_pct"] = pct_json(r.fn_recovery_pct);
  return doc.dump(indent);
}

std::string recovery_report_text(const RecoveryReport& r) {
  std::string out = fmt::format("{:<4}  {:>8}  {:>9}  {:>12}\n", "", "Baseline", "Corrected", "Recovery (%)");
  out += fmt::format("{:<4}  {:>8}  {:>9}  {:>12}\n", "FP", r.fp_baseline, r.fp_corrected, format_pct(r.fp_recovery_pct));
  out += fmt::format("{:<4}  {:>8}  {:>9}  {:>12}\n", "FN", r.fn_baseline, r.fn_corrected, format_pct(r.fn_recovery_pct));
  return out;
}

std::string split_json(const SplitAssignment& split, int indent) {
  json doc;
  doc["seed"] = split.seed;
  doc["train"] = split.train_ids;
  doc["val"] = split.val_ids;
  doc["test"] = split.test_ids;
  return doc.dump(indent);
}

SplitAssignment split_from_json(const std::string& text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ParseError, "split file is not a JSON object");
  SplitAssignment split;
  if (auto it = doc.find("seed"); it != doc.end() && it->is_number_unsigned()) split.seed = it->get<std::uint64_t>();
  split.train_ids = string_list(doc, "train");
  split.val_ids = string_list(doc, "val");
  split.test_ids = string_list(doc, "test");
  return split;
}

void write_split(const std::filesystem::path& path, const SplitAssignment& split) {
  write_text_file(path, split_json(split) + "\n");
}

SplitAssignment read_split(const std::filesystem::path& path) {
  return split_from_json(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace melrag
