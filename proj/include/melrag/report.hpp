#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "melrag/evaluation.hpp"

namespace melrag {

std::string metric_report_json(const MetricReport& report, int indent = 2);

// Summary lines ("Accuracy 0.8876", ..., "F1 0.6864", "TN 6864", ...)
// followed by a table in the column order Accuracy, Balanced Accuracy,
// Precision, Sensitivity, F1-score, TN, TP, FN, FP.
std::string metric_report_text(const MetricReport& report);
std::string metric_table_text(const std::vector<std::pair<std::string, MetricReport>>& rows);

// Percentages are printed with two decimals; "n/a" for an empty baseline.
std::string recovery_report_json(const RecoveryReport& report, int indent = 2);
std::string recovery_report_text(const RecoveryReport& report);
std::string format_pct(const std::optional<double>& pct);

std::string split_json(const SplitAssignment& split, int indent = 2);
SplitAssignment split_from_json(const std::string& text);
void write_split(const std::filesystem::path& path, const SplitAssignment& split);
SplitAssignment read_split(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace melrag
