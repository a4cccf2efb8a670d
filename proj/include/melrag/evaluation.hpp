#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "melrag/dataset.hpp"
#include "melrag/types.hpp"

namespace melrag {

struct SplitAssignment {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

// Two-stage stratified split. Stage one keeps floor(train_frac * n) cases for
// the train pool and holds out the rest as test; stage two keeps
// floor((1 - val_frac_of_train) * pool) for train and the rest is validation.
// Each stage allocates its total over the two labels by largest remainder of
// n_label * frac, so every label lands within one sample of its target. Cases
// are shuffled per label with a seeded generator that is fixed across
// platforms.
SplitAssignment stratified_split(std::span<const CaseRecord> cases, std::uint64_t seed, double train_frac = 0.7,
                                 double val_frac_of_train = 0.2);

// Per-label sizes of one stage: how many of n_benign / n_malignant go to the
// kept side when keep = floor(frac * (n_benign + n_malignant)).
struct StratumAllocation {
  std::size_t benign = 0;
  std::size_t malignant = 0;
};
StratumAllocation allocate_strata(std::size_t n_benign, std::size_t n_malignant, double frac);

// Malignant is the positive class. Unparsed predictions count as benign.
ConfusionCounts confusion_from_predictions(std::span<const PredictionRecord> preds, const TruthMap& truth);

enum DegenerateMetric : unsigned {
  kPrecisionUndefined = 1u << 0,
  kSensitivityUndefined = 1u << 1,
  kSpecificityUndefined = 1u << 2,
  kF1Undefined = 1u << 3,
};

struct MetricReport {
  ConfusionCounts counts;
  double accuracy = 0;
  double balanced_accuracy = 0;
  double precision = 0;
  double sensitivity = 0;
  double specificity = 0;
  double f1 = 0;
  std::size_t unparsed_count = 0;    // model answered without a class token
  std::size_t backend_failures = 0;  // backend never answered
  unsigned degenerate = 0;           // DegenerateMetric bits; those metrics are 0
};

// Standard definitions; a 0/0 ratio yields 0 and sets its degenerate bit.
MetricReport metrics_from_confusion(const ConfusionCounts& counts);

// confusion_from_predictions + metrics_from_confusion + unparsed/failure tallies.
MetricReport evaluate_predictions(std::span<const PredictionRecord> preds, const TruthMap& truth);

struct RecoveryReport {
  std::size_t fp_baseline = 0;
  std::size_t fp_corrected = 0;
  std::size_t fn_baseline = 0;
  std::size_t fn_corrected = 0;
  std::optional<double> fp_recovery_pct;  // nullopt when fp_baseline == 0
  std::optional<double> fn_recovery_pct;
};

// fp_corrected counts baseline false positives that ours labels benign;
// fn_corrected counts baseline false negatives that ours labels malignant.
RecoveryReport recovery_between(std::span<const PredictionRecord> baseline, std::span<const PredictionRecord> ours,
                                const TruthMap& truth);

}  // namespace melrag
