#include "melrag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "melrag/error.hpp"

namespace melrag {
namespace {

// Unbiased draw in [0, n) from the raw 64-bit stream. std::mt19937_64's
// output is fixed by the standard; the library distributions are not.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

std::size_t floor_count(double frac, std::size_t n) {
  // The epsilon absorbs representation error such as 0.7 * 10 = 6.999...
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

struct Strata {
  std::vector<std::size_t> benign;
  std::vector<std::size_t> malignant;
};

// Splits both strata after shuffling; kept rows go to keep, the rest to rest.
void split_stage(Strata& strata, double frac, std::mt19937_64& rng, Strata& keep, Strata& rest) {
  const auto alloc = allocate_strata(strata.benign.size(), strata.malignant.size(), frac);
  seeded_shuffle(strata.benign, rng);
  seeded_shuffle(strata.malignant, rng);
  auto cut = [](const std::vector<std::size_t>& all, std::size_t n, std::vector<std::size_t>& a,
                std::vector<std::size_t>& b) {
    a.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    b.assign(all.begin() + static_cast<std::ptrdiff_t>(n), all.end());
  };
  cut(strata.benign, alloc.benign, keep.benign, rest.benign);
  cut(strata.malignant, alloc.malignant, keep.malignant, rest.malignant);
}

std::vector<std::string> ids_in_input_order(const Strata& strata, std::span<const CaseRecord> cases) {
  std::vector<std::size_t> rows = strata.benign;
  rows.insert(rows.end(), strata.malignant.begin(), strata.malignant.end());
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (auto r : rows) ids.push_back(cases[r].id);
  return ids;
}

double ratio(std::uint64_t num, std::uint64_t den, unsigned flag, unsigned& degenerate) {
  if (den == 0) {
    degenerate |= flag;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

Label effective_label(const PredictionRecord& p) {
  return p.predicted.value_or(Label::Benign);
}

Label truth_of(const TruthMap& truth, const std::string& id) {
  auto it = truth.find(id);
  if (it == truth.end()) throw Error(ErrorCode::UnknownCaseId, "prediction for unknown case '" + id + "'");
  return it->second;
}

}  // namespace

StratumAllocation allocate_strata(std::size_t n_benign, std::size_t n_malignant, double frac) {
  if (!(frac > 0.0 && frac < 1.0)) throw Error(ErrorCode::InvalidArgument, "split fraction must be in (0, 1)");
  const std::size_t total = floor_count(frac, n_benign + n_malignant);
  const double target_b = frac * static_cast<double>(n_benign);
  const double target_m = frac * static_cast<double>(n_malignant);
  StratumAllocation alloc{static_cast<std::size_t>(std::floor(target_b)),
                          static_cast<std::size_t>(std::floor(target_m))};
  const double rem_b = target_b - std::floor(target_b);
  const double rem_m = target_m - std::floor(target_m);
  // Hand out the remaining slots by largest fractional part; ties go to the
  // larger stratum, then to benign.
  const bool benign_first = rem_b > rem_m || (rem_b == rem_m && n_benign >= n_malignant);
  std::size_t missing = total - std::min(total, alloc.benign + alloc.malignant);
  for (int pass = 0; pass < 2 && missing > 0; ++pass) {
    const bool to_benign = (pass == 0) == benign_first;
    if (to_benign && alloc.benign < n_benign) {
      ++alloc.benign;
      --missing;
    } else if (!to_benign && alloc.malignant < n_malignant) {
      ++alloc.malignant;
      --missing;
    }
  }
  return alloc;
}

SplitAssignment stratified_split(std::span<const CaseRecord> cases, std::uint64_t seed, double train_frac,
                                 double val_frac_of_train) {
  if (cases.empty()) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
  if (!(train_frac > 0.0 && train_frac < 1.0) || !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split fractions must be in (0, 1)");
  }
  Strata all;
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!seen.insert(cases[i].id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + cases[i].id + "'");
    (cases[i].label == Label::Malignant ? all.malignant : all.benign).push_back(i);
  }

  std::mt19937_64 rng(seed);
  Strata pool, test, train, val;
  split_stage(all, train_frac, rng, pool, test);
  split_stage(pool, 1.0 - val_frac_of_train, rng, train, val);

  SplitAssignment out;
  out.seed = seed;
  out.train_ids = ids_in_input_order(train, cases);
  out.val_ids = ids_in_input_order(val, cases);
  out.test_ids = ids_in_input_order(test, cases);
  return out;
}

ConfusionCounts confusion_from_predictions(std::span<const PredictionRecord> preds, const TruthMap& truth) {
  ConfusionCounts c;
  for (const auto& p : preds) {
    const bool actual_pos = truth_of(truth, p.id) == Label::Malignant;
    const bool predicted_pos = effective_label(p) == Label::Malignant;
    if (predicted_pos && actual_pos) ++c.tp;
    else if (!predicted_pos && !actual_pos) ++c.tn;
    else if (predicted_pos) ++c.fp;
    else ++c.fn;
  }
  return c;
}

MetricReport metrics_from_confusion(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw Error(ErrorCode::EmptyCounts, "no predictions to score");
  MetricReport r;
  r.counts = counts;
  r.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  r.sensitivity = ratio(counts.tp, counts.tp + counts.fn, kSensitivityUndefined, r.degenerate);
  r.specificity = ratio(counts.tn, counts.tn + counts.fp, kSpecificityUndefined, r.degenerate);
  r.precision = ratio(counts.tp, counts.tp + counts.fp, kPrecisionUndefined, r.degenerate);
  r.balanced_accuracy = (r.sensitivity + r.specificity) / 2.0;
  if (r.precision + r.sensitivity == 0.0) {
    r.degenerate |= kF1Undefined;
    r.f1 = 0.0;
  } else {
    r.f1 = 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity);
  }
  return r;
}

MetricReport evaluate_predictions(std::span<const PredictionRecord> preds, const TruthMap& truth) {
  std::unordered_set<std::string_view> seen;
  for (const auto& p : preds) {
    if (!seen.insert(p.id).second) throw Error(ErrorCode::DuplicateId, "two predictions for case '" + p.id + "'");
  }
  MetricReport r = metrics_from_confusion(confusion_from_predictions(preds, truth));
  for (const auto& p : preds) {
    if (!p.predicted) ++r.unparsed_count;
    if (p.error) ++r.backend_failures;
  }
  return r;
}

RecoveryReport recovery_between(std::span<const PredictionRecord> baseline, std::span<const PredictionRecord> ours,
                                const TruthMap& truth) {
  std::unordered_map<std::string_view, Label> ours_by_id;
  ours_by_id.reserve(ours.size());
  for (const auto& p : ours) {
    if (!ours_by_id.emplace(p.id, effective_label(p)).second) {
      throw Error(ErrorCode::IdSetMismatch, "case '" + p.id + "' appears twice in the second prediction set");
    }
  }
  if (baseline.size() != ours.size()) {
    throw Error(ErrorCode::IdSetMismatch, "prediction sets have " + std::to_string(baseline.size()) + " and " +
                                              std::to_string(ours.size()) + " records");
  }

  RecoveryReport r;
  std::unordered_set<std::string_view> seen;
  for (const auto& p : baseline) {
    if (!seen.insert(p.id).second) {
      throw Error(ErrorCode::IdSetMismatch, "case '" + p.id + "' appears twice in the baseline prediction set");
    }
    auto it = ours_by_id.find(p.id);
    if (it == ours_by_id.end()) {
      throw Error(ErrorCode::IdSetMismatch, "case '" + p.id + "' missing from the second prediction set");
    }
    const Label actual = truth_of(truth, p.id);
    const Label base = effective_label(p);
    if (base == Label::Malignant && actual == Label::Benign) {
      ++r.fp_baseline;
      if (it->second == Label::Benign) ++r.fp_corrected;
    } else if (base == Label::Benign && actual == Label::Malignant) {
      ++r.fn_baseline;
      if (it->second == Label::Malignant) ++r.fn_corrected;
    }
  }
  if (r.fp_baseline > 0) r.fp_recovery_pct = 100.0 * static_cast<double>(r.fp_corrected) / static_cast<double>(r.fp_baseline);
  if (r.fn_baseline > 0) r.fn_recovery_pct = 100.0 * static_cast<double>(r.fn_corrected) / static_cast<double>(r.fn_baseline);
  return r;
}

}  // namespace melrag
