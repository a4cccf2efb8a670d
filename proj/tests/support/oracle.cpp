#include "oracle.hpp"

#include <algorithm>
#include <numeric>

namespace melrag::testing {

double naive_dot(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) sum += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  return sum;
}

std::vector<std::size_t> brute_force_top_k(std::span<const std::vector<float>> rows, std::span<const float> query,
                                           std::size_t k, std::optional<std::size_t> exclude) {
  std::vector<double> scores(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = naive_dot(rows[i], query);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!exclude || *exclude != i) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (order.size() > k) order.resize(k);
  return order;
}

namespace {

CaseRecord make_case(const std::string& id, Label label) {
  CaseRecord rec;
  rec.id = id;
  rec.label = label;
  return rec;
}

PredictionRecord make_pred(const std::string& id, Label predicted) {
  PredictionRecord p;
  p.id = id;
  p.predicted = predicted;
  p.raw_text = std::string(to_string(predicted));
  return p;
}

}  // namespace

LabeledPredictions predictions_for_counts(const ConfusionCounts& counts) {
  LabeledPredictions out;
  auto add = [&](const char* prefix, std::uint64_t n, Label truth, Label predicted) {
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::string id = prefix + std::to_string(i);
      out.cases.push_back(make_case(id, truth));
      out.preds.push_back(make_pred(id, predicted));
      out.truth.emplace(id, truth);
    }
  };
  add("tn", counts.tn, Label::Benign, Label::Benign);
  add("tp", counts.tp, Label::Malignant, Label::Malignant);
  add("fn", counts.fn, Label::Malignant, Label::Benign);
  add("fp", counts.fp, Label::Benign, Label::Malignant);
  return out;
}

RecoveryFixture recovery_fixture(const ConfusionCounts& baseline, std::size_t fp_fixed, std::size_t fn_fixed) {
  const auto base = predictions_for_counts(baseline);
  RecoveryFixture out;
  out.cases = base.cases;
  out.truth = base.truth;
  out.baseline = base.preds;
  std::size_t fp_seen = 0, fn_seen = 0;
  for (const auto& p : base.preds) {
    const Label truth = base.truth.at(p.id);
    Label ours = truth;  // baseline-correct cases stay correct
    if (truth == Label::Benign && p.predicted == Label::Malignant) {
      ours = fp_seen++ < fp_fixed ? Label::Benign : Label::Malignant;
    } else if (truth == Label::Malignant && p.predicted == Label::Benign) {
      ours = fn_seen++ < fn_fixed ? Label::Malignant : Label::Benign;
    }
    out.ours.push_back(make_pred(p.id, ours));
  }
  return out;
}

}  // namespace melrag::testing
