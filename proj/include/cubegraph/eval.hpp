#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cubegraph/model.hpp"

namespace cubegraph {

struct MetricReport {
  std::size_t n_samples = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double f1_positive = 0.0;
  double f1_negative = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auc;    // undefined unless both classes are present
  std::optional<double> auprc;
};

// Probability that a random positive outscores a random negative, ties 1/2.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);
// Average precision: sum over distinct thresholds of (R_k - R_{k-1}) * P_k.
std::optional<double> average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// Threshold metrics count score >= threshold as positive (label 1).
MetricReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                             double threshold = 0.5);

double macro_f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold = 0.5);

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
  bool stratify = true;
  bool require_nonempty = true;  // every split with a positive fraction gets >= 1 record per class

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Largest-remainder allocation of n items over the three fractions; ties go to
// the earlier split. With require_nonempty, empty positive-fraction splits
// borrow one item from the largest split.
std::array<std::size_t, 3> allocate_split(std::size_t n, const SplitSpec& spec);

SplitIndices stratified_split(const std::vector<int>& labels, const SplitSpec& spec);

// Stratified k-fold: each class is shuffled and dealt round-robin into `folds`
// test folds. For each fold the remaining records are split into train and
// val in the ratio spec.train : spec.val (spec.test is ignored).
std::vector<SplitIndices> stratified_folds(const std::vector<int>& labels, int folds, const SplitSpec& spec);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

struct AblationConfig {
  std::vector<ModalityMask> masks;
  int repeats = 5;
  int folds = 0;  // >= 2 replaces the repeated re-splits with k-fold cross-validation
  std::uint64_t seed = 0;
  SplitSpec split;
  ModelConfig model;
};

struct AblationCell {
  ModalityMask mask;
  int repeat = 0;  // re-split or fold index
  std::uint64_t seed = 0;
  MetricReport test;
  int best_epoch = 0;
  double best_val_macro_f1 = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over repeats
  std::size_t n = 0;  // repeats where the metric was defined
};

struct AblationRow {
  ModalityMask mask;
  MeanStd accuracy, f1_positive, macro_f1, auc, auprc;
};

struct AblationResult {
  std::vector<AblationCell> cells;
  std::vector<AblationRow> rows;
  std::string protocol;
};

MeanStd mean_std(const std::vector<double>& values);

// For each mask, `repeats` independent re-splits (or the `folds` folds of one
// stratified partition) and trainings with seeds derived from cfg.seed;
// test-set metrics are aggregated per mask.
AblationResult run_ablation(const std::vector<SubjectRecord>& cohort, const AblationConfig& cfg);

std::vector<AblationRow> summarize(const std::vector<AblationCell>& cells, const std::vector<ModalityMask>& masks);

void write_ablation_csv(std::ostream& out, const AblationResult& result);
void write_cells_csv(std::ostream& out, const AblationResult& result);
std::string format_ablation_table(const AblationResult& result);
std::string ablation_svg(const AblationResult& result);

std::string format_mean_std(const MeanStd& m);

void write_predictions_csv(std::ostream& out, const std::vector<SubjectRecord>& records,
                           const std::vector<double>& scores);
void write_metrics_json(std::ostream& out, const MetricReport& m);

}  // namespace cubegraph
