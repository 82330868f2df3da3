#include "cubegraph/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cubegraph/error.hpp"
#include "cubegraph/random.hpp"
#include "cubegraph/svg.hpp"

namespace cubegraph {

namespace {

void check_inputs(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw Error("metrics: " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) +
                " labels");
  }
  if (scores.empty()) throw Error("metrics: empty input");
  for (double v : scores) {
    if (!std::isfinite(v)) throw Error("metrics: scores must be finite");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("metrics: labels must be 0 or 1");
  }
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney with midranks for ties.
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        pos_rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double p = static_cast<double>(pos);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::optional<double> average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size()) return std::nullopt;
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]] == 1 ? 1 : 0;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

MetricReport compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  check_inputs(scores, labels);
  MetricReport m;
  m.n_samples = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? m.tp : m.fn) += 1;
    } else {
      (predicted ? m.fp : m.tn) += 1;
    }
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.n_samples);
  m.f1_positive = f1(m.tp, m.fp, m.fn);
  m.f1_negative = f1(m.tn, m.fn, m.fp);
  m.macro_f1 = 0.5 * (m.f1_positive + m.f1_negative);
  m.auc = roc_auc(scores, labels);
  m.auprc = average_precision(scores, labels);
  return m;
}

double macro_f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  return compute_metrics(scores, labels, threshold).macro_f1;
}

void SplitSpec::validate() const {
  if (train < 0.0 || val < 0.0 || test < 0.0) throw ConfigError("split fractions must be non-negative");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

std::array<std::size_t, 3> allocate_split(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> frac{spec.train, spec.val, spec.test};
  std::array<std::size_t, 3> count{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double quota = frac[k] * static_cast<double>(n);
    count[k] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    remainder[k] = quota - static_cast<double>(count[k]);
    assigned += count[k];
  }
  while (assigned < n) {
    int pick = 0;
    for (int k = 1; k < 3; ++k) {
      if (remainder[k] > remainder[pick] + 1e-12) pick = k;
    }
    ++count[pick];
    remainder[pick] = -1.0;
    ++assigned;
  }
  if (spec.require_nonempty) {
    const auto wanted = static_cast<std::size_t>(std::count_if(frac.begin(), frac.end(), [](double f) { return f > 0; }));
    if (n < wanted) {
      throw Error("a class with " + std::to_string(n) + " records cannot populate " + std::to_string(wanted) +
                  " splits");
    }
    for (int k = 0; k < 3; ++k) {
      if (frac[k] > 0.0 && count[k] == 0) {
        const auto donor = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
        --count[donor];
        ++count[k];
      }
    }
  }
  return count;
}

SplitIndices stratified_split(const std::vector<int>& labels, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratify) {
    groups.resize(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 0 && labels[i] != 1) throw Error("stratified_split: labels must be 0 or 1");
      groups[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (int c = 0; c < 2; ++c) {
      if (groups[static_cast<std::size_t>(c)].empty()) {
        throw Error("stratified_split: no records with label " + std::to_string(c));
      }
    }
  } else {
    groups.emplace_back(labels.size());
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }
  SplitIndices out;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto& members = groups[c];
    Rng rng(mix_seed(spec.seed, 0x5917 + c));
    rng.shuffle(std::span<std::size_t>(members));
    std::array<std::size_t, 3> count;
    try {
      count = allocate_split(members.size(), spec);
    } catch (const Error& e) {
      throw Error("stratified_split: label " + std::to_string(c) + ": " + e.what());
    }
    auto it = members.begin();
    for (int k = 0; k < 3; ++k) {
      auto& dest = k == 0 ? out.train : k == 1 ? out.val : out.test;
      dest.insert(dest.end(), it, it + static_cast<std::ptrdiff_t>(count[k]));
      it += static_cast<std::ptrdiff_t>(count[k]);
    }
  }
  for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
  return out;
}

std::vector<SplitIndices> stratified_folds(const std::vector<int>& labels, int folds, const SplitSpec& spec) {
  spec.validate();
  if (folds < 2) throw ConfigError("stratified_folds: need at least 2 folds");
  if (spec.train + spec.val <= 0.0) throw ConfigError("stratified_folds: train + val fraction must be positive");
  std::vector<std::vector<std::size_t>> groups(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("stratified_folds: labels must be 0 or 1");
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  const auto k = static_cast<std::size_t>(folds);
  std::vector<std::vector<std::size_t>> test(k);
  for (std::size_t c = 0; c < 2; ++c) {
    auto& members = groups[c];
    if (members.size() < k) {
      throw Error("stratified_folds: " + std::to_string(members.size()) + " records with label " + std::to_string(c) +
                  ", fewer than " + std::to_string(folds) + " folds");
    }
    Rng rng(mix_seed(spec.seed, 0xF01D + c));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t j = 0; j < members.size(); ++j) test[j % k].push_back(members[j]);
  }

  SplitSpec inner = spec;
  inner.train = spec.train / (spec.train + spec.val);
  inner.val = spec.val / (spec.train + spec.val);
  inner.test = 0.0;
  std::vector<SplitIndices> out(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    std::vector<std::size_t> rest;
    std::vector<int> rest_labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (std::binary_search(test[f].begin(), test[f].end(), i)) continue;
      rest.push_back(i);
      rest_labels.push_back(labels[i]);
    }
    inner.seed = mix_seed(spec.seed, f);
    const SplitIndices part = stratified_split(rest_labels, inner);
    for (std::size_t i : part.train) out[f].train.push_back(rest[i]);
    for (std::size_t i : part.val) out[f].val.push_back(rest[i]);
    out[f].test = std::move(test[f]);
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

std::vector<AblationRow> summarize(const std::vector<AblationCell>& cells, const std::vector<ModalityMask>& masks) {
  std::vector<AblationRow> rows;
  for (const auto& mask : masks) {
    std::vector<double> acc, f1p, mf1, auc, ap;
    for (const auto& c : cells) {
      if (!(c.mask == mask)) continue;
      acc.push_back(c.test.accuracy);
      f1p.push_back(c.test.f1_positive);
      mf1.push_back(c.test.macro_f1);
      if (c.test.auc) auc.push_back(*c.test.auc);
      if (c.test.auprc) ap.push_back(*c.test.auprc);
    }
    rows.push_back({mask, mean_std(acc), mean_std(f1p), mean_std(mf1), mean_std(auc), mean_std(ap)});
  }
  return rows;
}

AblationResult run_ablation(const std::vector<SubjectRecord>& cohort, const AblationConfig& cfg) {
  if (cfg.masks.empty()) throw ConfigError("ablation: no modality masks");
  if (cfg.repeats < 1) throw ConfigError("ablation: repeats must be >= 1");
  if (cfg.folds == 1 || cfg.folds < 0) throw ConfigError("ablation: folds must be 0 (re-splits) or >= 2");
  std::vector<int> labels;
  for (const auto& r : cohort) labels.push_back(r.label);

  AblationResult result;
  const bool kfold = cfg.folds >= 2;
  std::vector<SplitIndices> folds;
  if (kfold) {
    SplitSpec split = cfg.split;
    split.seed = cfg.seed;
    folds = stratified_folds(labels, cfg.folds, split);
  }
  const int runs = kfold ? cfg.folds : cfg.repeats;
  for (int rep = 0; rep < runs; ++rep) {
    const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    SplitIndices idx;
    if (kfold) {
      idx = folds[static_cast<std::size_t>(rep)];
    } else {
      SplitSpec split = cfg.split;
      split.seed = seed;
      idx = stratified_split(labels, split);
    }
    const auto train_set = select(cohort, idx.train);
    const auto val_set = select(cohort, idx.val);
    const auto test_set = select(cohort, idx.test);
    std::vector<int> test_y;
    for (const auto& r : test_set) test_y.push_back(r.label);
    for (const auto& mask : cfg.masks) {
      ModelConfig mc = cfg.model;
      mc.mask = mask;
      mc.seed = seed;
      AblationCell cell;
      cell.mask = mask;
      cell.repeat = rep;
      cell.seed = seed;
      try {
        const TrainedModel model = train(train_set, val_set, mc);
        cell.test = compute_metrics(predict(model, test_set), test_y);
        cell.best_epoch = model.summary.best_epoch;
        cell.best_val_macro_f1 = model.summary.best_val_macro_f1;
      } catch (const Error& e) {
        throw TrainingError("ablation mask " + mask.to_string() + ", seed " + std::to_string(seed) + ": " + e.what());
      }
      result.cells.push_back(cell);
    }
  }
  result.rows = summarize(result.cells, cfg.masks);
  std::ostringstream protocol;
  if (kfold) {
    protocol << "stratified " << cfg.folds << "-fold cross-validation, train/val " << cfg.split.train << "/"
             << cfg.split.val << " within each fold";
  } else {
    protocol << "repeated stratified re-splits " << cfg.split.train << "/" << cfg.split.val << "/" << cfg.split.test
             << ", " << cfg.repeats << " repeats";
  }
  protocol << ", base seed " << cfg.seed << ", test-set metrics at threshold 0.5, population std";
  result.protocol = protocol.str();
  return result;
}

std::string format_mean_std(const MeanStd& m) {
  if (m.n == 0) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f \xC2\xB1 %.3f", m.mean, m.std);
  return buf;
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? fixed(*v) : ""; }

}  // namespace

void write_ablation_csv(std::ostream& out, const AblationResult& result) {
  out << "modalities,repeats,accuracy_mean,accuracy_std,f1_mean,f1_std,macro_f1_mean,macro_f1_std,auc_mean,auc_std,"
         "auprc_mean,auprc_std\n";
  for (const auto& r : result.rows) {
    out << '"' << r.mask.to_string() << '"' << ',' << r.accuracy.n;
    for (const MeanStd* m : {&r.accuracy, &r.f1_positive, &r.macro_f1, &r.auc, &r.auprc}) {
      out << ',' << (m->n ? fixed(m->mean) : "") << ',' << (m->n ? fixed(m->std) : "");
    }
    out << '\n';
  }
}

void write_cells_csv(std::ostream& out, const AblationResult& result) {
  out << "modalities,repeat,seed,n_test,tp,fp,tn,fn,accuracy,f1,macro_f1,auc,auprc,best_epoch,best_val_macro_f1\n";
  for (const auto& c : result.cells) {
    out << '"' << c.mask.to_string() << '"' << ',' << c.repeat << ',' << c.seed << ',' << c.test.n_samples << ','
        << c.test.tp << ',' << c.test.fp << ',' << c.test.tn << ',' << c.test.fn << ',' << fixed(c.test.accuracy)
        << ',' << fixed(c.test.f1_positive) << ',' << fixed(c.test.macro_f1) << ',' << opt(c.test.auc) << ','
        << opt(c.test.auprc) << ',' << c.best_epoch << ',' << fixed(c.best_val_macro_f1) << '\n';
  }
}

std::string format_ablation_table(const AblationResult& result) {
  const std::vector<std::string> header{"Modalities", "Accuracy", "F1", "Macro-F1", "AUC", "AUPRC"};
  std::vector<std::vector<std::string>> body;
  for (const auto& r : result.rows) {
    body.push_back({r.mask.to_string(), format_mean_std(r.accuracy), format_mean_std(r.f1_positive),
                    format_mean_std(r.macro_f1), format_mean_std(r.auc), format_mean_std(r.auprc)});
  }
  // Display width counts the two-byte plus-minus sign as one column.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80 ? 1 : 0;
    return w;
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = width(header[c]);
    for (const auto& row : body) widths[c] = std::max(widths[c], width(row[c]));
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? "  " : "") << cells[c];
      if (c + 1 < cells.size()) out << std::string(widths[c] - width(cells[c]), ' ');
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : widths) total += w;
  out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
  for (const auto& row : body) line(row);
  out << "protocol: " << result.protocol << '\n';
  return out.str();
}

std::string ablation_svg(const AblationResult& result) {
  std::vector<BarGroup> groups;
  for (const auto& r : result.rows) {
    groups.push_back({r.mask.to_string(),
                      {r.accuracy.mean, r.f1_positive.mean, r.macro_f1.mean, r.auc.mean, r.auprc.mean},
                      {r.accuracy.std, r.f1_positive.std, r.macro_f1.std, r.auc.std, r.auprc.std}});
  }
  return grouped_bar_chart(groups, {"accuracy", "F1", "macro-F1", "AUC", "AUPRC"}, "Test metrics by modality set");
}

void write_predictions_csv(std::ostream& out, const std::vector<SubjectRecord>& records,
                           const std::vector<double>& scores) {
  if (records.size() != scores.size()) throw Error("write_predictions_csv: size mismatch");
  out << "subject_id,label,score,predicted\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << records[i].subject_id << ',' << records[i].label << ',' << fixed(scores[i]) << ','
        << (scores[i] >= 0.5 ? 1 : 0) << '\n';
  }
}

void write_metrics_json(std::ostream& out, const MetricReport& m) {
  out << "{\n  \"n_samples\": " << m.n_samples << ",\n  \"tp\": " << m.tp << ",\n  \"fp\": " << m.fp
      << ",\n  \"tn\": " << m.tn << ",\n  \"fn\": " << m.fn << ",\n  \"accuracy\": " << fixed(m.accuracy)
      << ",\n  \"f1\": " << fixed(m.f1_positive) << ",\n  \"macro_f1\": " << fixed(m.macro_f1)
      << ",\n  \"auc\": " << (m.auc ? fixed(*m.auc) : "null") << ",\n  \"auprc\": "
      << (m.auprc ? fixed(*m.auprc) : "null") << "\n}\n";
}

}  // namespace cubegraph
