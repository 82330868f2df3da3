#include "cubegraph/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "cubegraph/error.hpp"
#include "cubegraph/random.hpp"
#include "cubegraph/svg.hpp"

namespace cubegraph {

ShapleyResult shapley_exact(std::size_t n, const CoalitionValue& value) {
  if (n == 0) throw Error("shapley: no players");
  if (n > kMaxExactPlayers) {
    throw Error("shapley: exact mode supports at most " + std::to_string(kMaxExactPlayers) + " players, got " +
                std::to_string(n));
  }
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> v(total);
  std::vector<bool> present(n);
  for (std::size_t mask = 0; mask < total; ++mask) {
    for (std::size_t i = 0; i < n; ++i) present[i] = (mask >> i) & 1U;
    v[mask] = value(present);
  }
  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> weight(n);
  weight[0] = 1.0 / static_cast<double>(n);
  for (std::size_t s = 1; s < n; ++s) {
    weight[s] = weight[s - 1] * static_cast<double>(s) / static_cast<double>(n - s);
  }
  ShapleyResult r;
  r.values.assign(n, 0.0);
  r.std_errors.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < total; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (v[mask | bit] - v[mask]);
    }
    r.values[i] = phi;
  }
  r.baseline = v[0];
  r.full = v[total - 1];
  r.evaluations = total;
  return r;
}

ShapleyResult shapley_sampled(std::size_t n, const CoalitionValue& value, std::size_t permutations,
                              std::uint64_t seed) {
  if (n == 0) throw Error("shapley: no players");
  if (permutations == 0) throw Error("shapley: sampled mode needs at least one permutation");
  Rng rng(mix_seed(seed, 0x5a9));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  std::vector<bool> present(n, false);
  ShapleyResult r;
  r.baseline = value(present);
  r.evaluations = 1;
  for (std::size_t k = 1; k <= permutations; ++k) {
    rng.shuffle(std::span<std::size_t>(order));
    std::fill(present.begin(), present.end(), false);
    double prev = r.baseline;
    for (std::size_t player : order) {
      present[player] = true;
      const double cur = value(present);
      ++r.evaluations;
      const double delta = cur - prev;
      const double d = delta - mean[player];
      mean[player] += d / static_cast<double>(k);
      m2[player] += d * (delta - mean[player]);
      prev = cur;
    }
    r.full = prev;
  }
  r.values = mean;
  r.std_errors.assign(n, 0.0);
  if (permutations > 1) {
    const auto m = static_cast<double>(permutations);
    for (std::size_t i = 0; i < n; ++i) r.std_errors[i] = std::sqrt(m2[i] / (m - 1.0) / m);
  }
  r.permutations = permutations;
  return r;
}

namespace {

constexpr const char* kNptDomains[] = {"memory", "attention", "language", "visuospatial", "executive"};

}  // namespace

std::vector<FeatureGroup> default_groups(int npt_dim) {
  std::vector<FeatureGroup> g;
  g.push_back({"coordinates", GroupKind::Coordinates, 0});
  for (int k = 0; k < kOrbitCount; ++k) g.push_back({"graphlet " + std::to_string(k), GroupKind::Orbit, k});
  g.push_back({"angles", GroupKind::Angles, 0});
  for (int a = 0; a < kAgeGroups; ++a) g.push_back({"age " + std::string(kAgeBands[a]), GroupKind::Age, a});
  for (int e = 0; e < kEduGroups; ++e) g.push_back({"edu " + std::string(kEduBands[e]), GroupKind::Edu, e});
  if (npt_dim == 1) {
    g.push_back({"npt", GroupKind::Npt, 0});
  } else {
    for (int d = 0; d < npt_dim; ++d) {
      const std::string label = npt_dim == 5 ? kNptDomains[d] : std::to_string(d);
      g.push_back({"npt " + label, GroupKind::Npt, d});
    }
  }
  return g;
}

void check_groups(const std::vector<FeatureGroup>& groups, int npt_dim) {
  if (groups.empty()) throw Error("explain: no feature groups");
  std::set<std::string> names;
  std::set<std::pair<int, int>> slots;
  for (const auto& g : groups) {
    if (!names.insert(g.name).second) throw Error("explain: duplicate feature group name '" + g.name + "'");
    int limit = 1;
    switch (g.kind) {
      case GroupKind::Orbit: limit = kOrbitCount; break;
      case GroupKind::Age: limit = kAgeGroups; break;
      case GroupKind::Edu: limit = kEduGroups; break;
      case GroupKind::Npt: limit = npt_dim; break;
      default: break;
    }
    if (g.index < 0 || g.index >= limit) throw Error("explain: group '" + g.name + "' index out of range");
    if (!slots.insert({static_cast<int>(g.kind), g.index}).second) {
      throw Error("explain: group '" + g.name + "' overlaps another group");
    }
  }
}

Background make_background(const std::vector<ModelInput>& cohort) {
  if (cohort.empty()) throw Error("explain: empty background");
  Background b;
  b.node_column_mean.assign(kNodeFeatureDim, 0.0);
  b.age.assign(cohort[0].age.size(), 0.0);
  b.edu.assign(cohort[0].edu.size(), 0.0);
  b.npt.assign(cohort[0].npt.size(), 0.0);
  std::size_t graphs = 0;
  for (const auto& in : cohort) {
    if (in.age.size() != b.age.size() || in.edu.size() != b.edu.size() || in.npt.size() != b.npt.size()) {
      throw ShapeError("explain: background subjects have inconsistent input widths");
    }
    if (in.nodes > 0) {
      for (std::size_t c = 0; c < kNodeFeatureDim; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < in.nodes; ++r) s += in.node_features[r * kNodeFeatureDim + c];
        b.node_column_mean[c] += s / static_cast<double>(in.nodes);
      }
      ++graphs;
    }
    for (std::size_t i = 0; i < b.age.size(); ++i) b.age[i] += in.age[i];
    for (std::size_t i = 0; i < b.edu.size(); ++i) b.edu[i] += in.edu[i];
    for (std::size_t i = 0; i < b.npt.size(); ++i) b.npt[i] += in.npt[i];
  }
  if (graphs > 0) {
    for (double& v : b.node_column_mean) v /= static_cast<double>(graphs);
  }
  const auto n = static_cast<double>(cohort.size());
  for (auto* vec : {&b.age, &b.edu, &b.npt}) {
    for (double& v : *vec) v /= n;
  }
  b.subjects = cohort.size();
  return b;
}

ModelInput substitute(const ModelInput& input, const std::vector<FeatureGroup>& groups,
                      const std::vector<bool>& present, const Background& bg) {
  if (present.size() != groups.size()) throw Error("explain: coalition size does not match group count");
  ModelInput out = input;
  auto set_column = [&](std::size_t c) {
    for (std::size_t r = 0; r < out.nodes; ++r) out.node_features[r * kNodeFeatureDim + c] = bg.node_column_mean[c];
  };
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (present[i]) continue;
    const FeatureGroup& g = groups[i];
    const auto k = static_cast<std::size_t>(g.index);
    switch (g.kind) {
      case GroupKind::Coordinates:
        for (int c = 0; c < kCoordDims; ++c) set_column(static_cast<std::size_t>(kCoordOffset + c));
        break;
      case GroupKind::Orbit:
        set_column(static_cast<std::size_t>(kOrbitOffset) + k);
        break;
      case GroupKind::Angles:
        for (int c = 0; c < kAngleDims; ++c) set_column(static_cast<std::size_t>(kAngleOffset + c));
        break;
      case GroupKind::Age:
        out.age.at(k) = bg.age.at(k);
        break;
      case GroupKind::Edu:
        out.edu.at(k) = bg.edu.at(k);
        break;
      case GroupKind::Npt:
        out.npt.at(k) = bg.npt.at(k);
        break;
    }
  }
  return out;
}

AttributionReport shapley_values(const TrainedModel& model, const ModelInput& input, const std::string& subject_id,
                                 const std::vector<FeatureGroup>& groups, const Background& background,
                                 const ExplainOptions& options) {
  check_groups(groups, model.config.npt_dim);
  if (background.subjects == 0) throw Error("explain: empty background");
  if (input.npt.size() != background.npt.size()) throw ShapeError("explain: npt width differs from background");

  // The graph branch only sees graph-side groups, so its embedding is cached
  // per presence pattern of those groups.
  std::vector<std::size_t> graph_players;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].graph_side()) graph_players.push_back(i);
  }
  std::unordered_map<std::vector<bool>, std::vector<double>> embeddings;
  std::vector<bool> key(graph_players.size());
  const CoalitionValue value = [&](const std::vector<bool>& present) {
    const ModelInput x = substitute(input, groups, present, background);
    for (std::size_t j = 0; j < graph_players.size(); ++j) key[j] = present[graph_players[j]];
    auto it = embeddings.find(key);
    if (it == embeddings.end()) it = embeddings.emplace(key, graph_embedding(model, x)).first;
    return predict_with_embedding(model, it->second, x);
  };

  const bool exact = options.mode == ShapleyMode::Exact ||
                     (options.mode == ShapleyMode::Auto && groups.size() <= kMaxExactPlayers);
  const ShapleyResult r = exact ? shapley_exact(groups.size(), value)
                                : shapley_sampled(groups.size(), value, options.permutations, options.seed);
  AttributionReport rep;
  rep.subject_id = subject_id;
  for (const auto& g : groups) rep.features.push_back(g.name);
  rep.values = r.values;
  rep.std_errors = r.std_errors;
  rep.baseline = r.baseline;
  rep.prediction = r.full;
  rep.mode = exact ? "exact" : "sampled";
  rep.permutations = r.permutations;
  return rep;
}

std::vector<std::pair<std::string, double>> global_importance(const std::vector<AttributionReport>& reports) {
  if (reports.empty()) throw Error("global_importance: no reports");
  const auto& names = reports[0].features;
  std::vector<std::pair<std::string, double>> ranking;
  for (const auto& n : names) ranking.emplace_back(n, 0.0);
  for (const auto& r : reports) {
    if (r.features != names || r.values.size() != names.size()) {
      throw Error("global_importance: report for " + r.subject_id + " uses a different feature set");
    }
    for (std::size_t i = 0; i < names.size(); ++i) ranking[i].second += std::abs(r.values[i]);
  }
  for (auto& [name, v] : ranking) v /= static_cast<double>(reports.size());
  std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranking;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

void write_attributions_csv(std::ostream& out, const std::vector<AttributionReport>& reports) {
  out << "subject_id,feature,shap,std_error,baseline,prediction,mode,permutations\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.features.size(); ++i) {
      out << quoted(r.subject_id) << ',' << quoted(r.features[i]) << ',' << g17(r.values[i]) << ','
          << g17(r.std_errors[i]) << ',' << g17(r.baseline) << ',' << g17(r.prediction) << ',' << r.mode << ','
          << r.permutations << '\n';
    }
  }
}

void write_importance_csv(std::ostream& out, const std::vector<std::pair<std::string, double>>& ranking) {
  out << "rank,feature,mean_abs_shap\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out << i + 1 << ',' << quoted(ranking[i].first) << ',' << g17(ranking[i].second) << '\n';
  }
}

std::string importance_svg(const std::vector<std::pair<std::string, double>>& ranking, std::size_t top_k) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (std::size_t i = 0; i < ranking.size() && i < top_k; ++i) {
    labels.push_back(ranking[i].first);
    values.push_back(ranking[i].second);
  }
  return horizontal_bar_chart(labels, values, "Mean |SHAP| (top " + std::to_string(labels.size()) + ")");
}

}  // namespace cubegraph
