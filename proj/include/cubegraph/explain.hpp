#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cubegraph/model.hpp"

namespace cubegraph {

// Value of a coalition: present[i] tells whether player i takes its real value.
using CoalitionValue = std::function<double(const std::vector<bool>& present)>;

struct ShapleyResult {
  std::vector<double> values;
  std::vector<double> std_errors;  // zero in exact mode
  double baseline = 0.0;           // value of the empty coalition
  double full = 0.0;               // value of the grand coalition
  std::size_t evaluations = 0;
  std::size_t permutations = 0;    // zero in exact mode
};

inline constexpr std::size_t kMaxExactPlayers = 20;

// Enumerates all 2^n coalitions (n <= 20), each evaluated once.
ShapleyResult shapley_exact(std::size_t players, const CoalitionValue& value);

// Averages marginal contributions over random permutations; the standard
// error of each value is the sample standard deviation over sqrt(permutations).
ShapleyResult shapley_sampled(std::size_t players, const CoalitionValue& value, std::size_t permutations,
                              std::uint64_t seed);

enum class GroupKind { Coordinates, Orbit, Angles, Age, Edu, Npt };

// A named player controlling a block of model inputs. Orbit groups cover one
// GDV column across all nodes; Age/Edu/Npt groups cover one input slot.
struct FeatureGroup {
  std::string name;
  GroupKind kind = GroupKind::Orbit;
  int index = 0;

  bool graph_side() const {
    return kind == GroupKind::Coordinates || kind == GroupKind::Orbit || kind == GroupKind::Angles;
  }
};

// coordinates, graphlet 0..14, angles, age bands, edu bands, npt score(s).
std::vector<FeatureGroup> default_groups(int npt_dim);
void check_groups(const std::vector<FeatureGroup>& groups, int npt_dim);

// Averages that replace absent groups. Node-feature columns are averaged per
// graph first and then across the background cohort.
struct Background {
  std::vector<double> node_column_mean;  // kNodeFeatureDim
  std::vector<double> age, edu, npt;
  std::size_t subjects = 0;
};

Background make_background(const std::vector<ModelInput>& cohort);

// Copy of `input` with every absent group replaced by its background value.
ModelInput substitute(const ModelInput& input, const std::vector<FeatureGroup>& groups,
                      const std::vector<bool>& present, const Background& background);

enum class ShapleyMode { Auto, Exact, Sampled };

struct ExplainOptions {
  ShapleyMode mode = ShapleyMode::Auto;  // exact when there are at most 20 groups
  std::size_t permutations = 2048;
  std::uint64_t seed = 0;
};

struct AttributionReport {
  std::string subject_id;
  std::vector<std::string> features;
  std::vector<double> values;
  std::vector<double> std_errors;
  double baseline = 0.0;    // model output with every group absent
  double prediction = 0.0;  // model output on the subject
  std::string mode;
  std::size_t permutations = 0;
};

AttributionReport shapley_values(const TrainedModel& model, const ModelInput& input, const std::string& subject_id,
                                 const std::vector<FeatureGroup>& groups, const Background& background,
                                 const ExplainOptions& options = {});

// Mean |value| per feature across reports, sorted descending (ties keep group order).
std::vector<std::pair<std::string, double>> global_importance(const std::vector<AttributionReport>& reports);

void write_attributions_csv(std::ostream& out, const std::vector<AttributionReport>& reports);
void write_importance_csv(std::ostream& out, const std::vector<std::pair<std::string, double>>& ranking);
std::string importance_svg(const std::vector<std::pair<std::string, double>>& ranking, std::size_t top_k);

}  // namespace cubegraph
