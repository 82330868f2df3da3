#pragma once

#include <string>
#include <vector>

#include "cubegraph/features.hpp"
#include "cubegraph/model.hpp"
#include "cubegraph/random.hpp"
#include "oracles.hpp"

namespace testutil {

inline cubegraph::SubjectRecord make_subject(const std::string& id, cubegraph::SketchGraph g, int age, int edu,
                                             std::vector<double> npt, int label) {
  cubegraph::SubjectRecord r;
  r.subject_id = id;
  r.features = cubegraph::assemble_features(g);
  r.graph = std::move(g);
  r.age_group = age;
  r.edu_group = edu;
  r.npt = std::move(npt);
  r.label = label;
  return r;
}

// Random subjects on random connected graphs with scattered coordinates.
inline std::vector<cubegraph::SubjectRecord> random_subjects(std::uint64_t seed, int n, int npt_dim = 1) {
  cubegraph::Rng rng(seed);
  std::vector<cubegraph::SubjectRecord> out;
  for (int i = 0; i < n; ++i) {
    auto g = oracle::random_connected_graph(rng, 2 + static_cast<int>(rng.below(8)), 0.35);
    for (auto& p : g.nodes) p = {rng.uniform(0, 200), rng.uniform(0, 200)};
    std::vector<double> npt;
    for (int k = 0; k < npt_dim; ++k) npt.push_back(rng.uniform());
    out.push_back(make_subject("R" + std::to_string(i), std::move(g), static_cast<int>(rng.below(cubegraph::kAgeGroups)),
                               static_cast<int>(rng.below(cubegraph::kEduGroups)), std::move(npt), i % 2));
  }
  return out;
}

}  // namespace testutil
