#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cubegraph/error.hpp"
#include "cubegraph/explain.hpp"
#include "model_fixtures.hpp"

using namespace cubegraph;

namespace {

// Random cooperative game stored as a table over coalition bitmasks.
struct TableGame {
  std::vector<double> v;
  std::size_t players;

  TableGame(Rng& rng, std::size_t n) : v(std::size_t{1} << n), players(n) {
    for (double& x : v) x = rng.uniform(-1, 1);
  }
  double operator()(const std::vector<bool>& present) const {
    std::size_t m = 0;
    for (std::size_t i = 0; i < players; ++i) m |= present[i] ? std::size_t{1} << i : 0;
    return v[m];
  }
};

// Shapley values as the average marginal contribution over all n! orders.
std::vector<double> all_orders(std::size_t n, const CoalitionValue& f) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  double count = 0;
  do {
    std::vector<bool> present(n, false);
    double prev = f(present);
    for (std::size_t p : order) {
      present[p] = true;
      const double cur = f(present);
      phi[p] += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& x : phi) x /= count;
  return phi;
}

std::vector<ModelInput> inputs_of(const std::vector<SubjectRecord>& rs) {
  std::vector<ModelInput> v;
  for (const auto& r : rs) v.push_back(make_input(r));
  return v;
}

ModelConfig small_model(const char* mask, std::uint64_t seed) {
  ModelConfig c;
  c.hidden_dim = 8;
  c.attention_heads = 2;
  c.mask = ModalityMask::parse(mask);
  c.seed = seed;
  return c;
}

std::vector<FeatureGroup> pick(const std::vector<std::string>& names) {
  std::vector<FeatureGroup> out;
  for (const auto& g : default_groups(1)) {
    if (std::find(names.begin(), names.end(), g.name) != names.end()) out.push_back(g);
  }
  return out;
}

}  // namespace

TEST(Shapley, LinearTwoPlayerGame) {
  // f = 2a + 3b with background (0, 0) and input (1, 1).
  const auto f = [](const std::vector<bool>& p) { return 2.0 * p[0] + 3.0 * p[1]; };
  const auto r = shapley_exact(2, f);
  EXPECT_EQ(r.values, (std::vector<double>{2.0, 3.0}));
  EXPECT_EQ(r.baseline, 0.0);
  EXPECT_EQ(r.full, 5.0);
  EXPECT_EQ(r.evaluations, 4u);
}

TEST(Shapley, SinglePlayerGetsTheWholeDifference) {
  const auto r = shapley_exact(1, [](const std::vector<bool>& p) { return p[0] ? 0.8 : 0.3; });
  EXPECT_DOUBLE_EQ(r.values[0], 0.5);
}

TEST(Shapley, ExactLimitAndEmptyGame) {
  const auto f = [](const std::vector<bool>&) { return 0.0; };
  EXPECT_THROW(shapley_exact(21, f), Error);
  EXPECT_THROW(shapley_exact(0, f), Error);
  EXPECT_THROW(shapley_sampled(3, f, 0, 1), Error);
}

TEST(ShapleyProperty, ExactMatchesAllOrdersAndIsEfficient) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const TableGame game(rng, n);
    const auto r = shapley_exact(n, std::cref(game));
    const auto ref = all_orders(n, std::cref(game));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(r.values[i], ref[i], 1e-12);
      sum += r.values[i];
    }
    EXPECT_NEAR(sum, game.v.back() - game.v.front(), 1e-6);
  }
}

TEST(ShapleyProperty, DummyPlayerIsExactlyZero) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const std::size_t dummy = rng.below(n);
    const TableGame game(rng, n);
    const auto f = [&](std::vector<bool> p) {
      p[dummy] = false;
      return game(p);
    };
    EXPECT_EQ(shapley_exact(n, f).values[dummy], 0.0);
  }
}

TEST(ShapleyProperty, DuplicatedFeaturesShareEqually) {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(6);
    // Players 0 and 1 are copies of one input: the game depends on how many
    // of them are present, never on which.
    const TableGame base(rng, n);
    const auto f = [&](std::vector<bool> p) {
      const bool either = p[0] || p[1];
      const bool both = p[0] && p[1];
      p[0] = either;
      p[1] = both;
      return base(p);
    };
    const auto r = shapley_exact(n, f);
    EXPECT_NEAR(r.values[0], r.values[1], 1e-9);
  }
}

TEST(ShapleyProperty, SampledIsEfficientPerRun) {
  Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(8);
    const TableGame game(rng, n);
    const auto r = shapley_sampled(n, std::cref(game), 1 + rng.below(50), rng.next());
    EXPECT_NEAR(std::accumulate(r.values.begin(), r.values.end(), 0.0), game.v.back() - game.v.front(), 1e-9);
  }
}

TEST(ShapleyProperty, SampledConvergesToExact) {
  Rng rng(35);
  for (int trial = 0; trial < 5; ++trial) {
    const TableGame game(rng, 8);
    const auto exact = shapley_exact(8, std::cref(game)).values;
    auto error = [&](std::size_t perms) {
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto r = shapley_sampled(8, std::cref(game), perms, seed);
        for (std::size_t i = 0; i < 8; ++i) worst = std::max(worst, std::abs(r.values[i] - exact[i]));
      }
      return worst;
    };
    const double e16 = error(16), e256 = error(256), e4096 = error(4096);
    EXPECT_LT(e256, e16);
    EXPECT_LT(e4096, e256);
    EXPECT_LT(e4096, 0.05);
    const auto r = shapley_sampled(8, std::cref(game), 4096, 9);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_LT(std::abs(r.values[i] - exact[i]), 5.0 * r.std_errors[i] + 1e-12);
  }
}

TEST(ShapleyProperty, SampledIsSeedDeterministic) {
  Rng rng(36);
  const TableGame game(rng, 6);
  EXPECT_EQ(shapley_sampled(6, std::cref(game), 64, 3).values, shapley_sampled(6, std::cref(game), 64, 3).values);
  EXPECT_NE(shapley_sampled(6, std::cref(game), 64, 3).values, shapley_sampled(6, std::cref(game), 64, 4).values);
}

TEST(Groups, DefaultsAreNamedLikeTheFigure) {
  const auto g = default_groups(1);
  std::vector<std::string> names;
  for (const auto& x : g) names.push_back(x.name);
  for (const char* want : {"coordinates", "graphlet 0", "graphlet 6", "graphlet 14", "angles", "age 75-79", "npt"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
  EXPECT_EQ(g.size(), 1u + kOrbitCount + 1u + kAgeGroups + kEduGroups + 1u);
  EXPECT_NO_THROW(check_groups(g, 1));
  EXPECT_EQ(default_groups(5).back().name, "npt executive");
}

TEST(Groups, OverlapAndDuplicatesRejected) {
  auto g = default_groups(1);
  g.push_back({"graphlet six again", GroupKind::Orbit, 6});
  EXPECT_THROW(check_groups(g, 1), Error);
  g = default_groups(1);
  g.push_back({"npt", GroupKind::Npt, 0});
  EXPECT_THROW(check_groups(g, 1), Error);
  EXPECT_THROW(check_groups({{"graphlet 15", GroupKind::Orbit, 15}}, 1), Error);
  EXPECT_THROW(check_groups({}, 1), Error);
}

TEST(Background, AveragesPerGraphThenAcrossCohort) {
  SketchGraph a;
  a.nodes = {{0, 0}, {10, 0}};
  a.edges = {{0, 1}};
  SketchGraph b = cube_graph_q3();
  const auto ra = testutil::make_subject("a", a, 0, 1, {0.2}, 0);
  const auto rb = testutil::make_subject("b", b, 2, 1, {0.6}, 1);
  const Background bg = make_background({make_input(ra), make_input(rb)});
  EXPECT_EQ(bg.subjects, 2u);
  EXPECT_DOUBLE_EQ(bg.npt[0], 0.4);
  EXPECT_DOUBLE_EQ(bg.age[0], 0.5);
  EXPECT_DOUBLE_EQ(bg.age[2], 0.5);
  EXPECT_DOUBLE_EQ(bg.edu[1], 1.0);
  // Orbit 0 is log1p(degree): 1 for the edge, 3 for every cube corner.
  EXPECT_DOUBLE_EQ(bg.node_column_mean[kOrbitOffset], 0.5 * (std::log1p(1.0) + std::log1p(3.0)));
  EXPECT_THROW(make_background({}), Error);
}

TEST(Substitute, PresenceControlsEachBlock) {
  const auto recs = testutil::random_subjects(37, 10);
  const auto ins = inputs_of(recs);
  const Background bg = make_background(ins);
  const auto groups = default_groups(1);
  const ModelInput& x = ins[3];
  EXPECT_EQ(substitute(x, groups, std::vector<bool>(groups.size(), true), bg).node_features, x.node_features);
  const ModelInput none = substitute(x, groups, std::vector<bool>(groups.size(), false), bg);
  for (std::size_t r = 0; r < none.nodes; ++r) {
    for (std::size_t c = 0; c < kNodeFeatureDim; ++c) EXPECT_EQ(none.node_features[r * kNodeFeatureDim + c], bg.node_column_mean[c]);
  }
  EXPECT_EQ(none.age, bg.age);
  EXPECT_EQ(none.edu, bg.edu);
  EXPECT_EQ(none.npt, bg.npt);
  EXPECT_EQ(none.edges, x.edges);

  std::vector<bool> only(groups.size(), true);
  only[1 + 6] = false;  // graphlet 6
  const ModelInput one = substitute(x, groups, only, bg);
  for (std::size_t r = 0; r < x.nodes; ++r) {
    for (std::size_t c = 0; c < kNodeFeatureDim; ++c) {
      const double want = c == static_cast<std::size_t>(kOrbitOffset + 6) ? bg.node_column_mean[c]
                                                                           : x.node_features[r * kNodeFeatureDim + c];
      EXPECT_EQ(one.node_features[r * kNodeFeatureDim + c], want);
    }
  }
  EXPECT_THROW(substitute(x, groups, {true}, bg), Error);
}

TEST(Explain, ModelAttributionsAreEfficient) {
  const auto recs = testutil::random_subjects(38, 12);
  const auto ins = inputs_of(recs);
  const Background bg = make_background(ins);
  const TrainedModel m = init_model(small_model("all", 2));
  const auto groups = pick({"coordinates", "graphlet 2", "graphlet 4", "graphlet 6", "angles", "age 75-79", "npt"});
  ASSERT_EQ(groups.size(), 7u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto rep = shapley_values(m, ins[i], recs[i].subject_id, groups, bg);
    EXPECT_EQ(rep.mode, "exact");
    EXPECT_EQ(rep.prediction, predict(m, ins[i]));
    EXPECT_NEAR(rep.baseline, predict(m, substitute(ins[i], groups, std::vector<bool>(7, false), bg)), 1e-15);
    EXPECT_NEAR(std::accumulate(rep.values.begin(), rep.values.end(), 0.0), rep.prediction - rep.baseline, 1e-6);
  }
}

TEST(Explain, SingleGroupIsOutputDifference) {
  const auto recs = testutil::random_subjects(39, 6);
  const auto ins = inputs_of(recs);
  const Background bg = make_background(ins);
  const TrainedModel m = init_model(small_model("all", 3));
  const auto groups = pick({"npt"});
  const auto rep = shapley_values(m, ins[0], "x", groups, bg);
  EXPECT_NEAR(rep.values[0], predict(m, ins[0]) - predict(m, substitute(ins[0], groups, {false}, bg)), 1e-15);
}

TEST(Explain, MaskedModalitiesGetZero) {
  const auto recs = testutil::random_subjects(40, 8);
  const auto ins = inputs_of(recs);
  const Background bg = make_background(ins);
  const TrainedModel m = init_model(small_model("age,npt", 4));
  const auto groups = pick({"graphlet 6", "graphlet 4", "angles", "edu 13-15", "age 75-79", "npt"});
  for (std::size_t i = 0; i < 3; ++i) {
    const auto rep = shapley_values(m, ins[i], "s", groups, bg);
    for (std::size_t k = 0; k < groups.size(); ++k) {
      if (groups[k].kind != GroupKind::Age && groups[k].kind != GroupKind::Npt) {
        EXPECT_EQ(rep.values[k], 0.0) << groups[k].name;
      }
    }
  }
}

TEST(Explain, AutoModeSamplesLargeGroupSets) {
  const auto recs = testutil::random_subjects(41, 6);
  const auto ins = inputs_of(recs);
  const Background bg = make_background(ins);
  const TrainedModel m = init_model(small_model("all", 5));
  ExplainOptions opt;
  opt.permutations = 16;
  const auto rep = shapley_values(m, ins[0], "s", default_groups(1), bg, opt);
  EXPECT_EQ(rep.mode, "sampled");
  EXPECT_EQ(rep.permutations, 16u);
  EXPECT_NEAR(std::accumulate(rep.values.begin(), rep.values.end(), 0.0), rep.prediction - rep.baseline, 1e-9);

  Background empty = bg;
  empty.subjects = 0;
  EXPECT_THROW(shapley_values(m, ins[0], "s", default_groups(1), empty, opt), Error);
}

TEST(Importance, RankingRules) {
  AttributionReport a{"a", {"x", "y", "z"}, {0.1, -0.5, 0.0}, {0, 0, 0}, 0.4, 0.0, "exact", 0};
  auto one = global_importance({a});
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0], (std::pair<std::string, double>{"y", 0.5}));
  EXPECT_EQ(one[1].first, "x");
  EXPECT_EQ(one[2], (std::pair<std::string, double>{"z", 0.0}));

  AttributionReport b{"b", {"x", "y", "z"}, {-0.7, 0.1, 0.0}, {0, 0, 0}, 0.4, 0.0, "exact", 0};
  const auto two = global_importance({a, b});
  EXPECT_EQ(two[0].first, "x");
  EXPECT_DOUBLE_EQ(two[0].second, 0.4);
  EXPECT_EQ(two[2].second, 0.0);

  AttributionReport c = b;
  c.features = {"x", "y", "w"};
  EXPECT_THROW(global_importance({a, c}), Error);
  EXPECT_THROW(global_importance({}), Error);

  std::ostringstream csv;
  write_importance_csv(csv, two);
  EXPECT_EQ(csv.str(), "rank,feature,mean_abs_shap\n1,x,0.4\n2,y,0.3\n3,z,0\n");
  EXPECT_NE(importance_svg(two, 2).find("top 2"), std::string::npos);
}
