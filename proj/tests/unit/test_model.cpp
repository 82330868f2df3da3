#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cubegraph/checkpoint.hpp"
#include "cubegraph/cohort.hpp"
#include "cubegraph/pipeline.hpp"
#include "cubegraph/synth.hpp"
#include "cubegraph/error.hpp"
#include "cubegraph/eval.hpp"
#include "cubegraph/model.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

using namespace cubegraph;

namespace {

ModelConfig small_config(std::uint64_t seed = 0) {
  ModelConfig c;
  c.hidden_dim = 8;
  c.attention_heads = 2;
  c.mlp_hidden = 6;
  c.embed_dim = 4;
  c.fusion_hidden = 5;
  c.seed = seed;
  return c;
}

std::vector<const ModelInput*> pointers(const std::vector<ModelInput>& v) {
  std::vector<const ModelInput*> p;
  for (const auto& x : v) p.push_back(&x);
  return p;
}

std::vector<ModelInput> inputs_of(const std::vector<SubjectRecord>& rs) {
  std::vector<ModelInput> v;
  for (const auto& r : rs) v.push_back(make_input(r));
  return v;
}

// Linearly separable on two NPT-like features: label = x0 + x1 > 1, with a
// margin of 0.1 on both sides.
std::vector<SubjectRecord> separable_set(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<SubjectRecord> out;
  while (static_cast<int>(out.size()) < n) {
    const double a = rng.uniform(), b = rng.uniform();
    if (std::abs(a + b - 1.0) < 0.1) continue;
    SketchGraph g;
    g.nodes = {{0, 0}, {1, 0}};
    g.edges = {{0, 1}};
    out.push_back(testutil::make_subject("T" + std::to_string(out.size()), g, 0, 0, {a, b}, a + b > 1.0 ? 1 : 0));
  }
  return out;
}

}  // namespace

TEST(ModalityMask, ParseAndPrint) {
  EXPECT_EQ(ModalityMask::parse("all"), ModalityMask{});
  const auto m = ModalityMask::parse("graph, npt");
  EXPECT_TRUE(m.graph && m.npt && !m.age && !m.edu);
  EXPECT_EQ(m.to_string(), "graph,npt");
  EXPECT_EQ(ModalityMask::parse(ModalityMask{}.to_string()), ModalityMask{});
  EXPECT_THROW(ModalityMask::parse("graph,shoe"), ConfigError);
  EXPECT_THROW(ModalityMask::parse(""), ConfigError);
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  c.hidden_dim = 30;  // not divisible by 4 heads
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SubjectRecord, Validation) {
  auto r = testutil::random_subjects(1, 1)[0];
  EXPECT_NO_THROW(r.validate());
  r.npt = {1.5};
  EXPECT_THROW(r.validate(), Error);
  r.npt = {0.5};
  r.age_group = 9;
  EXPECT_THROW(r.validate(), Error);
}

TEST(Model, ZeroParametersGiveOneHalf) {
  TrainedModel m = init_model(ModelConfig{});
  for (auto& p : m.params) p->value.fill(0.0);
  for (const auto& in : inputs_of(testutil::random_subjects(2, 5))) EXPECT_EQ(predict(m, in), 0.5);
}

TEST(Model, ParameterNamesAndShapes) {
  const TrainedModel m = init_model(ModelConfig{});
  EXPECT_EQ(m.params.get("gat.0.head.0.W").value.shape(), (std::vector<std::size_t>{20, 8}));
  EXPECT_EQ(m.params.get("gat.1.head.3.W").value.shape(), (std::vector<std::size_t>{32, 32}));
  EXPECT_EQ(m.params.get("gat.1.head.3.a").value.shape(), (std::vector<std::size_t>{32, 1}));
  EXPECT_EQ(m.params.get("age.0.W").value.shape(), (std::vector<std::size_t>{9, 16}));
  EXPECT_EQ(m.params.get("edu.2.W").value.shape(), (std::vector<std::size_t>{16, 8}));
  EXPECT_EQ(m.params.get("fusion.0.W").value.shape(), (std::vector<std::size_t>{56, 16}));
  EXPECT_EQ(m.params.get("fusion.1.W").value.shape(), (std::vector<std::size_t>{16, 1}));
  ModelConfig v1;
  v1.gatv2 = false;
  const TrainedModel o = init_model(v1);
  EXPECT_TRUE(o.params.contains("gat.0.head.0.a_src"));
  EXPECT_FALSE(o.params.contains("gat.0.head.0.a"));
}

// With one node the only attention edge is the self-loop (weight 1), so each
// layer is tanh(h W + b) with heads concatenated, and averaged at the end.
TEST(Gat, SingleNodeIsSelfTransform) {
  const ModelConfig cfg = small_config(3);
  const TrainedModel m = init_model(cfg);
  SketchGraph g;
  g.nodes = {{5, 5}};
  auto rec = testutil::make_subject("one", g, 0, 0, {0.5}, 0);
  // A one-node graph has no assembled edges; give it nonzero features.
  for (std::size_t c = 0; c < kNodeFeatureDim; ++c) rec.features.values[c] = 0.05 * static_cast<double>(c) - 0.3;
  const ModelInput in = make_input(rec);

  std::vector<double> h(in.node_features.begin(), in.node_features.end());
  for (int l = 0; l < cfg.gat_layers; ++l) {
    const bool last = l + 1 == cfg.gat_layers;
    const std::size_t width = last ? 8 : 4;
    std::vector<double> out(8, 0.0);
    for (int k = 0; k < cfg.attention_heads; ++k) {
      const auto& W = m.params.get("gat." + std::to_string(l) + ".head." + std::to_string(k) + ".W").value;
      for (std::size_t j = 0; j < width; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * W(i, j);
        if (last) {
          out[j] += s / cfg.attention_heads;
        } else {
          out[static_cast<std::size_t>(k) * width + j] = s;
        }
      }
    }
    const auto& b = m.params.get("gat." + std::to_string(l) + ".bias").value;
    for (std::size_t j = 0; j < 8; ++j) out[j] = std::tanh(out[j] + b[j]);
    h = out;
  }
  const auto emb = graph_embedding(m, in);
  ASSERT_EQ(emb.size(), 8u);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(emb[j], h[j], 1e-12);
}

TEST(Gat, EmbeddingIsBitwiseReproducible) {
  const TrainedModel a = init_model(small_config(9));
  const TrainedModel b = init_model(small_config(9));
  const SubjectRecord r = testutil::make_subject("q", cube_graph_q3(), 1, 1, {0.3}, 0);
  EXPECT_EQ(graph_embedding(a, make_input(r)), graph_embedding(b, make_input(r)));
  EXPECT_NE(graph_embedding(a, make_input(r)), graph_embedding(init_model(small_config(10)), make_input(r)));
}

TEST(Gat, PermutationInvariant) {
  Rng rng(4);
  for (const bool v2 : {true, false}) {
    ModelConfig cfg = small_config(5);
    cfg.gatv2 = v2;
    const TrainedModel m = init_model(cfg);
    for (const auto& r : testutil::random_subjects(6, 20)) {
      std::vector<int> perm(r.graph.node_count());
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(std::span<int>(perm));
      SketchGraph pg = permute_nodes(r.graph, perm);
      rng.shuffle(std::span<Edge>(pg.edges));
      auto pr = testutil::make_subject(r.subject_id, pg, r.age_group, r.edu_group, r.npt, r.label);
      const auto a = graph_embedding(m, make_input(r));
      const auto b = graph_embedding(m, make_input(pr));
      for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-9);
      EXPECT_NEAR(predict(m, make_input(r)), predict(m, make_input(pr)), 1e-9);
    }
  }
}

TEST(Predict, BatchEqualsOneByOneAndRepeats) {
  const TrainedModel m = init_model(ModelConfig{});
  const auto ins = inputs_of(testutil::random_subjects(7, 70));
  const auto batch = predict(m, ins);
  for (std::size_t i = 0; i < ins.size(); ++i) {
    EXPECT_EQ(batch[i], predict(m, ins[i]));
    EXPECT_EQ(predict(m, ins[i]), predict(m, ins[i]));
    EXPECT_GT(batch[i], 0.0);
    EXPECT_LT(batch[i], 1.0);
  }
}

TEST(Predict, EmbeddingShortcutMatches) {
  const TrainedModel m = init_model(ModelConfig{});
  for (const auto& in : inputs_of(testutil::random_subjects(8, 10))) {
    EXPECT_NEAR(predict_with_embedding(m, graph_embedding(m, in), in), predict(m, in), 1e-15);
  }
}

TEST(Masking, DisabledModalitiesAreIgnored) {
  const auto subjects = testutil::random_subjects(9, 6);
  for (const char* spec : {"graph", "age", "edu", "npt", "graph,npt", "age,edu"}) {
    ModelConfig cfg = small_config(1);
    cfg.mask = ModalityMask::parse(spec);
    const TrainedModel m = init_model(cfg);
    for (const auto& r : subjects) {
      ModelInput in = make_input(r);
      const double base = predict(m, in);
      ModelInput other = in;
      if (!cfg.mask.graph) {
        for (double& v : other.node_features) v += 0.7;
        other.edges.clear();
      }
      if (!cfg.mask.age) std::rotate(other.age.begin(), other.age.begin() + 1, other.age.end());
      if (!cfg.mask.edu) std::rotate(other.edu.begin(), other.edu.begin() + 1, other.edu.end());
      if (!cfg.mask.npt) other.npt[0] = 1.0 - other.npt[0];
      EXPECT_EQ(predict(m, other), base) << spec;
    }
  }
}

TEST(Masking, EnabledModalityMatters) {
  ModelConfig cfg = small_config(2);
  cfg.mask = ModalityMask::parse("npt");
  const TrainedModel m = init_model(cfg);
  ModelInput in = make_input(testutil::random_subjects(10, 1)[0]);
  const double a = predict(m, in);
  in.npt[0] = 1.0 - in.npt[0];
  EXPECT_NE(predict(m, in), a);
}

TEST(Model, WrongNptWidthIsShapeError) {
  const TrainedModel m = init_model(ModelConfig{});
  const auto in = make_input(testutil::random_subjects(11, 1, 5)[0]);
  EXPECT_THROW(predict(m, in), ShapeError);
}

// With a linear score, a_dst . Wh_i is constant over the softmax of node i,
// so its gradient vanishes identically. The finite-difference check meets
// such exact zeros whenever a layer's scores share a LeakyReLU side.
TEST(Gradient, OriginalGatDestinationVectorHasZeroGradient) {
  ModelConfig cfg = small_config(4);
  cfg.gatv2 = false;
  cfg.leaky_slope = 1.0;
  TrainedModel m = init_model(cfg);
  const auto ins = inputs_of(testutil::random_subjects(104, 4));
  const auto batch = pointers(ins);
  m.params.zero_grad();
  ad::Tape tape;
  tape.backward(loss_on(tape, m, batch, {0, 1, 1, 0}, 2.5));
  int checked = 0;
  for (const auto& p : m.params) {
    if (p->name.find("a_dst") == std::string::npos) continue;
    for (std::size_t i = 0; i < p->grad.size(); ++i) EXPECT_NEAR(p->grad[i], 0.0, 1e-15) << p->name;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Gradient, FullModelMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const bool v2 : {true, false}) {
      ModelConfig cfg = small_config(seed);
      cfg.gatv2 = v2;
      TrainedModel m = init_model(cfg);
      const auto ins = inputs_of(testutil::random_subjects(100 + seed, 4));
      const auto batch = pointers(ins);
      const std::vector<int> labels{0, 1, 1, 0};
      auto build = [&](ad::Tape& t) { return loss_on(t, m, batch, labels, 2.5); };
      const auto report = ad::finite_difference_check(build, m.params, 1e-5);
      EXPECT_LT(report.max_relative_error, 1e-4)
          << report.worst_parameter << "[" << report.worst_index << "] analytic " << report.analytic << " numeric "
          << report.numeric;
    }
  }
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  const auto data = testutil::random_subjects(12, 20);
  ModelConfig cfg = small_config(4);
  cfg.epochs = 0;
  const TrainedModel m = train(data, data, cfg);
  const TrainedModel init = init_model(cfg);
  for (const auto& p : init.params) EXPECT_EQ(m.params.get(p->name).value, p->value);
  EXPECT_EQ(m.summary.best_epoch, 0);
  ASSERT_EQ(m.summary.history.size(), 1u);
}

TEST(Train, LossDecreasesAtSmallStepOnSeparableToy) {
  const auto data = separable_set(13, 40);
  ModelConfig cfg = small_config(5);
  cfg.mask = ModalityMask::parse("npt");
  cfg.npt_dim = 2;
  cfg.epochs = 10;
  cfg.batch_size = 40;
  cfg.learning_rate = 1e-3;
  cfg.momentum = 0.0;
  const TrainedModel m = train(data, data, cfg);
  ASSERT_EQ(m.summary.history.size(), 10u);
  for (std::size_t e = 1; e < 10; ++e) {
    EXPECT_LT(m.summary.history[e].train_loss, m.summary.history[e - 1].train_loss) << "epoch " << e + 1;
  }
}

TEST(Train, SeparableToyReachesPerfectValidation) {
  const auto data = separable_set(14, 80);
  const std::vector<SubjectRecord> tr(data.begin(), data.begin() + 60), va(data.begin() + 60, data.end());
  ModelConfig cfg;
  cfg.mask = ModalityMask::parse("npt");
  cfg.npt_dim = 2;
  cfg.epochs = 200;
  cfg.seed = 3;
  const TrainedModel m = train(tr, va, cfg);
  EXPECT_EQ(m.summary.best_val_macro_f1, 1.0);
  std::vector<int> y;
  for (const auto& r : va) y.push_back(r.label);
  EXPECT_EQ(macro_f1(predict(m, va), y), 1.0);
  // The kept model is the best validation epoch, the earliest among ties.
  for (const auto& h : m.summary.history) {
    EXPECT_LE(h.val_macro_f1, m.summary.best_val_macro_f1);
    if (h.epoch < m.summary.best_epoch) {
      EXPECT_LT(h.val_macro_f1, m.summary.best_val_macro_f1);
    }
  }
  EXPECT_EQ(m.summary.history[static_cast<std::size_t>(m.summary.best_epoch - 1)].val_macro_f1,
            m.summary.best_val_macro_f1);
}

TEST(Train, DeterministicUnderSeed) {
  const auto data = testutil::random_subjects(15, 24);
  const std::vector<SubjectRecord> tr(data.begin(), data.begin() + 16), va(data.begin() + 16, data.end());
  ModelConfig cfg = small_config(6);
  cfg.epochs = 5;
  EXPECT_EQ(checkpoint_to_json(train(tr, va, cfg)), checkpoint_to_json(train(tr, va, cfg)));
}

TEST(Train, ErrorsAreReported) {
  const auto data = testutil::random_subjects(16, 10);
  ModelConfig cfg = small_config(7);
  cfg.epochs = 1;
  EXPECT_THROW(train({}, data, cfg), TrainingError);
  EXPECT_THROW(train(data, {}, cfg), TrainingError);
  std::vector<SubjectRecord> one_class;
  for (const auto& r : data) {
    if (r.label == 0) one_class.push_back(r);
  }
  EXPECT_THROW(train(one_class, data, cfg), TrainingError);
  cfg.npt_dim = 5;
  EXPECT_THROW(train(data, data, cfg), TrainingError);
  cfg.npt_dim = 1;
  cfg.learning_rate = 1e300;
  cfg.epochs = 50;
  try {
    train(data, data, cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto data = testutil::random_subjects(17, 20);
  ModelConfig cfg = small_config(8);
  cfg.epochs = 3;
  cfg.mask = ModalityMask::parse("graph,age,npt");
  const TrainedModel m = train(data, data, cfg);
  const auto dir = testutil::scratch_dir();
  save_checkpoint(m, dir / "m.json");
  const TrainedModel back = load_checkpoint(dir / "m.json");
  EXPECT_EQ(checkpoint_to_json(back), testutil::slurp(dir / "m.json"));
  EXPECT_EQ(back.config.mask, cfg.mask);
  EXPECT_EQ(back.summary.best_epoch, m.summary.best_epoch);
  EXPECT_EQ(predict(back, data), predict(m, data));
}

TEST(Checkpoint, RejectsMismatchedShapesAndVersions) {
  const TrainedModel m = init_model(small_config(1));
  std::string text = checkpoint_to_json(m);
  EXPECT_NO_THROW(checkpoint_from_json(text));
  const std::string hidden = "\"hidden_dim\": 8";
  ASSERT_NE(text.find(hidden), std::string::npos);
  std::string bad = text;
  bad.replace(bad.find(hidden), hidden.size(), "\"hidden_dim\": 16");
  EXPECT_THROW(checkpoint_from_json(bad), Error);
  std::string version = text;
  const std::string v = "\"format_version\": 1";
  ASSERT_NE(version.find(v), std::string::npos);
  version.replace(version.find(v), v.size(), "\"format_version\": 99");
  EXPECT_THROW(checkpoint_from_json(version), Error);
  EXPECT_THROW(checkpoint_from_json("{"), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.json"), IoError);
}

// End-to-end: a graph-only model trained on a synthetic cohort scores a clean
// cube as CN and a heavily broken one as AD.
TEST(Train, SyntheticModelSeparatesCleanFromDistortedCube) {
  const PipelineConfig pc;
  const auto cohort = synthesize_cohort(CohortConfig{}, pc);
  std::vector<int> labels;
  for (const auto& r : cohort) labels.push_back(r.label);
  const SplitIndices idx = stratified_split(labels, SplitSpec{});
  ModelConfig cfg;
  cfg.mask = ModalityMask::parse("graph");
  const TrainedModel m = train(select(cohort, idx.train), select(cohort, idx.val), cfg);

  auto score = [&](const DistortionParams& p) {
    ManifestRow row;
    row.subject_id = "probe";
    row.npt = {0.5};
    const SketchGraph g = vectorize_image(render_cube(p).image, pc).graph;
    return predict(m, make_input(make_record(row, g, pc.features)));
  };
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    DistortionParams clean;
    clean.seed = 77 + seed;
    DistortionParams broken = clean;
    broken.jitter_px = 5.0;
    broken.break_prob = 1.0;
    EXPECT_LT(score(clean), 0.5) << "seed " << seed;
    EXPECT_GT(score(broken), 0.5) << "seed " << seed;
  }
}
