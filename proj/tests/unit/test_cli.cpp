#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "cubegraph/cli.hpp"
#include "cubegraph/error.hpp"
#include "cubegraph/graph.hpp"
#include "cubegraph/kvconfig.hpp"
#include "cubegraph/raster.hpp"
#include "cubegraph/synth.hpp"
#include "test_util.hpp"

using namespace cubegraph;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Settings small enough for a quick end-to-end run.
std::vector<std::string> quick(std::vector<std::string> args, const fs::path& out) {
  for (const char* s : {"synth.n=20", "model.epochs=3", "model.hidden_dim=8", "model.attention_heads=2",
                        "explain.permutations=4", "ablate.repeats=1"}) {
    args.push_back("--set");
    args.push_back(s);
  }
  args.push_back("--out");
  args.push_back(out.string());
  return args;
}

void synth(const fs::path& dir) {
  const CliRun r = cli(quick({"synth", "--seed", "4"}, dir));
  ASSERT_EQ(r.code, 0) << r.err;
}

}  // namespace

TEST(KeyValueConfig, ParsesAndRejects) {
  KeyValueConfig kv;
  kv.define("a", "1", "first");
  kv.define("b.c", "x", "second");
  kv.load_text("# comment\n\n  a = 7 \nb.c=hello world\n", "file");
  EXPECT_EQ(kv.get_int("a"), 7);
  EXPECT_EQ(kv.get("b.c"), "hello world");
  EXPECT_EQ(kv.origin("a"), "file:3");
  EXPECT_EQ(kv.dump(), "a = 7\nb.c = hello world\n");
  try {
    kv.load_text("zzz=1\n", "cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg:1: unknown config key 'zzz'"), std::string::npos);
  }
  EXPECT_THROW(kv.set_assignment("novalue", "--set"), ConfigError);
  kv.set("a", "7.5", "--set");
  EXPECT_THROW(kv.get_int("a"), ConfigError);
  EXPECT_EQ(kv.get_double("a"), 7.5);
  kv.set("a", "-3", "--set");
  EXPECT_THROW(kv.get_u64("a"), ConfigError);
  kv.set("a", "yes", "--set");
  EXPECT_TRUE(kv.get_bool("a"));
  kv.set("a", "maybe", "--set");
  EXPECT_THROW(kv.get_bool("a"), ConfigError);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"synth", "--no-such-flag"}).code, 2);
  EXPECT_EQ(cli({"train"}).code, 2);  // --manifest is required
  EXPECT_EQ(cli({"train", "--manifest", "/nonexistent/manifest.csv"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, ConfigProblemsAreDiagnosed) {
  const auto dir = testutil::scratch_dir();
  CliRun r = cli({"synth", "--set", "synth.shoe=1", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown config key 'synth.shoe'"), std::string::npos) << r.err;

  r = cli({"synth", "--set", "seed=4", "--seed", "5", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("conflicting values for seed"), std::string::npos) << r.err;

  r = cli({"synth", "--set", "synth.n=abc", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("synth.n expects an integer"), std::string::npos) << r.err;

  r = cli({"vectorize", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("exactly one of --image or --manifest"), std::string::npos) << r.err;
}

TEST(Cli, ConfigFileAndEcho) {
  const auto dir = testutil::scratch_dir();
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# small cohort\nsynth.n = 12\nseed = 9\n";
  }
  const CliRun r = cli({"synth", "--config", (dir / "run.cfg").string(), "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string echo = testutil::slurp(dir / "o" / "config.synth.txt");
  EXPECT_NE(echo.find("seed = 9\n"), std::string::npos);
  EXPECT_NE(echo.find("synth.n = 12\n"), std::string::npos);
  EXPECT_NE(r.out.find("wrote 12 subjects (9 CN, 3 AD)"), std::string::npos) << r.out;
}

TEST(Cli, OutputRootFromEnvironment) {
  const auto dir = testutil::scratch_dir();
  ::setenv("CUBEGRAPH_OUT", (dir / "env").c_str(), 1);
  const CliRun r = cli({"synth", "--set", "synth.n=10"});
  ::unsetenv("CUBEGRAPH_OUT");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "env" / "manifest.csv"));
}

TEST(Cli, SynthIsByteReproducible) {
  const auto dir = testutil::scratch_dir();
  synth(dir / "a");
  synth(dir / "b");
  EXPECT_EQ(testutil::slurp(dir / "a" / "manifest.csv"), testutil::slurp(dir / "b" / "manifest.csv"));
  EXPECT_EQ(testutil::slurp(dir / "a" / "images" / "S0000.png"), testutil::slurp(dir / "b" / "images" / "S0000.png"));
}

TEST(Cli, VectorizeRecoversReferenceTopology) {
  const auto dir = testutil::scratch_dir();
  DistortionParams clean;
  clean.seed = 2;
  write_png(render_cube(clean).image, dir / "cube.png");
  const CliRun r = cli({"vectorize", "--image", (dir / "cube.png").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const SketchGraph g = read_graph(dir / "graphs" / "cube.json");
  EXPECT_TRUE(find_isomorphism(g, cube_graph_q3()).has_value());
  EXPECT_TRUE(fs::exists(dir / "graphs" / "cube.svg"));
  EXPECT_NE(r.out.find("cube: 8 nodes, 12 edges"), std::string::npos) << r.out;
}

TEST(Cli, TrainIsByteReproducible) {
  const auto dir = testutil::scratch_dir();
  synth(dir / "cohort");
  const std::string manifest = (dir / "cohort" / "manifest.csv").string();
  for (const char* run : {"a", "b"}) {
    const CliRun r = cli(quick({"train", "--manifest", manifest}, dir / run));
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string a = testutil::slurp(dir / "a" / "checkpoints" / "model.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, testutil::slurp(dir / "b" / "checkpoints" / "model.json"));
  EXPECT_EQ(testutil::slurp(dir / "a" / "reports" / "split.csv"), testutil::slurp(dir / "b" / "reports" / "split.csv"));
}

TEST(Cli, AblateWritesOneRowPerMask) {
  const auto dir = testutil::scratch_dir();
  synth(dir / "cohort");
  const CliRun r = cli(quick({"ablate", "--manifest", (dir / "cohort" / "manifest.csv").string(), "--masks", "graph|all"},
                          dir / "abl"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(testutil::slurp(dir / "abl" / "reports" / "ablation.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].substr(0, 32), "modalities,repeats,accuracy_mean");
  EXPECT_EQ(lines[1].substr(0, 10), "\"graph\",1,");
  EXPECT_EQ(lines[2].substr(0, 8), "\"all\",1,");
  EXPECT_NE(r.out.find("Macro-F1"), std::string::npos);
}

TEST(Cli, MissingCheckpointIsModuleError) {
  const auto dir = testutil::scratch_dir();
  synth(dir / "cohort");
  const CliRun r = cli(quick({"eval", "--manifest", (dir / "cohort" / "manifest.csv").string()}, dir / "none"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
}

TEST(Cli, PipelineEqualsComposition) {
  const auto dir = testutil::scratch_dir();
  synth(dir / "cohort");
  const std::string manifest = (dir / "cohort" / "manifest.csv").string();
  const fs::path p = dir / "pipe", s = dir / "steps";
  ASSERT_EQ(cli(quick({"pipeline", "--manifest", manifest}, p)).code, 0);

  ASSERT_EQ(cli(quick({"vectorize", "--manifest", manifest}, s)).code, 0);
  const std::string vectorized = (s / "manifest.csv").string();
  ASSERT_EQ(cli(quick({"features", "--manifest", vectorized}, s)).code, 0);
  ASSERT_EQ(cli(quick({"train", "--manifest", vectorized}, s)).code, 0);
  ASSERT_EQ(cli(quick({"eval", "--manifest", vectorized}, s)).code, 0);
  const CliRun last = cli(quick({"explain", "--manifest", vectorized}, s));
  ASSERT_EQ(last.code, 0) << last.err;

  for (const char* file : {"manifest.csv", "graphs/S0003.json", "features/S0003.csv", "checkpoints/model.json",
                           "reports/metrics.json", "reports/predictions.csv", "reports/shap_values.csv",
                           "reports/shap_importance.csv"}) {
    const std::string a = testutil::slurp(p / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, testutil::slurp(s / file)) << file;
  }
}
