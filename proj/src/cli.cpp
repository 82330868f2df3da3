#include "cubegraph/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "cubegraph/checkpoint.hpp"
#include "cubegraph/cohort.hpp"
#include "cubegraph/error.hpp"
#include "cubegraph/eval.hpp"
#include "cubegraph/explain.hpp"
#include "cubegraph/random.hpp"
#include "cubegraph/svg.hpp"
#include "cubegraph/synth.hpp"

namespace cubegraph {

namespace fs = std::filesystem;

KeyValueConfig default_run_config() {
  KeyValueConfig c;
  c.define("seed", "0", "base seed for splits, initialization and synthesis");
  c.define("raster.window_radius", "15", "half-size of the adaptive threshold window (px)");
  c.define("raster.offset", "10", "intensity margin below the local mean");
  c.define("raster.min_component_px", "20", "smaller 8-connected components are removed");
  c.define("raster.invert", "false", "true for light strokes on a dark background");
  c.define("vectorize.epsilon", "3", "Douglas-Peucker tolerance (px)");
  c.define("vectorize.spur_px", "8", "junction-to-tip branches shorter than this are pruned (px)");
  c.define("vectorize.snap_px", "12", "largest junction shift when correcting corners (px); 0 disables");
  c.define("graph.delta", "10", "endpoint merge radius (px)");
  c.define("features.log_gdv", "true", "use log(1 + count) for orbit features");
  c.define("model.gat_layers", "2", "number of attention layers");
  c.define("model.hidden_dim", "32", "node embedding width");
  c.define("model.attention_heads", "4", "heads per attention layer");
  c.define("model.leaky_slope", "0.2", "negative slope inside the attention score");
  c.define("model.gatv2", "true", "false selects the original attention score");
  c.define("model.mlp_hidden", "16", "hidden width of the modality encoders");
  c.define("model.embed_dim", "8", "output width of each modality encoder");
  c.define("model.fusion_hidden", "16", "hidden width of the fusion classifier");
  c.define("model.epochs", "300", "training epochs");
  c.define("model.batch_size", "16", "subjects per gradient step");
  c.define("model.learning_rate", "0.01", "step size");
  c.define("model.momentum", "0.9", "momentum coefficient");
  c.define("model.weight_decay", "0.0001", "L2 coefficient applied to every parameter");
  c.define("model.class_weight", "0", "loss weight of AD subjects; 0 = #CN/#AD of the training split");
  c.define("model.mask", "all", "enabled modalities, comma separated subset of graph,age,edu,npt");
  c.define("split.train", "0.8", "training fraction");
  c.define("split.val", "0.1", "validation fraction");
  c.define("split.test", "0.1", "test fraction");
  c.define("synth.n", "200", "cohort size");
  c.define("synth.ad_fraction", "0.25", "fraction of AD subjects");
  c.define("synth.npt_dim", "1", "1 = total NPT score, 5 = per-domain scores");
  c.define("synth.gap_px", "16", "stroke retraction at broken corners (px)");
  c.define("synth.profile", "mixed", "distortion profile: mixed or break (corner breaks dominate)");
  c.define("synth.canvas", "256", "image side (px)");
  c.define("synth.template", "box_in_box", "box_in_box or opaque");
  c.define("synth.noise_std", "2", "Gaussian pixel noise");
  c.define("ablate.repeats", "5", "re-splits per modality set");
  c.define("ablate.folds", "0", "k >= 2 runs stratified k-fold cross-validation instead of re-splits");
  c.define("ablate.masks", "graph|all", "modality sets separated by '|'");
  c.define("explain.mode", "auto", "auto, exact or sampled");
  c.define("explain.permutations", "2048", "permutations in sampled mode");
  c.define("explain.top_k", "10", "features shown in the importance chart");
  c.define("explain.subset", "test", "subjects to explain: train, val, test or all");
  return c;
}

namespace {

struct Context {
  KeyValueConfig kv;
  fs::path out;
  std::ostream& log;
  std::string command;

  std::uint64_t seed() const { return kv.get_u64("seed"); }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.raster.window_radius = kv.get_int("raster.window_radius");
    p.raster.offset = kv.get_double("raster.offset");
    p.raster.min_component_px = kv.get_int("raster.min_component_px");
    p.raster.invert = kv.get_bool("raster.invert");
    p.simplify.epsilon = kv.get_double("vectorize.epsilon");
    p.simplify.spur_px = kv.get_double("vectorize.spur_px");
    p.simplify.snap_px = kv.get_double("vectorize.snap_px");
    p.merge.delta = kv.get_double("graph.delta");
    p.features.log_gdv = kv.get_bool("features.log_gdv");
    p.validate();
    return p;
  }

  ModelConfig model(int npt_dim) const {
    ModelConfig m;
    m.gat_layers = kv.get_int("model.gat_layers");
    m.hidden_dim = kv.get_int("model.hidden_dim");
    m.attention_heads = kv.get_int("model.attention_heads");
    m.leaky_slope = kv.get_double("model.leaky_slope");
    m.gatv2 = kv.get_bool("model.gatv2");
    m.mlp_hidden = kv.get_int("model.mlp_hidden");
    m.embed_dim = kv.get_int("model.embed_dim");
    m.fusion_hidden = kv.get_int("model.fusion_hidden");
    m.npt_dim = npt_dim;
    m.epochs = kv.get_int("model.epochs");
    m.batch_size = kv.get_int("model.batch_size");
    m.learning_rate = kv.get_double("model.learning_rate");
    m.momentum = kv.get_double("model.momentum");
    m.weight_decay = kv.get_double("model.weight_decay");
    m.class_weight = kv.get_double("model.class_weight");
    m.mask = ModalityMask::parse(kv.get("model.mask"));
    m.seed = seed();
    m.validate();
    return m;
  }

  SplitSpec split() const {
    SplitSpec s;
    s.train = kv.get_double("split.train");
    s.val = kv.get_double("split.val");
    s.test = kv.get_double("split.test");
    s.seed = seed();
    s.validate();
    return s;
  }

  fs::path dir(const char* name) const {
    fs::path d = out / name;
    fs::create_directories(d);
    return d;
  }

  void echo_config() const {
    fs::create_directories(out);
    std::ofstream f(out / ("config." + command + ".txt"), std::ios::binary);
    f << "# effective configuration of '" << command << "'\n" << kv.dump();
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f << text;
  if (!f) throw IoError(path.string() + ": write failed");
}

template <typename F>
void write_stream(const fs::path& path, F&& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  body(f);
  if (!f) throw IoError(path.string() + ": write failed");
}

std::string path_from(const fs::path& target, const fs::path& base) {
  return fs::proximate(fs::absolute(target), fs::absolute(base)).generic_string();
}

GraphMeta graph_meta(const Context& ctx, const std::string& source) {
  GraphMeta meta;
  meta.source = source;
  for (const char* key : {"raster.window_radius", "raster.offset", "raster.min_component_px", "raster.invert",
                          "vectorize.epsilon", "vectorize.spur_px", "vectorize.snap_px", "graph.delta"}) {
    meta.params[key] = ctx.kv.get(key);
  }
  return meta;
}

void vectorize_one(Context& ctx, const fs::path& image, const std::string& stem, const PipelineConfig& pc) {
  const RasterImage img = load_image(image);
  const PipelineResult r = vectorize_image(img, pc);
  const fs::path graphs = ctx.dir("graphs");
  write_graph(r.graph, graph_meta(ctx, image.generic_string()), graphs / (stem + ".json"));
  write_text(graphs / (stem + ".svg"), overlay_svg(img.width, img.height, r.lines, r.graph));
  write_stream(graphs / (stem + ".polylines.txt"), [&](std::ostream& o) { write_polylines_text(o, r.lines); });
  ctx.log << stem << ": " << r.graph.node_count() << " nodes, " << r.graph.edge_count() << " edges\n";
}

// Vectorizes every manifest row with an image and writes out/manifest.csv
// whose graph_file entries point at the new graphs.
fs::path vectorize_manifest(Context& ctx, const fs::path& manifest_path, const std::optional<fs::path>& images) {
  Manifest m = read_manifest(manifest_path);
  const PipelineConfig pc = ctx.pipeline();
  const fs::path image_base = images.value_or(m.base_dir);
  Manifest updated = m;
  fs::create_directories(ctx.out);
  for (auto& row : updated.rows) {
    if (row.image_file.empty()) throw IoError(manifest_path.string() + ": subject " + row.subject_id + " has no image");
    const fs::path image = image_base / row.image_file;
    vectorize_one(ctx, image, row.subject_id, pc);
    row.image_file = path_from(image, ctx.out);
    if (!row.truth_file.empty()) row.truth_file = path_from(m.base_dir / row.truth_file, ctx.out);
    row.graph_file = "graphs/" + row.subject_id + ".json";
  }
  updated.base_dir = ctx.out;
  const fs::path out_manifest = ctx.out / "manifest.csv";
  write_manifest(updated, out_manifest);
  ctx.log << "wrote " << out_manifest.generic_string() << " (" << updated.rows.size() << " subjects)\n";
  return out_manifest;
}

struct Cohort {
  Manifest manifest;
  std::vector<SubjectRecord> records;
  int npt_dim = 1;
};

Cohort load(const Context& ctx, const fs::path& manifest_path) {
  Cohort c;
  c.manifest = read_manifest(manifest_path);
  c.records = load_cohort(c.manifest, ctx.pipeline());
  c.npt_dim = static_cast<int>(c.manifest.npt_columns.size());
  if (c.records.empty()) throw Error(manifest_path.string() + ": no subjects");
  return c;
}

SplitIndices split_of(const Context& ctx, const Cohort& c) {
  std::vector<int> labels;
  for (const auto& r : c.records) labels.push_back(r.label);
  return stratified_split(labels, ctx.split());
}

std::vector<std::size_t> subset_indices(const SplitIndices& s, const std::string& name, std::size_t n) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  if (name == "all") {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  throw ConfigError("unknown subset '" + name + "' (expected train, val, test or all)");
}

void features_cmd(Context& ctx, const std::string& graph, const std::string& manifest) {
  const PipelineConfig pc = ctx.pipeline();
  const fs::path dir = ctx.dir("features");
  if (!graph.empty()) {
    const SketchGraph g = read_graph(graph);
    const std::string stem = fs::path(graph).stem().string();
    write_stream(dir / (stem + ".csv"), [&](std::ostream& o) { write_features_csv(o, assemble_features(g, pc.features)); });
    ctx.log << stem << ": " << g.node_count() << " feature rows\n";
    return;
  }
  const Cohort c = load(ctx, manifest);
  for (const auto& r : c.records) {
    write_stream(dir / (r.subject_id + ".csv"), [&](std::ostream& o) { write_features_csv(o, r.features); });
  }
  ctx.log << "wrote features for " << c.records.size() << " subjects\n";
}

void synth_cmd(Context& ctx) {
  CohortConfig cfg;
  cfg.n = ctx.kv.get_int("synth.n");
  cfg.ad_fraction = ctx.kv.get_double("synth.ad_fraction");
  cfg.seed = ctx.seed();
  cfg.npt_dim = ctx.kv.get_int("synth.npt_dim");
  cfg.gap_px = ctx.kv.get_double("synth.gap_px");
  cfg.profile = DistortionProfile::named(ctx.kv.get("synth.profile"));
  cfg.render.canvas = ctx.kv.get_int("synth.canvas");
  cfg.render.shape = parse_template(ctx.kv.get("synth.template"));
  cfg.render.noise_std = ctx.kv.get_double("synth.noise_std");
  const auto subjects = generate_cohort(cfg, ctx.out);
  std::size_t ad = 0;
  for (const auto& s : subjects) ad += s.label == 1 ? 1 : 0;
  ctx.log << "wrote " << subjects.size() << " subjects (" << subjects.size() - ad << " CN, " << ad << " AD) to "
          << (ctx.out / "manifest.csv").generic_string() << "\n";
}

fs::path train_cmd(Context& ctx, const fs::path& manifest, const std::string& checkpoint) {
  const Cohort c = load(ctx, manifest);
  const SplitIndices s = split_of(ctx, c);
  const ModelConfig mc = ctx.model(c.npt_dim);
  const TrainedModel model = train(select(c.records, s.train), select(c.records, s.val), mc);
  const fs::path ckpt = checkpoint.empty() ? ctx.dir("checkpoints") / "model.json" : fs::path(checkpoint);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(model, ckpt);
  const fs::path reports = ctx.dir("reports");
  write_stream(reports / "train_history.csv", [&](std::ostream& o) {
    o << "epoch,train_loss,val_macro_f1\n";
    for (const auto& e : model.summary.history) o << e.epoch << ',' << e.train_loss << ',' << e.val_macro_f1 << '\n';
  });
  write_stream(reports / "split.csv", [&](std::ostream& o) {
    o << "subject_id,label,split\n";
    for (const auto& [name, idx] : {std::pair{"train", &s.train}, std::pair{"val", &s.val}, std::pair{"test", &s.test}}) {
      for (std::size_t i : *idx) o << c.records[i].subject_id << ',' << c.records[i].label << ',' << name << '\n';
    }
  });
  ctx.log << "trained on " << s.train.size() << " subjects; best epoch " << model.summary.best_epoch
          << ", validation macro-F1 " << model.summary.best_val_macro_f1 << "\nwrote " << ckpt.generic_string()
          << "\n";
  return ckpt;
}

fs::path default_checkpoint(const Context& ctx, const std::string& given) {
  return given.empty() ? ctx.out / "checkpoints" / "model.json" : fs::path(given);
}

void eval_cmd(Context& ctx, const fs::path& manifest, const std::string& checkpoint, const std::string& subset) {
  const TrainedModel model = load_checkpoint(default_checkpoint(ctx, checkpoint));
  const Cohort c = load(ctx, manifest);
  const auto idx = subset_indices(split_of(ctx, c), subset, c.records.size());
  const auto records = select(c.records, idx);
  const auto scores = predict(model, records);
  std::vector<int> labels;
  for (const auto& r : records) labels.push_back(r.label);
  const MetricReport m = compute_metrics(scores, labels);
  const fs::path reports = ctx.dir("reports");
  write_stream(reports / "metrics.json", [&](std::ostream& o) { write_metrics_json(o, m); });
  write_stream(reports / "predictions.csv", [&](std::ostream& o) { write_predictions_csv(o, records, scores); });
  ctx.log << subset << " subset (" << m.n_samples << " subjects): accuracy " << m.accuracy << ", F1 "
          << m.f1_positive << ", macro-F1 " << m.macro_f1;
  if (m.auc) ctx.log << ", AUC " << *m.auc;
  if (m.auprc) ctx.log << ", AUPRC " << *m.auprc;
  ctx.log << '\n';
}

std::vector<ModalityMask> parse_masks(const std::string& text) {
  std::vector<ModalityMask> masks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('|', start), text.size());
    masks.push_back(ModalityMask::parse(text.substr(start, end - start)));
    start = end + 1;
  }
  return masks;
}

void ablate_cmd(Context& ctx, const fs::path& manifest) {
  const Cohort c = load(ctx, manifest);
  AblationConfig cfg;
  cfg.masks = parse_masks(ctx.kv.get("ablate.masks"));
  cfg.repeats = ctx.kv.get_int("ablate.repeats");
  cfg.folds = ctx.kv.get_int("ablate.folds");
  cfg.seed = ctx.seed();
  cfg.split = ctx.split();
  cfg.model = ctx.model(c.npt_dim);
  const AblationResult r = run_ablation(c.records, cfg);
  const fs::path reports = ctx.dir("reports");
  write_stream(reports / "ablation.csv", [&](std::ostream& o) { write_ablation_csv(o, r); });
  write_stream(reports / "ablation_cells.csv", [&](std::ostream& o) { write_cells_csv(o, r); });
  const std::string table = format_ablation_table(r);
  write_text(reports / "ablation.txt", table);
  write_text(reports / "ablation.svg", ablation_svg(r));
  ctx.log << table;
}

void explain_cmd(Context& ctx, const fs::path& manifest, const std::string& checkpoint) {
  const TrainedModel model = load_checkpoint(default_checkpoint(ctx, checkpoint));
  const Cohort c = load(ctx, manifest);
  const SplitIndices s = split_of(ctx, c);
  std::vector<ModelInput> background;
  for (std::size_t i : s.train) background.push_back(make_input(c.records[i]));
  const Background bg = make_background(background);
  const auto groups = default_groups(model.config.npt_dim);
  ExplainOptions opt;
  const std::string mode = ctx.kv.get("explain.mode");
  if (mode == "auto") {
    opt.mode = ShapleyMode::Auto;
  } else if (mode == "exact") {
    opt.mode = ShapleyMode::Exact;
  } else if (mode == "sampled") {
    opt.mode = ShapleyMode::Sampled;
  } else {
    throw ConfigError("explain.mode must be auto, exact or sampled, got '" + mode + "'");
  }
  opt.permutations = ctx.kv.get_u64("explain.permutations");
  std::vector<AttributionReport> reports;
  for (std::size_t i : subset_indices(s, ctx.kv.get("explain.subset"), c.records.size())) {
    opt.seed = mix_seed(ctx.seed(), i);
    reports.push_back(shapley_values(model, make_input(c.records[i]), c.records[i].subject_id, groups, bg, opt));
  }
  const auto ranking = global_importance(reports);
  const fs::path dir = ctx.dir("reports");
  write_stream(dir / "shap_values.csv", [&](std::ostream& o) { write_attributions_csv(o, reports); });
  write_stream(dir / "shap_importance.csv", [&](std::ostream& o) { write_importance_csv(o, ranking); });
  const auto top_k = static_cast<std::size_t>(ctx.kv.get_int("explain.top_k"));
  write_text(dir / "shap_importance.svg", importance_svg(ranking, top_k));
  ctx.log << "explained " << reports.size() << " subjects (" << reports.front().mode
          << ", background: training split mean)\n";
  for (std::size_t i = 0; i < ranking.size() && i < top_k; ++i) {
    ctx.log << "  " << i + 1 << ". " << ranking[i].first << "  " << ranking[i].second << '\n';
  }
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mask;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output directory (default: $CUBEGRAPH_OUT or ./out)");
  cmd->add_option("--mask", f.mask, "enabled modalities, e.g. graph,age,edu,npt");
  cmd->add_option("--epsilon", f.epsilon, "Douglas-Peucker tolerance (px)");
  cmd->add_option("--delta", f.delta, "endpoint merge radius (px)");
  cmd->add_option("--set", f.sets, "override a config key (key=value), repeatable");
}

std::string format_number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

KeyValueConfig resolve_config(const CommonFlags& f) {
  KeyValueConfig kv = default_run_config();
  if (!f.config.empty()) kv.load_file(f.config);
  for (const auto& s : f.sets) kv.set_assignment(s, "--set");
  auto flag = [&](const std::string& key, const std::string& value, const std::string& name) {
    if (kv.origin(key) == "--set" && kv.get(key) != value) {
      throw ConfigError("conflicting values for " + key + ": " + name + " " + value + " vs --set " + kv.get(key));
    }
    kv.set(key, value, name);
  };
  if (f.seed) flag("seed", std::to_string(*f.seed), "--seed");
  if (!f.mask.empty()) flag("model.mask", f.mask, "--mask");
  if (f.epsilon) flag("vectorize.epsilon", format_number(*f.epsilon), "--epsilon");
  if (f.delta) flag("graph.delta", format_number(*f.delta), "--delta");
  return kv;
}

fs::path output_root(const CommonFlags& f) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv("CUBEGRAPH_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cube-copying sketch analysis: vectorize drawings, build corner graphs, train and explain "
               "multimodal classifiers."};
  app.name("cubegraph");
  app.require_subcommand(1);
  CommonFlags common;
  std::string image, manifest, graph, checkpoint, images_dir, subset = "test", masks, masks_flag;
  std::optional<int> repeats;

  auto* vec = app.add_subcommand("vectorize", "image (or every manifest image) -> graph file + SVG overlay");
  vec->add_option("--image", image, "input PNG or PGM")->check(CLI::ExistingFile);
  vec->add_option("--manifest", manifest, "cohort manifest CSV")->check(CLI::ExistingFile);
  vec->add_option("--images", images_dir, "directory holding the manifest images")->check(CLI::ExistingDirectory);
  auto* feat = app.add_subcommand("features", "graph (or every manifest subject) -> node feature CSV");
  feat->add_option("--graph", graph, "graph JSON file")->check(CLI::ExistingFile);
  feat->add_option("--manifest", manifest, "cohort manifest CSV")->check(CLI::ExistingFile);
  auto* syn = app.add_subcommand("synth", "generate a synthetic cohort (images, truth graphs, manifest)");
  auto* trn = app.add_subcommand("train", "train the fusion model on the training split");
  trn->add_option("--manifest", manifest, "cohort manifest CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--checkpoint", checkpoint, "output checkpoint (default <out>/checkpoints/model.json)");
  auto* evl = app.add_subcommand("eval", "score a split with a trained checkpoint");
  evl->add_option("--manifest", manifest, "cohort manifest CSV")->required()->check(CLI::ExistingFile);
  evl->add_option("--checkpoint", checkpoint, "checkpoint (default <out>/checkpoints/model.json)");
  evl->add_option("--subset", subset, "train, val, test or all")->check(CLI::IsMember({"train", "val", "test", "all"}));
  auto* abl = app.add_subcommand("ablate", "repeated train/test cycles per modality set");
  abl->add_option("--manifest", manifest, "cohort manifest CSV")->required()->check(CLI::ExistingFile);
  abl->add_option("--masks", masks_flag, "modality sets separated by '|', e.g. graph|all");
  abl->add_option("--repeats", repeats, "re-splits per modality set");
  auto* exp = app.add_subcommand("explain", "Shapley attributions and global feature ranking");
  exp->add_option("--manifest", manifest, "cohort manifest CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--checkpoint", checkpoint, "checkpoint (default <out>/checkpoints/model.json)");
  auto* pipe = app.add_subcommand("pipeline", "vectorize, features, train, eval and explain in sequence");
  pipe->add_option("--manifest", manifest, "cohort manifest CSV")->required()->check(CLI::ExistingFile);
  pipe->add_option("--images", images_dir, "directory holding the manifest images")->check(CLI::ExistingDirectory);
  for (auto* cmd : {vec, feat, syn, trn, evl, abl, exp, pipe}) add_common(cmd, common);

  std::vector<const char*> argv{"cubegraph"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx{resolve_config(common), output_root(common), out, app.get_subcommands().front()->get_name()};
    if (!masks_flag.empty()) ctx.kv.set("ablate.masks", masks_flag, "--masks");
    if (repeats) ctx.kv.set("ablate.repeats", std::to_string(*repeats), "--repeats");
    const std::optional<fs::path> images =
        images_dir.empty() ? std::nullopt : std::optional<fs::path>(fs::path(images_dir));
    ctx.echo_config();
    if (vec->parsed()) {
      if (image.empty() == manifest.empty()) throw ConfigError("vectorize needs exactly one of --image or --manifest");
      if (!image.empty()) {
        vectorize_one(ctx, image, fs::path(image).stem().string(), ctx.pipeline());
      } else {
        vectorize_manifest(ctx, manifest, images);
      }
    } else if (feat->parsed()) {
      if (graph.empty() == manifest.empty()) throw ConfigError("features needs exactly one of --graph or --manifest");
      features_cmd(ctx, graph, manifest);
    } else if (syn->parsed()) {
      synth_cmd(ctx);
    } else if (trn->parsed()) {
      train_cmd(ctx, manifest, checkpoint);
    } else if (evl->parsed()) {
      eval_cmd(ctx, manifest, checkpoint, subset);
    } else if (abl->parsed()) {
      ablate_cmd(ctx, manifest);
    } else if (exp->parsed()) {
      explain_cmd(ctx, manifest, checkpoint);
    } else if (pipe->parsed()) {
      const fs::path vectorized = vectorize_manifest(ctx, manifest, images);
      features_cmd(ctx, "", vectorized.string());
      const fs::path ckpt = train_cmd(ctx, vectorized, "");
      eval_cmd(ctx, vectorized, ckpt.string(), "test");
      explain_cmd(ctx, vectorized, ckpt.string());
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cubegraph
