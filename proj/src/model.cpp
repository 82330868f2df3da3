#include "cubegraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cubegraph/error.hpp"
#include "cubegraph/eval.hpp"
#include "cubegraph/random.hpp"

namespace cubegraph {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void SubjectRecord::validate() const {
  const std::string who = "subject " + subject_id + ": ";
  if (age_group < 0 || age_group >= kAgeGroups) throw Error(who + "age_group out of range 0-8");
  if (edu_group < 0 || edu_group >= kEduGroups) throw Error(who + "edu_group out of range 0-6");
  if (npt.empty()) throw Error(who + "no npt score");
  for (double v : npt) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(who + "npt score outside [0, 1]");
  }
  if (label != 0 && label != 1) throw Error(who + "label must be 0 or 1");
  if (features.rows != graph.node_count()) throw Error(who + "feature rows do not match graph nodes");
}

ModalityMask ModalityMask::parse(std::string_view text) {
  ModalityMask m{false, false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string_view item = text.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "graph") {
      m.graph = true;
    } else if (item == "age") {
      m.age = true;
    } else if (item == "edu") {
      m.edu = true;
    } else if (item == "npt") {
      m.npt = true;
    } else if (item == "all") {
      m = ModalityMask{};
    } else {
      throw ConfigError("unknown modality '" + std::string(item) + "' (expected graph, age, edu, npt or all)");
    }
    start = end + 1;
  }
  if (!m.any()) throw ConfigError("modality mask enables nothing");
  return m;
}

std::string ModalityMask::to_string() const {
  if (graph && age && edu && npt) return "all";
  std::string out;
  auto put = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  put(graph, "graph");
  put(age, "age");
  put(edu, "edu");
  put(npt, "npt");
  return out;
}

void ModelConfig::validate() const {
  if (gat_layers < 1) throw ConfigError("model.gat_layers must be >= 1");
  if (hidden_dim < 1 || attention_heads < 1 || mlp_hidden < 1 || embed_dim < 1 || fusion_hidden < 1 || npt_dim < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (gat_layers > 1 && hidden_dim % attention_heads != 0) {
    throw ConfigError("model.hidden_dim must be divisible by model.attention_heads");
  }
  if (!(leaky_slope >= 0.0)) throw ConfigError("model.leaky_slope must be >= 0");
  if (epochs < 0) throw ConfigError("model.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("model.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("model.learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("model.momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("model.weight_decay must be >= 0");
  if (!mask.any()) throw ConfigError("model.mask enables no modality");
}

ModelInput make_input(const SubjectRecord& r) {
  r.validate();
  ModelInput in;
  in.nodes = r.graph.node_count();
  in.edges = r.graph.edges;
  in.node_features = r.features.values;
  in.age.assign(kAgeGroups, 0.0);
  in.age[static_cast<std::size_t>(r.age_group)] = 1.0;
  in.edu.assign(kEduGroups, 0.0);
  in.edu[static_cast<std::size_t>(r.edu_group)] = 1.0;
  in.npt = r.npt;
  return in;
}

namespace {

std::string layer_name(int layer) { return "gat." + std::to_string(layer); }

int head_width(const ModelConfig& c, int layer) {
  return layer + 1 < c.gat_layers ? c.hidden_dim / c.attention_heads : c.hidden_dim;
}

int layer_input(const ModelConfig& c, int layer) { return layer == 0 ? kNodeFeatureDim : c.hidden_dim; }

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

void add_mlp(ad::ParameterSet& p, const std::string& prefix, const std::vector<int>& widths, Rng& rng) {
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(widths[l]);
    const auto out = static_cast<std::size_t>(widths[l + 1]);
    p.add(prefix + "." + std::to_string(l) + ".W", glorot(in, out, rng));
    p.add(prefix + "." + std::to_string(l) + ".b", Tensor(1, out));
  }
}

Var linear(Tape& t, const ad::ParameterSet& p, const std::string& prefix, Var x) {
  return ad::add_row(t, ad::matmul(t, x, t.parameter(p.get(prefix + ".W"))), t.parameter(p.get(prefix + ".b")));
}

// Hidden layers use tanh; the last layer is linear.
Var mlp(Tape& t, const ad::ParameterSet& p, const std::string& prefix, int layers, Var x) {
  for (int l = 0; l < layers; ++l) {
    x = linear(t, p, prefix + "." + std::to_string(l), x);
    if (l + 1 < layers) x = ad::tanh(t, x);
  }
  return x;
}

struct Batch {
  std::size_t nodes = 0;
  std::vector<double> features;
  std::vector<int> src, dst, graph_of_node;
};

Batch make_batch(const std::vector<const ModelInput*>& inputs) {
  Batch b;
  for (std::size_t g = 0; g < inputs.size(); ++g) {
    const ModelInput& in = *inputs[g];
    if (in.nodes == 0) throw Error("gat_encode: empty graph");
    if (in.node_features.size() != in.nodes * kNodeFeatureDim) throw ShapeError("gat_encode: feature matrix size");
    const int off = static_cast<int>(b.nodes);
    // Incoming edges per target node: self first, then neighbors in edge order.
    std::vector<std::vector<int>> incoming(in.nodes);
    for (std::size_t i = 0; i < in.nodes; ++i) incoming[i].push_back(static_cast<int>(i));
    for (const auto& [u, v] : in.edges) {
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= in.nodes || static_cast<std::size_t>(v) >= in.nodes) {
        throw ShapeError("gat_encode: edge endpoint out of range");
      }
      if (u == v) continue;
      incoming[static_cast<std::size_t>(v)].push_back(u);
      incoming[static_cast<std::size_t>(u)].push_back(v);
    }
    for (std::size_t i = 0; i < in.nodes; ++i) {
      for (int s : incoming[i]) {
        b.src.push_back(off + s);
        b.dst.push_back(off + static_cast<int>(i));
      }
      b.graph_of_node.push_back(static_cast<int>(g));
    }
    b.features.insert(b.features.end(), in.node_features.begin(), in.node_features.end());
    b.nodes += in.nodes;
  }
  return b;
}

Var attention_head(Tape& t, const TrainedModel& m, const std::string& prefix, const Batch& b, Var h) {
  const ModelConfig& c = m.config;
  const auto& p = m.params;
  Var wh = ad::matmul(t, h, t.parameter(p.get(prefix + ".W")));
  Var from = ad::gather_rows(t, wh, b.src);
  Var score;
  if (c.gatv2) {
    Var to = ad::gather_rows(t, wh, b.dst);
    Var mixed = ad::leaky_relu(t, ad::add(t, from, to), c.leaky_slope);
    score = ad::matmul(t, mixed, t.parameter(p.get(prefix + ".a")));
  } else {
    Var el = ad::matmul(t, wh, t.parameter(p.get(prefix + ".a_src")));
    Var er = ad::matmul(t, wh, t.parameter(p.get(prefix + ".a_dst")));
    score = ad::leaky_relu(t, ad::add(t, ad::gather_rows(t, el, b.src), ad::gather_rows(t, er, b.dst)), c.leaky_slope);
  }
  Var alpha = ad::segment_softmax(t, score, b.dst, b.nodes);
  return ad::segment_sum(t, ad::mul_col(t, from, alpha), b.dst, b.nodes);
}

Var encode_batch(Tape& t, const TrainedModel& m, const Batch& b, std::size_t graphs) {
  const ModelConfig& c = m.config;
  Var h = t.constant(Tensor(b.nodes, kNodeFeatureDim, b.features));
  for (int l = 0; l < c.gat_layers; ++l) {
    const bool last = l + 1 == c.gat_layers;
    std::vector<Var> heads;
    for (int k = 0; k < c.attention_heads; ++k) {
      heads.push_back(attention_head(t, m, layer_name(l) + ".head." + std::to_string(k), b, h));
    }
    Var out;
    if (last) {
      out = heads[0];
      for (std::size_t k = 1; k < heads.size(); ++k) out = ad::add(t, out, heads[k]);
      if (heads.size() > 1) out = ad::scale(t, out, 1.0 / static_cast<double>(heads.size()));
    } else {
      out = heads.size() == 1 ? heads[0] : ad::concat_cols(t, heads);
    }
    h = ad::tanh(t, ad::add_row(t, out, t.parameter(m.params.get(layer_name(l) + ".bias"))));
  }
  return ad::segment_mean(t, h, b.graph_of_node, graphs);
}

Var tabular(Tape& t, const std::vector<const ModelInput*>& batch, std::vector<double> ModelInput::*field,
            std::size_t width, const char* name) {
  std::vector<double> values;
  values.reserve(batch.size() * width);
  for (const ModelInput* in : batch) {
    const auto& v = in->*field;
    if (v.size() != width) {
      throw ShapeError(std::string(name) + " input has " + std::to_string(v.size()) + " values, model expects " +
                       std::to_string(width));
    }
    values.insert(values.end(), v.begin(), v.end());
  }
  return t.constant(Tensor(batch.size(), width, std::move(values)));
}

Var fusion_head(Tape& t, const TrainedModel& m, Var graph_emb, const std::vector<const ModelInput*>& batch) {
  const ModelConfig& c = m.config;
  const auto& p = m.params;
  const std::size_t n = batch.size();
  const auto e = static_cast<std::size_t>(c.embed_dim);
  std::vector<Var> parts{graph_emb};
  auto branch = [&](bool on, std::vector<double> ModelInput::*field, std::size_t width, const char* name) {
    if (!on) {
      parts.push_back(t.constant(Tensor(n, e)));
      return;
    }
    parts.push_back(mlp(t, p, name, 3, tabular(t, batch, field, width, name)));
  };
  branch(c.mask.age, &ModelInput::age, kAgeGroups, "age");
  branch(c.mask.edu, &ModelInput::edu, kEduGroups, "edu");
  branch(c.mask.npt, &ModelInput::npt, static_cast<std::size_t>(c.npt_dim), "npt");
  Var z = ad::concat_cols(t, parts);
  return mlp(t, p, "fusion", 2, z);
}

Var graph_branch(Tape& t, const TrainedModel& m, const std::vector<const ModelInput*>& batch) {
  if (!m.config.mask.graph) return t.constant(Tensor(batch.size(), static_cast<std::size_t>(m.config.hidden_dim)));
  return gat_encode(t, m, batch);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

}  // namespace

TrainedModel init_model(const ModelConfig& cfg) {
  cfg.validate();
  TrainedModel m;
  m.config = cfg;
  Rng rng(mix_seed(cfg.seed, 0x6a7));
  auto& p = m.params;
  if (cfg.mask.graph) {
    for (int l = 0; l < cfg.gat_layers; ++l) {
      const auto in = static_cast<std::size_t>(layer_input(cfg, l));
      const auto w = static_cast<std::size_t>(head_width(cfg, l));
      for (int k = 0; k < cfg.attention_heads; ++k) {
        const std::string prefix = layer_name(l) + ".head." + std::to_string(k);
        p.add(prefix + ".W", glorot(in, w, rng));
        if (cfg.gatv2) {
          p.add(prefix + ".a", glorot(w, 1, rng));
        } else {
          p.add(prefix + ".a_src", glorot(w, 1, rng));
          p.add(prefix + ".a_dst", glorot(w, 1, rng));
        }
      }
      p.add(layer_name(l) + ".bias", Tensor(1, static_cast<std::size_t>(cfg.hidden_dim)));
    }
  }
  const int h = cfg.mlp_hidden;
  const int e = cfg.embed_dim;
  if (cfg.mask.age) add_mlp(p, "age", {kAgeGroups, h, h, e}, rng);
  if (cfg.mask.edu) add_mlp(p, "edu", {kEduGroups, h, h, e}, rng);
  if (cfg.mask.npt) add_mlp(p, "npt", {cfg.npt_dim, h, h, e}, rng);
  add_mlp(p, "fusion", {cfg.hidden_dim + 3 * e, cfg.fusion_hidden, 1}, rng);
  return m;
}

Var gat_encode(Tape& tape, const TrainedModel& model, const std::vector<const ModelInput*>& batch) {
  if (batch.empty()) throw Error("gat_encode: empty batch");
  if (!model.config.mask.graph) throw Error("gat_encode: graph modality is disabled in this model");
  return encode_batch(tape, model, make_batch(batch), batch.size());
}

Var forward_logits(Tape& tape, const TrainedModel& model, const std::vector<const ModelInput*>& batch) {
  if (batch.empty()) throw Error("forward: empty batch");
  return fusion_head(tape, model, graph_branch(tape, model, batch), batch);
}

std::vector<double> graph_embedding(const TrainedModel& model, const ModelInput& input) {
  Tape tape(false);
  const auto& v = tape.value(graph_branch(tape, model, {&input})).values();
  return v;
}

double predict_with_embedding(const TrainedModel& model, const std::vector<double>& embedding,
                              const ModelInput& input) {
  if (embedding.size() != static_cast<std::size_t>(model.config.hidden_dim)) {
    throw ShapeError("predict_with_embedding: embedding width");
  }
  Tape tape(false);
  Var g = tape.constant(Tensor(1, embedding.size(), embedding));
  return sigmoid(tape.value(fusion_head(tape, model, g, {&input}))[0]);
}

double predict(const TrainedModel& model, const ModelInput& input) {
  Tape tape(false);
  return sigmoid(tape.value(forward_logits(tape, model, {&input}))[0]);
}

std::vector<double> predict(const TrainedModel& model, const std::vector<ModelInput>& inputs) {
  constexpr std::size_t kChunk = 64;
  std::vector<double> scores;
  scores.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
    std::vector<const ModelInput*> batch;
    for (std::size_t i = start; i < std::min(inputs.size(), start + kChunk); ++i) batch.push_back(&inputs[i]);
    Tape tape(false);
    const Tensor& z = tape.value(forward_logits(tape, model, batch));
    for (std::size_t i = 0; i < z.size(); ++i) scores.push_back(sigmoid(z[i]));
  }
  return scores;
}

std::vector<double> predict(const TrainedModel& model, const std::vector<SubjectRecord>& records) {
  std::vector<ModelInput> inputs;
  inputs.reserve(records.size());
  for (const auto& r : records) inputs.push_back(make_input(r));
  return predict(model, inputs);
}

Var loss_on(Tape& tape, const TrainedModel& model, const std::vector<const ModelInput*>& batch,
            const std::vector<int>& labels, double class_weight) {
  std::vector<double> targets, weights;
  for (int y : labels) {
    targets.push_back(y == 1 ? 1.0 : 0.0);
    weights.push_back(y == 1 ? class_weight : 1.0);
  }
  return ad::binary_cross_entropy(tape, forward_logits(tape, model, batch), std::move(targets), std::move(weights));
}

TrainedModel train(const std::vector<SubjectRecord>& train_set, const std::vector<SubjectRecord>& val_set,
                   const ModelConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw TrainingError("training set is empty");
  if (val_set.empty()) throw TrainingError("validation set is empty");
  std::size_t positives = 0;
  for (const auto& r : train_set) positives += r.label == 1 ? 1 : 0;
  if (positives == 0 || positives == train_set.size()) {
    throw TrainingError("training set contains a single class");
  }
  for (const auto& r : train_set) {
    if (r.npt.size() != static_cast<std::size_t>(cfg.npt_dim)) {
      throw TrainingError("subject " + r.subject_id + " has " + std::to_string(r.npt.size()) +
                          " npt values, config expects " + std::to_string(cfg.npt_dim));
    }
  }

  std::vector<ModelInput> train_in, val_in;
  std::vector<int> train_y, val_y;
  for (const auto& r : train_set) {
    train_in.push_back(make_input(r));
    train_y.push_back(r.label);
  }
  for (const auto& r : val_set) {
    val_in.push_back(make_input(r));
    val_y.push_back(r.label);
  }

  TrainedModel model = init_model(cfg);
  const double weight = cfg.class_weight > 0.0
                            ? cfg.class_weight
                            : static_cast<double>(train_set.size() - positives) / static_cast<double>(positives);
  model.summary.class_weight = weight;

  if (cfg.epochs == 0) {
    model.summary.best_epoch = 0;
    model.summary.best_val_macro_f1 = macro_f1(predict(model, val_in), val_y);
    model.summary.history.push_back({0, 0.0, model.summary.best_val_macro_f1});
    return model;
  }

  std::vector<Tensor> velocity;
  for (const auto& p : model.params) velocity.emplace_back(p->value.rows(), p->value.cols());

  Rng rng(mix_seed(cfg.seed, 0xba7c4));
  std::vector<std::size_t> order(train_in.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  ad::ParameterSet best = model.params;
  double best_f1 = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<const ModelInput*> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) {
        batch.push_back(&train_in[order[i]]);
        labels.push_back(train_y[order[i]]);
      }
      model.params.zero_grad();
      Tape tape;
      Var loss = loss_on(tape, model, batch, labels, weight);
      const double value = tape.value(loss)[0];
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      loss_total += value * static_cast<double>(batch.size());
      tape.backward(loss);
      std::size_t k = 0;
      for (auto& p : model.params) {
        Tensor& v = velocity[k++];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
          const double g = p->grad[i] + cfg.weight_decay * p->value[i];
          v[i] = cfg.momentum * v[i] + g;
          p->value[i] -= cfg.learning_rate * v[i];
        }
      }
    }
    const auto val_scores = predict(model, val_in);
    if (!std::all_of(val_scores.begin(), val_scores.end(), [](double v) { return std::isfinite(v); })) {
      throw TrainingError("non-finite validation prediction at epoch " + std::to_string(epoch));
    }
    const double f1 = macro_f1(val_scores, val_y);
    model.summary.history.push_back({epoch, loss_total / static_cast<double>(order.size()), f1});
    if (f1 > best_f1) {
      best_f1 = f1;
      best_epoch = epoch;
      best = model.params;
    }
  }
  model.params = std::move(best);
  model.params.zero_grad();
  model.summary.best_epoch = best_epoch;
  model.summary.best_val_macro_f1 = best_f1;
  return model;
}

}  // namespace cubegraph
