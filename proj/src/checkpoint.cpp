#include "cubegraph/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cubegraph/error.hpp"

namespace cubegraph {

using json = nlohmann::ordered_json;

namespace {

json config_json(const ModelConfig& c) {
  json j;
  j["gat_layers"] = c.gat_layers;
  j["hidden_dim"] = c.hidden_dim;
  j["attention_heads"] = c.attention_heads;
  j["leaky_slope"] = c.leaky_slope;
  j["gatv2"] = c.gatv2;
  j["mlp_hidden"] = c.mlp_hidden;
  j["embed_dim"] = c.embed_dim;
  j["fusion_hidden"] = c.fusion_hidden;
  j["npt_dim"] = c.npt_dim;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["class_weight"] = c.class_weight;
  j["seed"] = c.seed;
  j["mask"] = c.mask.to_string();
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.gat_layers = j.at("gat_layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.gatv2 = j.at("gatv2").get<bool>();
  c.mlp_hidden = j.at("mlp_hidden").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.fusion_hidden = j.at("fusion_hidden").get<int>();
  c.npt_dim = j.at("npt_dim").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.class_weight = j.at("class_weight").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mask = ModalityMask::parse(j.at("mask").get<std::string>());
  return c;
}

}  // namespace

std::string checkpoint_to_json(const TrainedModel& model) {
  json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["config"] = config_json(model.config);
  json meta;
  meta["best_epoch"] = model.summary.best_epoch;
  meta["best_val_macro_f1"] = model.summary.best_val_macro_f1;
  meta["class_weight"] = model.summary.class_weight;
  meta["selection"] = "max validation macro-F1, earliest epoch on ties";
  json history = json::array();
  for (const auto& e : model.summary.history) history.push_back({e.epoch, e.train_loss, e.val_macro_f1});
  meta["history"] = std::move(history);
  doc["metadata"] = std::move(meta);
  json params;
  for (const auto& p : model.params) {
    json entry;
    entry["shape"] = {p->value.rows(), p->value.cols()};
    entry["values"] = p->value.values();
    params[p->name] = std::move(entry);
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1) + "\n";
}

TrainedModel checkpoint_from_json(const std::string& text, const std::string& origin) {
  TrainedModel model;
  try {
    const json doc = json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw IoError(origin + ": unsupported checkpoint version " + std::to_string(version));
    }
    model = init_model(config_from_json(doc.at("config")));
    const json& meta = doc.at("metadata");
    model.summary.best_epoch = meta.at("best_epoch").get<int>();
    model.summary.best_val_macro_f1 = meta.at("best_val_macro_f1").get<double>();
    model.summary.class_weight = meta.at("class_weight").get<double>();
    for (const auto& e : meta.at("history")) {
      model.summary.history.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }
    const json& params = doc.at("parameters");
    if (params.size() != model.params.size()) {
      throw ShapeError(origin + ": checkpoint has " + std::to_string(params.size()) + " parameters, config implies " +
                       std::to_string(model.params.size()));
    }
    for (auto it = params.begin(); it != params.end(); ++it) {
      if (!model.params.contains(it.key())) throw ShapeError(origin + ": unexpected parameter " + it.key());
      ad::Parameter& p = model.params.get(it.key());
      const auto rows = it->at("shape").at(0).get<std::size_t>();
      const auto cols = it->at("shape").at(1).get<std::size_t>();
      if (rows != p.value.rows() || cols != p.value.cols()) {
        throw ShapeError(origin + ": parameter " + it.key() + " has shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", config implies " + p.value.shape_string());
      }
      p.value = ad::Tensor(rows, cols, it->at("values").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw IoError(origin + ": malformed checkpoint: " + e.what());
  }
  return model;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << checkpoint_to_json(model);
  if (!out) throw IoError(path.string() + ": write failed");
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": no such file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str(), path.string());
}

}  // namespace cubegraph
