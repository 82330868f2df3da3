#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cubegraph/autodiff.hpp"
#include "cubegraph/features.hpp"
#include "cubegraph/graph.hpp"

namespace cubegraph {

inline constexpr int kAgeGroups = 9;
inline constexpr int kEduGroups = 7;

inline constexpr std::array<std::string_view, kAgeGroups> kAgeBands = {
    "45-49", "50-54", "55-59", "60-64", "65-69", "70-74", "75-79", "80-84", "85-90"};
inline constexpr std::array<std::string_view, kEduGroups> kEduBands = {
    "illiterate", "0-2", "3-5", "6-9", "10-12", "13-15", "16+"};

struct SubjectRecord {
  std::string subject_id;
  SketchGraph graph;
  NodeFeatureMatrix features;
  int age_group = 0;         // index into kAgeBands
  int edu_group = 0;         // index into kEduBands
  std::vector<double> npt;   // one total score or one score per domain, each in [0, 1]
  int label = 0;             // 0 = CN, 1 = AD
  double severity = -1.0;    // synthetic ground truth when known

  void validate() const;
};

struct ModalityMask {
  bool graph = true;
  bool age = true;
  bool edu = true;
  bool npt = true;

  bool any() const { return graph || age || edu || npt; }
  // Comma separated subset of graph,age,edu,npt; "all" enables everything.
  static ModalityMask parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const ModalityMask&, const ModalityMask&) = default;
};

struct ModelConfig {
  int gat_layers = 2;
  int hidden_dim = 32;
  int attention_heads = 4;
  double leaky_slope = 0.2;
  bool gatv2 = true;  // false: score = LeakyReLU(a_l.Wh_i + a_r.Wh_j)
  int mlp_hidden = 16;
  int embed_dim = 8;  // width of each tabular modality embedding
  int fusion_hidden = 16;
  int npt_dim = 1;

  int epochs = 300;
  int batch_size = 16;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double class_weight = 0.0;  // weight of AD samples; <= 0 means #CN / #AD of the training split
  std::uint64_t seed = 0;
  ModalityMask mask;

  void validate() const;
};

// The numeric view of one subject that the network consumes. Tabular
// modalities are real vectors so that attribution can substitute averages.
struct ModelInput {
  std::size_t nodes = 0;
  std::vector<Edge> edges;
  std::vector<double> node_features;  // nodes x kNodeFeatureDim, row-major
  std::vector<double> age;            // kAgeGroups
  std::vector<double> edu;            // kEduGroups
  std::vector<double> npt;            // npt_dim
};

ModelInput make_input(const SubjectRecord& r);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainingSummary {
  int best_epoch = 0;  // 0 = initialization
  double best_val_macro_f1 = 0.0;
  double class_weight = 1.0;
  std::vector<EpochStats> history;
};

struct TrainedModel {
  ModelConfig config;
  ad::ParameterSet params;
  TrainingSummary summary;
};

// Glorot-uniform weights and zero biases, drawn from config.seed.
TrainedModel init_model(const ModelConfig& cfg);

// Graph embeddings (one row per graph) of a batch of graphs, recorded on `tape`.
ad::Var gat_encode(ad::Tape& tape, const TrainedModel& model, const std::vector<const ModelInput*>& batch);

// Fusion logits (batch x 1) recorded on `tape`.
ad::Var forward_logits(ad::Tape& tape, const TrainedModel& model, const std::vector<const ModelInput*>& batch);

// Same as forward_logits but with a precomputed graph embedding (1 x hidden)
// for a single subject; used to reuse the graph branch during attribution.
double predict_with_embedding(const TrainedModel& model, const std::vector<double>& graph_embedding,
                              const ModelInput& input);
std::vector<double> graph_embedding(const TrainedModel& model, const ModelInput& input);

double predict(const TrainedModel& model, const ModelInput& input);
std::vector<double> predict(const TrainedModel& model, const std::vector<ModelInput>& inputs);
std::vector<double> predict(const TrainedModel& model, const std::vector<SubjectRecord>& records);

// Class-weighted BCE of the model on a set of inputs (for gradient checks).
ad::Var loss_on(ad::Tape& tape, const TrainedModel& model, const std::vector<const ModelInput*>& batch,
                const std::vector<int>& labels, double class_weight);

// Momentum gradient descent; keeps the parameters of the epoch with the best
// validation macro-F1 (ties resolve to the earlier epoch).
TrainedModel train(const std::vector<SubjectRecord>& train_set, const std::vector<SubjectRecord>& val_set,
                   const ModelConfig& cfg);

}  // namespace cubegraph
