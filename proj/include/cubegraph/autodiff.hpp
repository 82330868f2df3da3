#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cubegraph::ad {

// Dense row-major matrix of doubles. Vectors are n x 1 or 1 x n, scalars 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  std::string shape_string() const;

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> data() { return values_; }
  std::span<const double> data() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double v);
  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Parameter {
  std::string name;
  Tensor value;
  mutable Tensor grad;  // accumulated by Tape::backward, also through const models
};

// Named parameters in insertion order with stable addresses.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet& other);
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Parameter& add(std::string name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

class Tape;
using BackwardFn = std::function<void(Tape&, int self)>;

// Computation record: values are evaluated eagerly as operations are pushed,
// in topological order. With gradients disabled nothing but values is kept.
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Var constant(Tensor value);
  Var parameter(const Parameter& p);

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  const Tensor& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
  const std::string& op(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].op; }
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_; }

  // Seeds d(loss)/d(loss) = 1, runs the chain rule in reverse order and adds
  // the resulting gradients into every Parameter reached.
  void backward(Var loss);

  // Used by operation implementations.
  Var push(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn fn);
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  Tensor& grad_accumulator(Var v);
  const std::vector<Var>& inputs(int self) const { return nodes_[static_cast<std::size_t>(self)].inputs; }
  const Tensor& grad(int self) const { return nodes_[static_cast<std::size_t>(self)].grad; }
  const Tensor& value(int self) const { return nodes_[static_cast<std::size_t>(self)].value; }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<Var> inputs;
    BackwardFn backward;
    const Parameter* param = nullptr;
    bool requires_grad = false;
  };
  bool record_;
  std::vector<Node> nodes_;
};

// Primitive operations. Shapes are checked when the operation is recorded.
Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var add_row(Tape& t, Var a, Var row);        // broadcast a 1 x m row over n x m
Var mul(Tape& t, Var a, Var b);
Var mul_col(Tape& t, Var a, Var col);        // broadcast an n x 1 column over n x m
Var scale(Tape& t, Var a, double s);
Var leaky_relu(Tape& t, Var a, double slope);
Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var exp(Tape& t, Var a);
Var gather_rows(Tape& t, Var a, std::vector<int> index);
Var segment_softmax(Tape& t, Var logits, std::vector<int> segment, std::size_t segments);
Var segment_sum(Tape& t, Var a, std::vector<int> segment, std::size_t segments);
Var segment_mean(Tape& t, Var a, std::vector<int> segment, std::size_t segments);
Var mean_rows(Tape& t, Var a);
Var concat_cols(Tape& t, const std::vector<Var>& parts);
Var sum(Tape& t, Var a);
// Weighted mean of binary cross-entropy evaluated on logits.
Var binary_cross_entropy(Tape& t, Var logits, std::vector<double> targets, std::vector<double> weights);

// Runs backward from a scalar loss and returns the gradient of every parameter
// reached, keyed by parameter name.
std::map<std::string, Tensor> evaluate_and_backprop(Tape& record, Var loss);

using LossBuilder = std::function<Var(Tape&)>;

struct FiniteDifferenceReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Central differences over every parameter entry; relative error is
// |analytic - numeric| / max(1e-6, |analytic| + |numeric|). The floor sits
// above the rounding noise of a central difference (about 1e-16 |loss| / h),
// so gradients that are exactly zero are not judged on noise alone.
FiniteDifferenceReport finite_difference_check(const LossBuilder& build, ParameterSet& params, double h);

}  // namespace cubegraph::ad
