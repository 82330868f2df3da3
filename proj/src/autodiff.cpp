#include "cubegraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cubegraph/error.hpp"

namespace cubegraph::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("Tensor: " + std::to_string(values_.size()) + " values for shape " + shape_string());
  }
}

std::string Tensor::shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw ShapeError("Tensor +=: " + shape_string() + " vs " + other.shape_string());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParameterSet::ParameterSet(const ParameterSet& other) : index_(other.index_) {
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
  if (this != &other) {
    ParameterSet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw Error("ParameterSet: duplicate parameter " + name);
  index_[name] = params_.size();
  Tensor grad(init.rows(), init.cols());
  params_.push_back(std::make_unique<Parameter>(Parameter{std::move(name), std::move(init), std::move(grad)}));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw Error("ParameterSet: unknown parameter " + name);
  return *params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw Error("ParameterSet: unknown parameter " + name);
  return *params_[it->second];
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, {}, nullptr, false});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::parameter(const Parameter& p) {
  nodes_.push_back(Node{"parameter:" + p.name, p.value, {}, {}, {}, record_ ? &p : nullptr, record_});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn fn) {
  bool needs = false;
  if (record_) {
    for (Var v : inputs) needs = needs || requires_grad(v);
  }
  Node node{std::move(op), std::move(value), {}, {}, {}, nullptr, needs};
  if (needs) {
    node.inputs = std::move(inputs);
    node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Tensor& Tape::grad_accumulator(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("Tape::backward: tape was recorded without gradients");
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("Tape::backward: loss must be 1x1, got " + lv.shape_string());
  grad_accumulator(loss)[0] += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad += n.grad;
  }
}

namespace {

void require(bool ok, const std::string& op, const std::string& detail) {
  if (!ok) throw ShapeError(op + ": " + detail);
}

std::string shapes(const Tensor& a, const Tensor& b) { return a.shape_string() + " vs " + b.shape_string(); }

// Adds g into the gradient of input `k` of node `self` when that input needs it.
template <typename F>
void accumulate(Tape& t, int self, std::size_t k, F&& f) {
  Var in = t.inputs(self)[k];
  if (!t.requires_grad(in)) return;
  f(t.grad_accumulator(in));
}

template <typename Fwd, typename Deriv>
Var unary(Tape& t, Var a, const char* name, Fwd fwd, Deriv deriv) {
  const Tensor& x = t.value(a);
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return t.push(name, std::move(y), {a}, [deriv](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& xv = tp.value(tp.inputs(self)[0]);
    const Tensor& yv = tp.value(self);
    accumulate(tp, self, 0, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(xv[i], yv[i]);
    });
  });
}

void check_segments(const std::vector<int>& seg, std::size_t rows, std::size_t segments, const char* op) {
  require(seg.size() == rows, op, "segment list has " + std::to_string(seg.size()) + " entries for " +
                                      std::to_string(rows) + " rows");
  for (int s : seg) require(s >= 0 && static_cast<std::size_t>(s) < segments, op, "segment id out of range");
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require(x.cols() == y.rows(), "matmul", shapes(x, y));
  const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
  Tensor z(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x(i, p);
      if (xv == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) z(i, j) += xv * y(p, j);
    }
  }
  return t.push("matmul", std::move(z), {a, b}, [](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& xv = tp.value(tp.inputs(self)[0]);
    const Tensor& yv = tp.value(tp.inputs(self)[1]);
    const std::size_t n = xv.rows(), k = xv.cols(), m = yv.cols();
    accumulate(tp, self, 0, [&](Tensor& gx) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g(i, j) * yv(p, j);
          gx(i, p) += s;
        }
      }
    });
    accumulate(tp, self, 1, [&](Tensor& gy) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double xi = xv(i, p);
          if (xi == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gy(p, j) += xi * g(i, j);
        }
      }
    });
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require(x.rows() == y.rows() && x.cols() == y.cols(), "add", shapes(x, y));
  Tensor z = x;
  z += y;
  return t.push("add", std::move(z), {a, b}, [](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    accumulate(tp, self, 0, [&](Tensor& ga) { ga += g; });
    accumulate(tp, self, 1, [&](Tensor& gb) { gb += g; });
  });
}

Var add_row(Tape& t, Var a, Var row) {
  const Tensor& x = t.value(a);
  const Tensor& r = t.value(row);
  require(r.rows() == 1 && r.cols() == x.cols(), "add_row", shapes(x, r));
  Tensor z = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) z(i, j) += r(0, j);
  }
  return t.push("add_row", std::move(z), {a, row}, [](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    accumulate(tp, self, 0, [&](Tensor& ga) { ga += g; });
    accumulate(tp, self, 1, [&](Tensor& gr) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      }
    });
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require(x.rows() == y.rows() && x.cols() == y.cols(), "mul", shapes(x, y));
  Tensor z(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * y[i];
  return t.push("mul", std::move(z), {a, b}, [](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& xv = tp.value(tp.inputs(self)[0]);
    const Tensor& yv = tp.value(tp.inputs(self)[1]);
    accumulate(tp, self, 0, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yv[i];
    });
    accumulate(tp, self, 1, [&](Tensor& gb) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xv[i];
    });
  });
}

Var mul_col(Tape& t, Var a, Var col) {
  const Tensor& x = t.value(a);
  const Tensor& c = t.value(col);
  require(c.cols() == 1 && c.rows() == x.rows(), "mul_col", shapes(x, c));
  Tensor z(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) z(i, j) = x(i, j) * c(i, 0);
  }
  return t.push("mul_col", std::move(z), {a, col}, [](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& xv = tp.value(tp.inputs(self)[0]);
    const Tensor& cv = tp.value(tp.inputs(self)[1]);
    accumulate(tp, self, 0, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * cv(i, 0);
      }
    });
    accumulate(tp, self, 1, [&](Tensor& gc) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * xv(i, j);
        gc(i, 0) += s;
      }
    });
  });
}

Var scale(Tape& t, Var a, double s) {
  return unary(t, a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var leaky_relu(Tape& t, Var a, double slope) {
  return unary(
      t, a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var relu(Tape& t, Var a) {
  return unary(
      t, a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& t, Var a) {
  return unary(
      t, a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& t, Var a) {
  return unary(
      t, a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Tape& t, Var a) {
  return unary(
      t, a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var gather_rows(Tape& t, Var a, std::vector<int> index) {
  const Tensor& x = t.value(a);
  for (int i : index) require(i >= 0 && static_cast<std::size_t>(i) < x.rows(), "gather_rows", "row index out of range");
  const std::size_t c = x.cols();
  Tensor z(index.size(), c);
  for (std::size_t e = 0; e < index.size(); ++e) {
    const auto src = static_cast<std::size_t>(index[e]);
    for (std::size_t j = 0; j < c; ++j) z(e, j) = x(src, j);
  }
  return t.push("gather_rows", std::move(z), {a}, [index = std::move(index)](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    accumulate(tp, self, 0, [&](Tensor& ga) {
      for (std::size_t e = 0; e < index.size(); ++e) {
        const auto dst = static_cast<std::size_t>(index[e]);
        for (std::size_t j = 0; j < g.cols(); ++j) ga(dst, j) += g(e, j);
      }
    });
  });
}

Var segment_softmax(Tape& t, Var logits, std::vector<int> segment, std::size_t segments) {
  const Tensor& z = t.value(logits);
  require(z.cols() == 1, "segment_softmax", "logits must be a column, got " + z.shape_string());
  check_segments(segment, z.rows(), segments, "segment_softmax");
  std::vector<double> max(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < z.rows(); ++e) {
    auto& m = max[static_cast<std::size_t>(segment[e])];
    m = std::max(m, z(e, 0));
  }
  Tensor y(z.rows(), 1);
  std::vector<double> total(segments, 0.0);
  for (std::size_t e = 0; e < z.rows(); ++e) {
    const auto s = static_cast<std::size_t>(segment[e]);
    y(e, 0) = std::exp(z(e, 0) - max[s]);
    total[s] += y(e, 0);
  }
  for (std::size_t e = 0; e < z.rows(); ++e) y(e, 0) /= total[static_cast<std::size_t>(segment[e])];
  return t.push("segment_softmax", std::move(y), {logits}, [segment = std::move(segment), segments](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& yv = tp.value(self);
    std::vector<double> dot(segments, 0.0);
    for (std::size_t e = 0; e < g.rows(); ++e) dot[static_cast<std::size_t>(segment[e])] += yv(e, 0) * g(e, 0);
    accumulate(tp, self, 0, [&](Tensor& gz) {
      for (std::size_t e = 0; e < g.rows(); ++e) {
        gz(e, 0) += yv(e, 0) * (g(e, 0) - dot[static_cast<std::size_t>(segment[e])]);
      }
    });
  });
}

Var segment_sum(Tape& t, Var a, std::vector<int> segment, std::size_t segments) {
  const Tensor& x = t.value(a);
  check_segments(segment, x.rows(), segments, "segment_sum");
  Tensor z(segments, x.cols());
  for (std::size_t e = 0; e < x.rows(); ++e) {
    const auto s = static_cast<std::size_t>(segment[e]);
    for (std::size_t j = 0; j < x.cols(); ++j) z(s, j) += x(e, j);
  }
  return t.push("segment_sum", std::move(z), {a}, [segment = std::move(segment)](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    accumulate(tp, self, 0, [&](Tensor& ga) {
      for (std::size_t e = 0; e < segment.size(); ++e) {
        const auto s = static_cast<std::size_t>(segment[e]);
        for (std::size_t j = 0; j < g.cols(); ++j) ga(e, j) += g(s, j);
      }
    });
  });
}

Var segment_mean(Tape& t, Var a, std::vector<int> segment, std::size_t segments) {
  const Tensor& x = t.value(a);
  check_segments(segment, x.rows(), segments, "segment_mean");
  std::vector<double> count(segments, 0.0);
  for (int s : segment) count[static_cast<std::size_t>(s)] += 1.0;
  Tensor z(segments, x.cols());
  for (std::size_t e = 0; e < x.rows(); ++e) {
    const auto s = static_cast<std::size_t>(segment[e]);
    for (std::size_t j = 0; j < x.cols(); ++j) z(s, j) += x(e, j);
  }
  for (std::size_t s = 0; s < segments; ++s) {
    if (count[s] == 0.0) continue;
    for (std::size_t j = 0; j < x.cols(); ++j) z(s, j) /= count[s];
  }
  return t.push("segment_mean", std::move(z), {a},
                [segment = std::move(segment), count = std::move(count)](Tape& tp, int self) {
                  const Tensor& g = tp.grad(self);
                  accumulate(tp, self, 0, [&](Tensor& ga) {
                    for (std::size_t e = 0; e < segment.size(); ++e) {
                      const auto s = static_cast<std::size_t>(segment[e]);
                      for (std::size_t j = 0; j < g.cols(); ++j) ga(e, j) += g(s, j) / count[s];
                    }
                  });
                });
}

Var mean_rows(Tape& t, Var a) {
  const std::size_t n = t.value(a).rows();
  require(n > 0, "mean_rows", "no rows");
  return segment_mean(t, a, std::vector<int>(n, 0), 1);
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t n = t.value(parts[0]).rows();
  std::size_t total = 0;
  for (Var p : parts) {
    require(t.value(p).rows() == n, "concat_cols", shapes(t.value(parts[0]), t.value(p)));
    total += t.value(p).cols();
  }
  Tensor z(n, total);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& x = t.value(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) z(i, off + j) = x(i, j);
    }
    off += x.cols();
  }
  return t.push("concat_cols", std::move(z), parts, [](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < tp.inputs(self).size(); ++k) {
      const std::size_t c = tp.value(tp.inputs(self)[k]).cols();
      accumulate(tp, self, k, [&](Tensor& gp) {
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < c; ++j) gp(i, j) += g(i, off + j);
        }
      });
      off += c;
    }
  });
}

Var sum(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  return t.push("sum", Tensor::scalar(s), {a}, [](Tape& tp, int self) {
    const double g = tp.grad(self)[0];
    accumulate(tp, self, 0, [&](Tensor& ga) {
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  });
}

Var binary_cross_entropy(Tape& t, Var logits, std::vector<double> targets, std::vector<double> weights) {
  const Tensor& z = t.value(logits);
  require(z.cols() == 1 && z.rows() == targets.size() && targets.size() == weights.size() && !targets.empty(),
          "binary_cross_entropy",
          "logits " + z.shape_string() + ", " + std::to_string(targets.size()) + " targets, " +
              std::to_string(weights.size()) + " weights");
  const double n = static_cast<double>(targets.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double x = z(i, 0);
    const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    loss += weights[i] * (softplus - targets[i] * x);
  }
  return t.push("binary_cross_entropy", Tensor::scalar(loss / n), {logits},
                [targets = std::move(targets), weights = std::move(weights), n](Tape& tp, int self) {
                  const double g = tp.grad(self)[0];
                  const Tensor& zv = tp.value(tp.inputs(self)[0]);
                  accumulate(tp, self, 0, [&](Tensor& gz) {
                    for (std::size_t i = 0; i < targets.size(); ++i) {
                      const double x = zv(i, 0);
                      const double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                      gz(i, 0) += g * weights[i] * (p - targets[i]) / n;
                    }
                  });
                });
}

std::map<std::string, Tensor> evaluate_and_backprop(Tape& record, Var loss) {
  record.backward(loss);
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const Var v{static_cast<int>(i)};
    const std::string& op = record.op(v);
    if (op.rfind("parameter:", 0) == 0 && record.requires_grad(v)) {
      const std::string name = op.substr(10);
      Tensor g = record.grad(v).empty() ? Tensor(record.value(v).rows(), record.value(v).cols()) : record.grad(v);
      auto it = out.find(name);
      if (it == out.end()) {
        out.emplace(name, std::move(g));
      } else {
        it->second += g;
      }
    }
  }
  return out;
}

FiniteDifferenceReport finite_difference_check(const LossBuilder& build, ParameterSet& params, double h) {
  if (!(h > 0.0)) throw Error("finite_difference_check: step must be positive");
  Tape tape;
  const Var loss = build(tape);
  const auto grads = evaluate_and_backprop(tape, loss);

  auto eval = [&] {
    Tape probe(false);
    return probe.value(build(probe))[0];
  };
  FiniteDifferenceReport report;
  for (auto& p : params) {
    const auto it = grads.find(p->name);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double analytic = it == grads.end() ? 0.0 : it->second[i];
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = eval();
      p->value[i] = saved - h;
      const double down = eval();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
      ++report.entries_checked;
      if (rel > report.max_relative_error || report.entries_checked == 1) {
        report.max_relative_error = rel;
        report.worst_parameter = p->name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace cubegraph::ad
