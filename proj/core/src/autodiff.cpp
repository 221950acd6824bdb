#include "freqbooth/autodiff.hpp"

#include <cmath>

#include "freqbooth/errors.hpp"

namespace freqbooth {

Tape::Var Tape::push(Tensor value, bool requires_grad,
                     std::function<void(Tape&, std::size_t)> backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

bool Tape::any_requires(std::initializer_list<Var> vars) const {
  for (auto v : vars)
    if (nodes_[v.id].requires_grad) return true;
  return false;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = g;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

Tape::Var Tape::constant(Tensor value) { return push(std::move(value), false, {}); }

Tape::Var Tape::leaf(Tensor value) {
  return push(std::move(value), true, [](Tape&, std::size_t) {});
}

Tape::Var Tape::matmul(Var a, Var b) {
  return push(freqbooth::matmul(value(a), value(b)), any_requires({a, b}),
              [a, b](Tape& t, std::size_t self) {
                const Tensor& g = t.upstream(self);
                if (t.requires_grad(a)) t.accumulate(a, freqbooth::matmul_nt(g, t.value(b)));
                if (t.requires_grad(b)) t.accumulate(b, freqbooth::matmul_tn(t.value(a), g));
              });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  return push(freqbooth::matmul_nt(value(a), value(b)), any_requires({a, b}),
              [a, b](Tape& t, std::size_t self) {
                const Tensor& g = t.upstream(self);
                if (t.requires_grad(a)) t.accumulate(a, freqbooth::matmul(g, t.value(b)));
                if (t.requires_grad(b)) t.accumulate(b, freqbooth::matmul_tn(g, t.value(a)));
              });
}

Tape::Var Tape::add(Var a, Var b) {
  return push(freqbooth::add(value(a), value(b)), any_requires({a, b}),
              [a, b](Tape& t, std::size_t self) {
                const Tensor& g = t.upstream(self);
                t.accumulate(a, g);
                t.accumulate(b, g);
              });
}

Tape::Var Tape::add_row(Var a, Var row) {
  const Tensor& x = value(a);
  const Tensor& r = value(row);
  require_rank(x, 2, "add_row");
  if (r.rank() != 2 || r.rows() != 1 || r.cols() != x.cols()) {
    throw DimensionError("add_row: row " + shape_string(r.shape()) + " does not broadcast over " +
                         shape_string(x.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += r(0, j);
  return push(std::move(out), any_requires({a, row}), [a, row](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    t.accumulate(a, g);
    if (t.requires_grad(row)) {
      Tensor gr({1, g.cols()});
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      t.accumulate(row, gr);
    }
  });
}

Tape::Var Tape::mul_row(Var a, Var row) {
  const Tensor& x = value(a);
  const Tensor& r = value(row);
  require_rank(x, 2, "mul_row");
  if (r.rank() != 2 || r.rows() != 1 || r.cols() != x.cols()) {
    throw DimensionError("mul_row: row " + shape_string(r.shape()) + " does not broadcast over " +
                         shape_string(x.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) *= r(0, j);
  return push(std::move(out), any_requires({a, row}), [a, row](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& xv = t.value(a);
    const Tensor& rv = t.value(row);
    if (t.requires_grad(a)) {
      Tensor ga = g;
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) *= rv(0, j);
      t.accumulate(a, ga);
    }
    if (t.requires_grad(row)) {
      Tensor gr({1, g.cols()});
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j) * xv(i, j);
      t.accumulate(row, gr);
    }
  });
}

Tape::Var Tape::scale(Var a, double s) {
  return push(freqbooth::scale(value(a), s), any_requires({a}), [a, s](Tape& t, std::size_t self) {
    t.accumulate(a, freqbooth::scale(t.upstream(self), s));
  });
}

Tape::Var Tape::softmax_rows(Var a) {
  return push(freqbooth::softmax_rows(value(a)), any_requires({a}),
              [a](Tape& t, std::size_t self) {
                const Tensor& g = t.upstream(self);
                const Tensor& y = t.value(Var{self});
                Tensor ga(g.shape());
                for (std::size_t i = 0; i < g.rows(); ++i) {
                  double dot = 0.0;
                  for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
                  for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) = y(i, j) * (g(i, j) - dot);
                }
                t.accumulate(a, ga);
              });
}

Tape::Var Tape::tanh(Var a) {
  Tensor out = value(a);
  for (auto& v : out.data()) v = std::tanh(v);
  return push(std::move(out), any_requires({a}), [a](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& y = t.value(Var{self});
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * (1.0 - y[i] * y[i]);
    t.accumulate(a, ga);
  });
}

Tape::Var Tape::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = value(a);
  require_rank(x, 2, "slice_cols");
  if (count == 0 || begin + count > x.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(x.shape()));
  }
  Tensor out({x.rows(), count});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = x(i, begin + j);
  return push(std::move(out), any_requires({a}), [a, begin, count](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor ga(t.value(a).shape());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < count; ++j) ga(i, begin + j) = g(i, j);
    t.accumulate(a, ga);
  });
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool req = false;
  for (auto p : parts) {
    if (value(p).rows() != rows) {
      throw DimensionError("concat_cols: row count mismatch " + shape_string(value(p).shape()));
    }
    cols += value(p).cols();
    req = req || requires_grad(p);
  }
  Tensor out({rows, cols});
  std::size_t off = 0;
  for (auto p : parts) {
    const Tensor& x = value(p);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, off + j) = x(i, j);
    off += x.cols();
  }
  return push(std::move(out), req, [parts](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    std::size_t off = 0;
    for (auto p : parts) {
      const std::size_t c = t.value(p).cols();
      if (t.requires_grad(p)) {
        Tensor gp({g.rows(), c});
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) gp(i, j) = g(i, off + j);
        t.accumulate(p, gp);
      }
      off += c;
    }
  });
}

Tape::Var Tape::mse(Var a, const Tensor& target) {
  const Tensor& x = value(a);
  if (x.shape() != target.shape()) {
    throw DimensionError("mse: prediction " + shape_string(x.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - target[i];
    acc += d * d;
  }
  const double n = static_cast<double>(x.size());
  return push(Tensor({1, 1}, {acc / n}), any_requires({a}),
              [a, target, n](Tape& t, std::size_t self) {
                const double g = t.upstream(self)[0];
                const Tensor& xv = t.value(a);
                Tensor ga(xv.shape());
                for (std::size_t i = 0; i < xv.size(); ++i)
                  ga[i] = g * 2.0 * (xv[i] - target[i]) / n;
                t.accumulate(a, ga);
              });
}

void Tape::backward(Var root) {
  if (!record_) throw StateError("backward on a non-recording tape");
  if (value(root).size() != 1) {
    throw DimensionError("backward root must be a scalar, got " +
                         shape_string(value(root).shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = Tensor(value(root).shape(), 1.0);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

}  // namespace freqbooth
