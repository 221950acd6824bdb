#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Reverse-mode tape over rank-2 tensors. Forward values are computed with the
// same tensor_core kernels used everywhere else, so a tape evaluation and a
// plain evaluation agree bitwise.
class Tape {
 public:
  struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
  };

  // With record == false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Tensor value);
  Var leaf(Tensor value);  // requires grad when recording

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() root w.r.t. v; zeros if v was unreachable.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // row is 1 x cols, broadcast over rows
  Var mul_row(Var a, Var row);  // elementwise, row broadcast
  Var scale(Var a, double s);
  Var softmax_rows(Var a);
  Var tanh(Var a);
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  Var concat_cols(const std::vector<Var>& parts);
  // mean((a - target)^2) as a 1x1 tensor
  Var mse(Var a, const Tensor& target);

  // Seeds d(root)/d(root) = 1; root must be 1x1.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Tensor value, bool requires_grad,
           std::function<void(Tape&, std::size_t)> backward);
  bool any_requires(std::initializer_list<Var> vars) const;
  void accumulate(Var v, const Tensor& g);
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace freqbooth
