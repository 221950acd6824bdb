#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace freqbooth {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles, rank 1 to 4.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // rank-2 access
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  // rank-3 access (channel, row, col)
  double& operator()(std::size_t n, std::size_t i, std::size_t j) {
    return data_[(n * shape_[1] + i) * shape_[2] + j];
  }
  double operator()(std::size_t n, std::size_t i, std::size_t j) const {
    return data_[(n * shape_[1] + i) * shape_[2] + j];
  }

  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// a + s * b
Tensor axpy(const Tensor& a, double s, const Tensor& b);

double frobenius_norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
// ||a - b||_F / max(||b||_F, tiny)
double relative_error(const Tensor& a, const Tensor& b);
double mean(const Tensor& a);
double variance(const Tensor& a);

// Channels x H x W latent <-> (H*W) x channels token matrix.
Tensor latent_to_tokens(const Tensor& latent);
Tensor tokens_to_latent(const Tensor& tokens, std::size_t height, std::size_t width);

// FNV-1a over the raw bytes of the values.
std::uint64_t checksum(const Tensor& t);
std::uint64_t checksum_combine(std::uint64_t seed, std::uint64_t value);

void require_rank(const Tensor& t, std::size_t rank, const char* what);

}  // namespace freqbooth
