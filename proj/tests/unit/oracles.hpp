#pragma once

// Independent reference implementations. They use only explicit loops and
// <cmath>, never the library kernels they check.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "freqbooth/tensor.hpp"

namespace oracle {

using freqbooth::Tensor;

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  return out;
}

// Direct double sum, per channel, of the orthonormal DCT-II.
inline Tensor dct2(const Tensor& x) {
  const std::size_t C = x.dim(0), h = x.dim(1), w = x.dim(2);
  const double pi = std::numbers::pi;
  auto m = [](std::size_t k) { return k == 0 ? 1.0 / std::sqrt(2.0) : 1.0; };
  Tensor out({C, h, w});
  for (std::size_t n = 0; n < C; ++n)
    for (std::size_t u = 0; u < h; ++u)
      for (std::size_t v = 0; v < w; ++v) {
        double s = 0.0;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j)
            s += x(n, i, j) * std::cos((2.0 * i + 1.0) * u * pi / (2.0 * h)) *
                 std::cos((2.0 * j + 1.0) * v * pi / (2.0 * w));
        out(n, u, v) = 2.0 / std::sqrt(static_cast<double>(h * w)) * m(u) * m(v) * s;
      }
  return out;
}

// Softmax(q_i . k_j / sqrt(dh)) v_j per head, explicit loops over queries and keys.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
  const std::size_t n = q.dim(0), nk = k.dim(0), d = q.dim(1), dh = d / heads;
  Tensor out({n, d});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(nk);
      double mx = -1e300;
      for (std::size_t j = 0; j < nk; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q(i, h * dh + c) * k(j, h * dh + c);
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nk; ++j) acc += s[j] / z * v(j, h * dh + c);
        out(i, h * dh + c) = acc;
      }
    }
  }
  return out;
}

// Self term plus lambda times the identity term, sharing Q.
inline Tensor adaptive_attention(const Tensor& z, const Tensor* f, const Tensor& wq,
                                 const Tensor& wk, const Tensor& wv, const Tensor& wkid,
                                 const Tensor& wvid, std::size_t heads, double lambda) {
  const Tensor q = oracle::matmul(z, wq);
  Tensor out = oracle::attention(q, oracle::matmul(z, wk), oracle::matmul(z, wv), heads);
  if (f) {
    const Tensor cross = oracle::attention(q, oracle::matmul(*f, wkid), oracle::matmul(*f, wvid), heads);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += lambda * cross[i];
  }
  return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double frobenius(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

}  // namespace oracle
