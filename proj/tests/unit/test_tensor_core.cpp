#include <doctest.h>

#include <cmath>

#include "freqbooth/autodiff.hpp"
#include "freqbooth/errors.hpp"
#include "freqbooth/rng.hpp"
#include "freqbooth/tensor.hpp"
#include "oracles.hpp"

using namespace freqbooth;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  RngState rng{seed, 0};
  return gaussian({r, c}, rng);
}

}  // namespace

TEST_CASE("matmul identity and dot product") {
  const Tensor id = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor b = Tensor::matrix(2, 2, {3, 4, 5, 6});
  CHECK(matmul(id, b) == b);
  CHECK(matmul(Tensor::matrix(1, 2, {1, 2}), Tensor::matrix(2, 1, {3, 4}))(0, 0) == 11.0);
}

TEST_CASE("matmul matches triple loop") {
  const Tensor a = random_matrix(4, 5, 1), b = random_matrix(5, 3, 2);
  CHECK(oracle::max_abs_diff(matmul(a, b), oracle::matmul(a, b)) <= 1e-12);
  CHECK(oracle::max_abs_diff(matmul_nt(a, transpose(b)), oracle::matmul(a, b)) <= 1e-12);
  CHECK(oracle::max_abs_diff(matmul_tn(transpose(a), b), oracle::matmul(a, b)) <= 1e-12);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    (void)matmul(Tensor({2, 3}), Tensor({4, 2}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x2") != std::string::npos);
  }
}

TEST_CASE("matmul is associative on random triples") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor a = random_matrix(3, 4, s), b = random_matrix(4, 5, s + 100),
                 c = random_matrix(5, 2, s + 200);
    CHECK(relative_error(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-9);
  }
}

TEST_CASE("softmax rows") {
  const Tensor half = softmax_rows(Tensor::matrix(1, 2, {0, 0}));
  CHECK(half(0, 0) == 0.5);
  CHECK(half(0, 1) == 0.5);

  const Tensor big = softmax_rows(Tensor::matrix(1, 3, {1000, 1000, 1000}));
  for (std::size_t j = 0; j < 3; ++j) CHECK(big(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Tensor s = softmax_rows(Tensor::matrix(1, 3, {1, 2, 3}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(s(0, j) - std::exp(j + 1.0) / z) <= 1e-12);
}

TEST_CASE("softmax rows sum to one, positive and shift invariant") {
  const Tensor x = random_matrix(6, 7, 9);
  const Tensor s = softmax_rows(x);
  Tensor shifted = x;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 7; ++j) shifted(i, j) += 3.5 * static_cast<double>(i) - 2.0;
  const Tensor t = softmax_rows(shifted);
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(s(i, j) > 0.0);
      sum += s(i, j);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  CHECK(max_abs_diff(s, t) <= 1e-12);
}

TEST_CASE("gaussian determinism and seed sensitivity") {
  RngState a{7, 0}, b{7, 0}, c{8, 0};
  const Tensor x = gaussian({4}, a), y = gaussian({4}, b), z = gaussian({4}, c);
  CHECK(x == y);
  CHECK_FALSE(x == z);
  CHECK(a.counter == 4);
}

TEST_CASE("gaussian is position addressable") {
  RngState full{11, 0};
  const Tensor all = gaussian({10}, full);
  RngState tail{11, 6};
  const Tensor rest = gaussian({4}, tail);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rest[i] == all[6 + i]);
}

TEST_CASE("gaussian moments over 1e5 draws") {
  RngState rng{12345, 0};
  const Tensor x = gaussian({100000}, rng);
  CHECK(std::abs(mean(x)) <= 0.02);
  CHECK(variance(x) >= 0.97);
  CHECK(variance(x) <= 1.03);
}

TEST_CASE("uniform draws lie in the open unit interval and below() in range") {
  RngState rng{3, 0};
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
  }
}

TEST_CASE("tensor rejects inconsistent data length") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("latent token layout roundtrip") {
  RngState rng{5, 0};
  const Tensor lat = gaussian({4, 3, 2}, rng);
  const Tensor tok = latent_to_tokens(lat);
  CHECK(tok.shape() == Shape{6, 4});
  CHECK(tok(1 * 2 + 1, 3) == lat(3, 1, 1));
  CHECK(tokens_to_latent(tok, 3, 2) == lat);
}

TEST_CASE("checksum is sensitive to a single bit") {
  Tensor a = random_matrix(3, 3, 4);
  const auto c0 = checksum(a);
  a[4] = std::nextafter(a[4], 10.0);
  CHECK(checksum(a) != c0);
}

TEST_CASE("tape gradients match finite differences") {
  const Tensor a0 = random_matrix(3, 4, 21), b0 = random_matrix(4, 2, 22);
  const Tensor target = random_matrix(3, 6, 23);
  auto loss = [&](const Tensor& a, const Tensor& b, Tape& tape, Tape::Var& va, Tape::Var& vb) {
    va = tape.leaf(a);
    vb = tape.leaf(b);
    auto prod = tape.tanh(tape.matmul(va, vb));
    auto sm = tape.softmax_rows(tape.scale(tape.matmul_nt(va, va), 0.5));
    auto row = tape.constant(Tensor::matrix(1, 2, {0.3, -0.7}));
    auto mixed = tape.concat_cols({tape.mul_row(prod, row), tape.slice_cols(sm, 0, 3),
                                   tape.add_row(tape.slice_cols(prod, 1, 1),
                                                tape.constant(Tensor::matrix(1, 1, {0.2})))});
    return tape.mse(mixed, target);
  };
  Tape tape;
  Tape::Var va, vb;
  auto root = loss(a0, b0, tape, va, vb);
  tape.backward(root);
  const Tensor ga = tape.grad(va), gb = tape.grad(vb);

  auto eval = [&](const Tensor& a, const Tensor& b) {
    Tape t(false);
    Tape::Var x, y;
    return t.value(loss(a, b, t, x, y))[0];
  };
  const double h = 1e-5;
  Tensor na(a0.shape()), nb(b0.shape());
  for (std::size_t i = 0; i < a0.size(); ++i) {
    Tensor p = a0, m = a0;
    p[i] += h;
    m[i] -= h;
    na[i] = (eval(p, b0) - eval(m, b0)) / (2 * h);
  }
  for (std::size_t i = 0; i < b0.size(); ++i) {
    Tensor p = b0, m = b0;
    p[i] += h;
    m[i] -= h;
    nb[i] = (eval(a0, p) - eval(a0, m)) / (2 * h);
  }
  CHECK(relative_error(ga, na) <= 1e-6);
  CHECK(relative_error(gb, nb) <= 1e-6);
}

TEST_CASE("tape forward equals plain kernels bitwise") {
  const Tensor a = random_matrix(3, 4, 31), b = random_matrix(4, 5, 32);
  Tape tape(false);
  auto v = tape.softmax_rows(tape.matmul(tape.constant(a), tape.constant(b)));
  CHECK(tape.value(v) == softmax_rows(matmul(a, b)));
}
