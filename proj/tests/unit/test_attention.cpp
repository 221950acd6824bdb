#include <doctest.h>

#include <string>

#include "freqbooth/attention.hpp"
#include "freqbooth/errors.hpp"
#include "freqbooth/rng.hpp"
#include "oracles.hpp"

using namespace freqbooth;

namespace {

struct Instance {
  Tensor z;
  IdentityFeatures f;
  AdaptiveAttentionWeights w;
};

Instance random_instance(std::uint64_t seed, std::size_t seq = 5, std::size_t d_model = 6,
                         std::size_t d = 4, std::size_t n_id = 3, std::size_t d_id = 5,
                         std::size_t heads = 1) {
  RngState rng{seed, 0};
  Instance in;
  in.z = gaussian({seq, d_model}, rng);
  in.f = IdentityFeatures(gaussian({n_id, d_id}, rng));
  in.w.w_q = gaussian({d_model, d}, rng);
  in.w.w_k = gaussian({d_model, d}, rng);
  in.w.w_v = gaussian({d_model, d}, rng);
  in.w.w_k_id = gaussian({d_id, d}, rng);
  in.w.w_v_id = gaussian({d_id, d}, rng);
  in.w.heads = heads;
  return in;
}

Tensor naive(const Instance& in, double lambda, bool with_identity = true) {
  return oracle::adaptive_attention(in.z, with_identity ? &in.f.tokens : nullptr, in.w.w_q,
                                    in.w.w_k, in.w.w_v, in.w.w_k_id, in.w.w_v_id, in.w.heads,
                                    lambda);
}

}  // namespace

TEST_CASE("lambda zero reproduces frozen self-attention exactly") {
  const Instance in = random_instance(1);
  CHECK(adaptive_attention(in.z, &in.f, in.w, LambdaScale(0.0)) == self_attention_term(in.z, in.w));
  CHECK(adaptive_attention(in.z, nullptr, in.w, LambdaScale(0.7)) == self_attention_term(in.z, in.w));
}

TEST_CASE("scalar hand evaluation") {
  AdaptiveAttentionWeights w;
  w.w_q = Tensor::matrix(1, 1, {1});
  w.w_k = Tensor::matrix(1, 1, {1});
  w.w_v = Tensor::matrix(1, 1, {3});
  w.w_k_id = Tensor::matrix(1, 1, {-2.5});
  w.w_v_id = Tensor::matrix(1, 1, {5});
  const Tensor z = Tensor::matrix(1, 1, {1});
  const IdentityFeatures f(Tensor::matrix(1, 1, {1}));
  CHECK(adaptive_attention(z, &f, w, LambdaScale(0.4))(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("matches the naive loop oracle") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = random_instance(10 + s);
    CHECK(oracle::max_abs_diff(adaptive_attention(in.z, &in.f, in.w, LambdaScale(0.4)), naive(in, 0.4)) <= 1e-10);
    const Tensor q = oracle::matmul(in.z, in.w.w_q);
    const Tensor cross = oracle::attention(q, oracle::matmul(in.f.tokens, in.w.w_k_id),
                                           oracle::matmul(in.f.tokens, in.w.w_v_id), in.w.heads);
    CHECK(oracle::max_abs_diff(cross_term(in.z, in.f, in.w), cross) <= 1e-10);
    CHECK(oracle::max_abs_diff(self_attention_term(in.z, in.w), naive(in, 0.0, false)) <= 1e-10);
  }
  const Instance multi = random_instance(77, 6, 8, 8, 4, 5, 2);
  CHECK(oracle::max_abs_diff(adaptive_attention(multi.z, &multi.f, multi.w, LambdaScale(0.6)),
                             naive(multi, 0.6)) <= 1e-10);
}

TEST_CASE("output is affine in lambda") {
  const Instance in = random_instance(3);
  const Tensor o0 = adaptive_attention(in.z, &in.f, in.w, LambdaScale(0.0));
  const Tensor cross = cross_term(in.z, in.f, in.w);
  for (double lambda : {0.0, 0.25, 0.5, 1.0}) {
    const Tensor ol = adaptive_attention(in.z, &in.f, in.w, LambdaScale(lambda));
    CHECK(max_abs_diff(sub(ol, o0), scale(cross, lambda)) <= 1e-12);
  }
}

TEST_CASE("a single zero identity token gives a zero cross term") {
  Instance in = random_instance(4);
  in.f = IdentityFeatures(Tensor({1, 5}));
  const Tensor cross = cross_term(in.z, in.f, in.w);
  for (double v : cross.values()) CHECK(v == 0.0);
}

TEST_CASE("perturbing W_k_ID leaves the self-attention summand unchanged") {
  Instance in = random_instance(5);
  const Tensor before = self_attention_term(in.z, in.w);
  in.w.w_k_id[0] += 1.0;
  CHECK(self_attention_term(in.z, in.w) == before);
  const Tensor o = adaptive_attention(in.z, &in.f, in.w, LambdaScale(0.5));
  CHECK(max_abs_diff(sub(o, scale(cross_term(in.z, in.f, in.w), 0.5)), before) <= 1e-12);
}

TEST_CASE("lambda is validated to [0, 1]") {
  CHECK_THROWS_AS(LambdaScale(-0.01), ValidationError);
  CHECK_THROWS_AS(LambdaScale(1.01), ValidationError);
  CHECK_NOTHROW(LambdaScale(1.0));
  CHECK(kDefaultLambda == 0.4);
}

TEST_CASE("dimension errors name the projection") {
  auto expect_name = [](const Instance& in, const char* name) {
    try {
      (void)adaptive_attention(in.z, &in.f, in.w, LambdaScale(0.4));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(std::string(e.what()).find(name) != std::string::npos);
    }
  };
  Instance a = random_instance(6);
  a.w.w_k = Tensor({7, 4});
  expect_name(a, "W_k");
  Instance b = random_instance(6);
  b.w.w_v_id = Tensor({5, 3});
  expect_name(b, "W_v_ID");
  Instance c = random_instance(6);
  c.w.w_k_id = Tensor({2, 4});
  expect_name(c, "W_k_ID");
  Instance d = random_instance(6);
  d.w.w_q = Tensor({3, 4});
  expect_name(d, "W_q");
}

TEST_CASE("gradients w.r.t. W_k_ID and W_v_ID match central differences") {
  const Instance in = random_instance(8, 4, 6, 6, 3, 5, 2);
  RngState rng{99, 0};
  const Tensor target = gaussian({4, 6}, rng);
  auto loss = [&](const Tensor& wkid, const Tensor& wvid, Tape& tape, Tape::Var* gk,
                  Tape::Var* gv) {
    AttentionVars v;
    v.w_q = tape.constant(in.w.w_q);
    v.w_k = tape.constant(in.w.w_k);
    v.w_v = tape.constant(in.w.w_v);
    v.w_k_id = tape.leaf(wkid);
    v.w_v_id = tape.leaf(wvid);
    if (gk) *gk = v.w_k_id;
    if (gv) *gv = v.w_v_id;
    auto out = adaptive_attention(tape, tape.constant(in.z), tape.constant(in.f.tokens), v,
                                  in.w.heads, 0.4);
    return tape.mse(out, target);
  };
  Tape tape;
  Tape::Var gk, gv;
  tape.backward(loss(in.w.w_k_id, in.w.w_v_id, tape, &gk, &gv));
  const Tensor ak = tape.grad(gk), av = tape.grad(gv);

  auto eval = [&](const Tensor& k, const Tensor& v) {
    Tape t(false);
    return t.value(loss(k, v, t, nullptr, nullptr))[0];
  };
  const double h = 1e-5;
  Tensor nk(ak.shape()), nv(av.shape());
  for (std::size_t i = 0; i < nk.size(); ++i) {
    Tensor p = in.w.w_k_id, m = in.w.w_k_id;
    p[i] += h;
    m[i] -= h;
    nk[i] = (eval(p, in.w.w_v_id) - eval(m, in.w.w_v_id)) / (2 * h);
  }
  for (std::size_t i = 0; i < nv.size(); ++i) {
    Tensor p = in.w.w_v_id, m = in.w.w_v_id;
    p[i] += h;
    m[i] -= h;
    nv[i] = (eval(in.w.w_k_id, p) - eval(in.w.w_k_id, m)) / (2 * h);
  }
  CHECK(relative_error(ak, nk) <= 1e-4);
  CHECK(relative_error(av, nv) <= 1e-4);
}
