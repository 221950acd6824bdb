// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqbooth/attention.hpp"
#include "freqbooth/dataset.hpp"
#include "freqbooth/dct.hpp"
#include "freqbooth/image.hpp"
#include "freqbooth/params.hpp"
#include "freqbooth/rng.hpp"
#include "freqbooth/sampler.hpp"
#include "freqbooth/schedule.hpp"
#include "freqbooth/serialize.hpp"
#include "freqbooth/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace freqbooth;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

const fs::path kWork = fs::path(FREQBOOTH_TEST_TMP) / "acceptance";

int run_cli(const std::string& args, const std::string& log) {
  fs::create_directories(kWork);
  const std::string cmd = "\"" + std::string(FREQBOOTH_CLI_PATH) + "\" " + args + " > \"" +
                          (kWork / log).string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return files;
}

Tensor random_tensor(Shape shape, RngState& rng) { return gaussian(std::move(shape), rng); }

// 1. DCT roundtrip, Parseval and oracle agreement.
void dct_correctness(Outcome& o) {
  const auto t0 = Clock::now();
  RngState rng{101, 0};
  double worst_rt = 0.0, worst_norm = 0.0, worst_oracle = 0.0;
  for (std::size_t n : {8u, 64u}) {
    for (int k = 0; k < 100; ++k) {
      const Tensor x = random_tensor({1, n, n}, rng);
      const Tensor f = dct2(x);
      worst_rt = std::max(worst_rt, relative_error(idct2(f), x));
      worst_norm = std::max(worst_norm, std::abs(frobenius_norm(f) - frobenius_norm(x)));
      if (n == 8) worst_oracle = std::max(worst_oracle, oracle::max_abs_diff(f, oracle::dct2(x)));
    }
  }
  const double secs = seconds_since(t0);
  o.detail << "roundtrip rel " << worst_rt << ", norm diff " << worst_norm << ", oracle diff "
           << worst_oracle << ", " << secs << " s";
  o.require(worst_rt <= 1e-9, "roundtrip");
  o.require(worst_norm <= 1e-9, "norm preservation");
  o.require(worst_oracle <= 1e-10, "oracle");
  o.require(secs < 10.0, "runtime");
}

// 2. Mask predicates, counts, nesting and the uncovered band.
void mask_contract(Outcome& o) {
  std::size_t mismatches = 0;
  for (std::size_t n : {8u, 64u}) {
    const auto mini = build_mask(MaskKind::Mini, n, n), low = build_mask(MaskKind::Low, n, n),
               mid = build_mask(MaskKind::Mid, n, n), high = build_mask(MaskKind::High, n, n),
               all = build_mask(MaskKind::All, n, n);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        const std::size_t s = u + v;
        mismatches += mini.at(u, v) != (s <= 10);
        mismatches += low.at(u, v) != (s <= 20);
        mismatches += mid.at(u, v) != (s > 20 && s <= 40);
        mismatches += high.at(u, v) != (s >= 50);
        mismatches += !all.at(u, v);
        mismatches += mini.at(u, v) && !low.at(u, v);
        mismatches += low.at(u, v) && mid.at(u, v);
        mismatches += mid.at(u, v) && high.at(u, v);
      }
  }
  const std::size_t low64 = build_mask(MaskKind::Low, 64, 64).count();
  const auto gap = uncovered_index_sums(64, 64);
  o.detail << "predicate/nesting mismatches " << mismatches << ", low ones at 64x64 " << low64
           << ", uncovered u+v";
  for (std::size_t g : gap) o.detail << " " << g;
  o.require(mismatches == 0, "predicates");
  o.require(low64 == 231, "low count");
  o.require(gap.size() == 9 && gap.front() == 41 && gap.back() == 49, "gap detection");
}

// 3. Adaptive attention identities against the loop oracle.
void attention_contract(Outcome& o) {
  RngState rng{303, 0};
  double worst_affine = 0.0, worst_oracle = 0.0;
  bool bitwise = true;
  for (int k = 0; k < 50; ++k) {
    const std::size_t heads = 1 + k % 2;
    AdaptiveAttentionWeights w;
    const Tensor z = random_tensor({6, 8}, rng);
    const IdentityFeatures f(random_tensor({4, 5}, rng));
    w.w_q = random_tensor({8, 8}, rng);
    w.w_k = random_tensor({8, 8}, rng);
    w.w_v = random_tensor({8, 8}, rng);
    w.w_k_id = random_tensor({5, 8}, rng);
    w.w_v_id = random_tensor({5, 8}, rng);
    w.heads = heads;
    const Tensor o0 = adaptive_attention(z, &f, w, LambdaScale(0.0));
    bitwise &= o0 == self_attention_term(z, w);
    const Tensor cross = cross_term(z, f, w);
    for (double lambda : {0.25, 0.5, 1.0}) {
      const Tensor ol = adaptive_attention(z, &f, w, LambdaScale(lambda));
      worst_affine = std::max(worst_affine, max_abs_diff(sub(ol, o0), scale(cross, lambda)));
      const Tensor naive = oracle::adaptive_attention(z, &f.tokens, w.w_q, w.w_k, w.w_v, w.w_k_id,
                                                      w.w_v_id, heads, lambda);
      worst_oracle = std::max(worst_oracle, oracle::max_abs_diff(ol, naive));
    }
  }
  o.detail << "lambda=0 bitwise " << (bitwise ? "yes" : "no") << ", affine diff " << worst_affine
           << ", oracle diff " << worst_oracle;
  o.require(bitwise, "lambda zero");
  o.require(worst_affine <= 1e-12, "affine in lambda");
  o.require(worst_oracle <= 1e-10, "oracle");
}

// 4. Finite-difference gradient checks on every trainable set.
void gradient_checks(Outcome& o) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t tensors = 0;
  bool all = true;
  for (Stage s : {Stage::Pretrain0, Stage::Stage1, Stage::Stage2}) {
    GradcheckOptions opts;
    opts.stage = s;
    const GradcheckReport r = gradcheck(opts);
    all &= r.passed;
    worst = std::max(worst, r.max_relative_error);
    tensors += r.entries.size();
  }
  const double secs = seconds_since(t0);
  o.detail << tensors << " tensors, max relative error " << worst << ", " << secs << " s";
  o.require(all && worst <= 1e-4, "tolerance");
  o.require(secs < 60.0, "runtime");
}

struct ToyRun {
  fs::path out = kWork / "toy";
  bool trained = false;
  double stage1_seconds = 0.0;
};

// Toy-default training through the CLI: stage 0, stage 1 and stage 2 (low).
ToyRun toy_training() {
  ToyRun r;
  fs::remove_all(r.out);
  const std::string base = "--out-dir \"" + r.out.string() + "\" ";
  if (run_cli(base + "train --stage 0", "toy_stage0.log") != 0) return r;
  const auto t0 = Clock::now();
  if (run_cli(base + "train --stage 1", "toy_stage1.log") != 0) return r;
  r.stage1_seconds = seconds_since(t0);
  if (run_cli(base + "train --stage 2 --mask low", "toy_stage2.log") != 0) return r;
  r.trained = true;
  return r;
}

// 5. Frozen groups keep identical checksums across stage-1 and stage-2 runs.
void freezing_contract(Outcome& o, const ToyRun& run) {
  o.require(run.trained, "toy training runs");
  if (!run.trained) return;
  const ModelState s0 = load_checkpoint(run.out / "checkpoints" / "stage0.json");
  const ModelState s1 = load_checkpoint(run.out / "checkpoints" / "stage1.json");
  const ModelState s2 = load_checkpoint(run.out / "checkpoints" / "stage2-low.json");
  const json r1 = load_json(run.out / "reports" / "train-stage1.json");
  const json r2 = load_json(run.out / "reports" / "train-stage2-low.json");
  auto same = [](const ModelState& a, const ModelState& b, ParamGroup g) {
    return a.params.group_checksum(g) == b.params.group_checksum(g);
  };
  const bool stage1_ok = same(s0, s1, ParamGroup::Encoder) && same(s0, s1, ParamGroup::Backbone) &&
                         same(s0, s1, ParamGroup::Control) && !same(s0, s1, ParamGroup::Identity);
  const bool stage2_ok = same(s1, s2, ParamGroup::Encoder) && same(s1, s2, ParamGroup::Backbone) &&
                         same(s1, s2, ParamGroup::Identity) && !same(s1, s2, ParamGroup::Control);
  const std::size_t steps1 = r1["losses"].size(), steps2 = r2["losses"].size();
  o.detail << "stage-1 " << steps1 << " steps frozen " << (stage1_ok ? "unchanged" : "CHANGED")
           << ", stage-2 " << steps2 << " steps frozen " << (stage2_ok ? "unchanged" : "CHANGED");
  o.require(steps1 >= 500 && steps2 >= 500, "run length");
  o.require(stage1_ok && r1["frozen_unchanged"] == true, "stage-1 checksums");
  o.require(stage2_ok && r2["frozen_unchanged"] == true, "stage-2 checksums");
}

// 6. Stage-1 smoothed loss halves within the time budget.
void convergence(Outcome& o, const ToyRun& run) {
  o.require(run.trained, "toy training runs");
  if (!run.trained) return;
  const json r = load_json(run.out / "reports" / "train-stage1.json");
  const double ratio = r["smoothed_ratio"].get<double>();
  o.detail << r["losses"].size() << " steps, smoothed " << r["initial_smoothed_loss"].get<double>()
           << " -> " << r["final_smoothed_loss"].get<double>() << ", ratio " << ratio << " (need <= 0.5), "
           << run.stage1_seconds << " s";
  o.require(r["losses"].size() == 2000, "2000 steps");
  o.require(ratio <= 0.5, "ratio");
  o.require(run.stage1_seconds < 600.0, "runtime");
}

// 7. Identity injection beats lambda = 0 over paired seeds.
void identity_injection(Outcome& o, const ToyRun& run) {
  o.require(run.trained, "toy training runs");
  if (!run.trained) return;
  const int code = run_cli("--out-dir \"" + run.out.string() +
                               "\" sweep-lambda --values 0,0.4,1.0 --trials 20",
                           "toy_sweep.log");
  o.require(code == 0, "sweep runs");
  if (code != 0) return;
  const json r = load_json(run.out / "sweep" / "report.json");
  double m0 = 0.0, m4 = 0.0, m1 = 0.0, win4 = 0.0, win1 = 0.0;
  for (const auto& e : r["summary"]) {
    const double l = e["lambda"].get<double>();
    const double m = e["mean_identity_metric"].get<double>();
    if (l == 0.0) m0 = m;
    if (l == 0.4) {
      m4 = m;
      win4 = e["win_rate_vs_lambda0"].get<double>();
    }
    if (l == 1.0) {
      m1 = m;
      win1 = e["win_rate_vs_lambda0"].get<double>();
    }
  }
  o.detail << r["trials"].get<int>() << " paired seeds, mean metric lambda 0: " << m0
           << ", 0.4: " << m4 << " (win rate " << win4 << "), 1.0: " << m1 << " (win rate "
           << win1 << ", reported only)";
  o.require(r["trials"].get<int>() >= 20, "trial count");
  o.require(m4 > m0, "mean improvement");
  o.require(win4 >= 0.7, "win rate");
}

// 8. Guidance and DDIM identities.
void cfg_identities(Outcome& o) {
  const ModelConfig c = tiny_model_config();
  ParameterStore store = init_parameters(c);
  RngState rng{808, 0};
  for (auto& p : store.parameters())
    if (p.group != ParamGroup::Encoder)
      for (double& v : p.value.data()) v += 0.2 * rng.normal();
  Sampler sampler(c, store);
  const Image ref = stripe_image(c.image_size, 0.7, 4.0);

  SampleRequest req;
  req.reference = &ref;
  req.class_id = 1;
  req.mask = MaskKind::Low;
  req.steps = 10;
  req.seed = 3;
  req.guidance = 1.0;
  const Tensor w1 = sampler.sample(req).latent;
  req.conditional_only = true;
  const bool cond_ok = sampler.sample(req).latent == w1;

  req.conditional_only = false;
  req.guidance = 0.0;
  const Tensor w0 = sampler.sample(req).latent;
  SampleRequest uncond;
  uncond.steps = req.steps;
  uncond.seed = req.seed;
  uncond.conditional_only = true;
  const bool uncond_ok = sampler.sample(uncond).latent == w0;

  const NoiseSchedule& sched = sampler.schedule();
  double worst = 0.0;
  for (std::size_t t = 1; t <= sched.steps(); ++t) {
    const Tensor z0 = random_tensor({4, 8, 8}, rng), eps = random_tensor({4, 8, 8}, rng);
    worst = std::max(worst, max_abs_diff(ddim_step(forward_noise(z0, t, eps, sched), eps, t, 0, sched), z0));
  }
  o.detail << "w=1 conditional-only bitwise " << (cond_ok ? "yes" : "no") << ", w=0 unconditional bitwise "
           << (uncond_ok ? "yes" : "no") << ", DDIM true-noise recovery " << worst;
  o.require(cond_ok, "w=1");
  o.require(uncond_ok, "w=0");
  o.require(worst <= 1e-9, "DDIM recovery");
}

// 9. Band filtering of a striped image through the CLI.
void striped_filter(Outcome& o) {
  const fs::path out = kWork / "filter";
  fs::remove_all(out);
  const fs::path img = kWork / "stripes.ppm";
  write_ppm(img, stripe_image(256, std::numbers::pi / 5.0, 9.0));
  std::map<std::string, json> side;
  for (const char* m : {"mini", "low", "high", "all"}) {
    const int code = run_cli("--out-dir \"" + out.string() + "\" filter --input \"" + img.string() +
                                 "\" --mask " + m,
                             std::string("filter_") + m + ".log");
    o.require(code == 0, std::string("filter ") + m);
    if (code != 0) return;
    side[m] = load_json(out / "filter" / (std::string("filtered-") + m + ".json"));
  }
  const double vmini = side["mini"]["pixel_variance"].get<double>();
  const double vlow = side["low"]["pixel_variance"].get<double>();
  double worst_mean = 0.0;
  for (const auto& ch : side["high"]["channels"]) worst_mean = std::max(worst_mean, std::abs(ch["mean"].get<double>()));
  const double rt = side["all"]["roundtrip_max_abs_diff"].get<double>();
  o.detail << "variance mini " << vmini << " < low " << vlow << ", high-pass |mean| " << worst_mean
           << ", all-pass vs roundtrip " << rt;
  o.require(vmini < vlow, "variance order");
  o.require(worst_mean <= 1e-6, "high-pass mean");
  o.require(rt <= 1e-6, "all-pass");
}

// 10. Every command produces byte-identical artifacts when rerun with the same config.
void reproducibility(Outcome& o, const ToyRun& toy) {
  const fs::path out = kWork / "repro";
  const fs::path ref = kWork / "repro_ref.ppm";
  write_ppm(ref, stripe_image(8, 0.5, 4.0));
  const std::string base = "--preset tiny --seed 7 --out-dir \"" + out.string() + "\" ";
  const std::vector<std::string> pipeline = {
      "gen-data --train-size 8 --test-size 4",
      "train --stage 0 --steps 40",
      "train --stage 1 --steps 40",
      "train --stage 2 --steps 20 --mask low",
      "sample --ref \"" + ref.string() + "\" --n 3 --steps 5",
      "sample --ref \"" + ref.string() + "\" --mask low --n 2 --steps 5",
      "filter --input \"" + ref.string() + "\" --mask low",
      "sweep-lambda --trials 4 --steps 5",
      "ablate-masks --trials 2 --train-steps 5 --steps 5",
      "gradcheck --stage all"};
  std::vector<std::map<std::string, std::string>> runs;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(out);
    for (std::size_t i = 0; i < pipeline.size(); ++i) {
      if (run_cli(base + pipeline[i], "repro.log") != 0) {
        o.require(false, pipeline[i]);
        return;
      }
      // Echo files are rewritten per command; keep each one.
      for (const auto& e : fs::directory_iterator(out)) {
        if (e.path().extension() == ".json") {
          fs::copy_file(e.path(), out / ("echo" + std::to_string(i) + "-" + e.path().filename().string()),
                        fs::copy_options::overwrite_existing);
        }
      }
    }
    runs.push_back(snapshot(out));
  }
  std::size_t differing = runs[0].size() == runs[1].size() ? 0 : 1;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    differing += it == runs[1].end() || it->second != bytes;
  }

  // Toy-preset sampling and sweep from the trained checkpoints.
  std::size_t toy_files = 0;
  if (toy.trained) {
    const std::string tb = "--out-dir \"" + toy.out.string() + "\" ";
    const fs::path toy_ref = kWork / "stripes32.ppm";
    write_ppm(toy_ref, stripe_image(32, 0.9, 10.0));
    std::vector<std::map<std::string, std::string>> toy_runs;
    for (int pass = 0; pass < 2; ++pass) {
      fs::remove_all(toy.out / "samples");
      if (run_cli(tb + "sample --ref \"" + toy_ref.string() + "\" --n 4", "toy_repro.log") != 0) break;
      toy_runs.push_back(snapshot(toy.out / "samples"));
    }
    if (toy_runs.size() == 2) {
      toy_files = toy_runs[0].size();
      differing += toy_runs[0] != toy_runs[1];
    } else {
      o.require(false, "toy sample runs");
    }
  }
  o.detail << pipeline.size() << " tiny-preset commands, " << runs[0].size() << " artifacts; "
           << toy_files << " toy sample artifacts; differing " << differing;
  o.require(differing == 0, "byte equality");
}

}  // namespace

int main() {
  std::printf("acceptance work dir: %s\n", kWork.string().c_str());
  std::fflush(stdout);
  fs::create_directories(kWork);
  const ToyRun toy = toy_training();

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"DCT correctness", dct_correctness},
      {"mask contract", mask_contract},
      {"adaptive attention", attention_contract},
      {"gradient checks", gradient_checks},
      {"freezing contract", [&](Outcome& o) { freezing_contract(o, toy); }},
      {"stage-1 convergence", [&](Outcome& o) { convergence(o, toy); }},
      {"identity injection", [&](Outcome& o) { identity_injection(o, toy); }},
      {"guidance and DDIM identities", cfg_identities},
      {"striped-image band filtering", striped_filter},
      {"reproducibility", [&](Outcome& o) { reproducibility(o, toy); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
