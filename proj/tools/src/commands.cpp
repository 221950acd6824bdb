#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "freqbooth/codec.hpp"
#include "freqbooth/dataset.hpp"
#include "freqbooth/dct.hpp"
#include "freqbooth/errors.hpp"
#include "freqbooth/image.hpp"
#include "freqbooth/metric.hpp"
#include "freqbooth/sampler.hpp"
#include "freqbooth/serialize.hpp"
#include "freqbooth/training.hpp"

namespace freqbooth::cli {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2)); }

void write_image(const fs::path& path, const Image& image) {
  fs::create_directories(path.parent_path());
  write_ppm(path, image);
}

std::string index_name(const char* prefix, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu%s", prefix, i, ext);
  return buf;
}

ToyDatasetSpec dataset_spec(const Context& ctx, const DataOptions& o) {
  ToyDatasetSpec s;
  s.n_identities = o.n_identities;
  s.n_contexts = o.n_contexts.value_or(std::min<std::size_t>(4, ctx.model.n_classes));
  s.image_size = ctx.model.image_size;
  s.train_size = o.train_size;
  s.test_size = o.test_size;
  if (s.n_contexts > ctx.model.n_classes) {
    throw ValidationError("--n-contexts " + std::to_string(s.n_contexts) + " exceeds the " +
                          std::to_string(ctx.model.n_classes) + " context ids of this preset");
  }
  return s;
}

Dataset default_dataset(const Context& ctx, std::uint64_t data_seed) {
  DataOptions o;
  o.data_seed = data_seed;
  return generate_dataset(dataset_spec(ctx, o), data_seed);
}

json dataset_spec_json(const ToyDatasetSpec& s) {
  return json{{"n_identities", s.n_identities}, {"n_contexts", s.n_contexts},
              {"image_size", s.image_size},     {"train_size", s.train_size},
              {"test_size", s.test_size}};
}

ModelState load_stage(const Context& ctx, int stage, const std::string& mask) {
  const fs::path path = stage_checkpoint(ctx, stage, mask);
  if (!fs::exists(path)) {
    throw StateError("missing stage-" + std::to_string(stage) + " checkpoint " + path.string() +
                     " (run `freqbooth train --stage " + std::to_string(stage) +
                     (stage == 2 ? " --mask " + mask : std::string()) + "` first)");
  }
  ModelState state = load_checkpoint(path);
  if (model_config_json(state.config) != model_config_json(ctx.model)) {
    throw ValidationError("checkpoint " + path.string() + " was trained with a different preset");
  }
  if (state.completed_stage < stage) {
    throw StateError("checkpoint " + path.string() + " has not completed stage " +
                     std::to_string(stage));
  }
  return state;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ValidationError("cannot parse lambda value '" + item + "'");
    }
    if (used != item.size()) throw ValidationError("cannot parse lambda value '" + item + "'");
    LambdaScale checked(v);
    out.push_back(checked.value());
  }
  if (out.empty()) throw ValidationError("--values needs at least one lambda");
  return out;
}

TrainConfig make_train_config(const Context& ctx, const TrainOptions& o) {
  const Stage stage = stage_from_int(o.stage);
  const bool paper = ctx.global.preset == "paper-scale";
  TrainConfig c = paper ? paper_scale_train_config(stage) : TrainConfig{};
  c.stage = stage;
  c.steps = o.steps.value_or(kDefaultStageSteps[o.stage]);
  if (o.learning_rate) c.learning_rate = *o.learning_rate;
  if (o.optimizer == "adam") {
    c.weight_decay = 0.0;
  } else if (o.optimizer == "adamw") {
    if (c.weight_decay == 0.0) c.weight_decay = 1e-2;
  } else if (!o.optimizer.empty()) {
    throw ValidationError("--optimizer must be adam or adamw");
  }
  c.batch_size = o.batch_size;
  c.lambda = o.lambda;
  c.mask = parse_mask_kind(o.mask);
  c.seed = stage_seed(ctx.global.seed, o.stage);
  c.validate();
  return c;
}

// Reconstruction loss on the held-out split with one fixed (t, eps) draw per
// example, identical for every evaluated model.
double heldout_loss(const ModelState& state, const Dataset& ds, Stage stage, MaskKind mask,
                    std::uint64_t seed) {
  const TrainingSet set(ds.test, state.config, state.params);
  TrainConfig tc;
  tc.stage = Stage::Stage2;  // no condition dropout
  tc.batch_size = set.size();
  RngState rng{derive_seed(seed, 0x6576616cULL), 0};
  auto batch = draw_batch(set, state.config, tc, rng);
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i].example = i;
  const NoiseSchedule schedule =
      NoiseSchedule::linear(state.config.timesteps, state.config.beta_start, state.config.beta_end);
  LossOptions lo;
  lo.mask = mask;
  lo.compute_gradients = false;
  return stage_loss(stage, batch, set, state.config, state.params, schedule, lo).loss;
}

json channel_stats(const Tensor& px) {
  json out = json::array();
  const std::size_t h = px.dim(1), w = px.dim(2);
  for (std::size_t c = 0; c < px.dim(0); ++c) {
    double sum = 0.0, lo = px(c, 0, 0), hi = px(c, 0, 0);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        sum += px(c, i, j);
        lo = std::min(lo, px(c, i, j));
        hi = std::max(hi, px(c, i, j));
      }
    }
    const double m = sum / static_cast<double>(h * w);
    double var = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) var += (px(c, i, j) - m) * (px(c, i, j) - m);
    }
    out.push_back({{"mean", m},
                   {"variance", var / static_cast<double>(h * w)},
                   {"min", lo},
                   {"max", hi}});
  }
  return out;
}

}  // namespace

std::uint64_t stage_seed(std::uint64_t seed, int stage) {
  return derive_seed(seed, 0x7374616765ULL + static_cast<std::uint64_t>(stage));
}

fs::path stage_checkpoint(const Context& ctx, int stage, const std::string& mask) {
  if (stage == 2) return ctx.checkpoints / ("stage2-" + mask + ".json");
  return ctx.checkpoints / ("stage" + std::to_string(stage) + ".json");
}

Context Context::resolve(const GlobalOptions& global) {
  Context ctx;
  ctx.global = global;
  const char* env = std::getenv("FREQBOOTH_OUT");
  ctx.out = (env && *env) ? fs::path(env) : fs::path(global.out_dir);
  ctx.checkpoints =
      global.checkpoint_dir.empty() ? ctx.out / "checkpoints" : fs::path(global.checkpoint_dir);
  ctx.model = model_config_for_preset(global.preset);
  return ctx;
}

json Context::echo() const {
  return json{{"seed", global.seed},
              {"out_dir", out.generic_string()},
              {"checkpoint_dir", checkpoints.generic_string()},
              {"preset", global.preset},
              {"model_config", json::parse(model_config_json(model))}};
}

void Context::write_echo(const std::string& command, const json& options) const {
  json doc{{"command", command}};
  const json base = echo();
  for (auto it = base.begin(); it != base.end(); ++it) doc[it.key()] = it.value();
  doc["options"] = options;
  write_json(out / (command + ".config.json"), doc);
}

int cmd_gen_data(const Context& ctx, const DataOptions& o) {
  const ToyDatasetSpec spec = dataset_spec(ctx, o);
  spec.validate();
  ctx.write_echo("gen-data", {{"data_seed", o.data_seed}, {"dataset", dataset_spec_json(spec)}});
  const Dataset ds = generate_dataset(spec, o.data_seed);

  json index{{"data_seed", o.data_seed}, {"spec", dataset_spec_json(spec)}};
  auto dump = [&](const char* split, const std::vector<Sample>& samples) {
    const fs::path dir = ctx.out / "data" / split;
    json rows = json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const std::string img = index_name("img", i, ".ppm");
      const std::string ref = index_name("ref", i, ".ppm");
      write_image(dir / img, s.image);
      write_image(dir / ref, s.reference);
      rows.push_back({{"image", std::string(split) + "/" + img},
                      {"reference", std::string(split) + "/" + ref},
                      {"identity", s.identity},
                      {"context", s.context},
                      {"context_name", kContextNames[s.context]}});
    }
    index[split] = rows;
  };
  dump("train", ds.train);
  dump("test", ds.test);
  write_json(ctx.out / "data" / "index.json", index);
  std::printf("wrote %zu train + %zu test samples to %s\n", ds.train.size(), ds.test.size(),
              (ctx.out / "data").string().c_str());
  return kOk;
}

int cmd_train(const Context& ctx, const TrainOptions& o) {
  const TrainConfig tc = make_train_config(ctx, o);
  ModelState state = o.stage == 0 ? ModelState::initial(ctx.model)
                                  : load_stage(ctx, o.stage - 1, "");
  ctx.write_echo("train", {{"stage", o.stage},
                           {"data_seed", o.data_seed},
                           {"train_config", json::parse(train_config_json(tc))}});

  const Dataset ds = default_dataset(ctx, o.data_seed);
  const TrainReport report = train(tc, ds, state);
  const fs::path ckpt = stage_checkpoint(ctx, o.stage, o.mask);
  save_checkpoint(ckpt, state);
  const std::string name = o.stage == 2 ? "train-stage2-" + o.mask : "train-stage" + std::to_string(o.stage);
  write_text_file(ctx.out / "reports" / (name + ".json"), train_report_json(report));

  std::printf("stage %d: %zu steps, smoothed loss %.5f -> %.5f (ratio %.3f), frozen sets %s, "
              "wall-clock %.1f s\n",
              o.stage, report.losses.size(), report.initial_smoothed, report.final_smoothed,
              report.smoothed_ratio(), report.frozen_unchanged() ? "unchanged" : "CHANGED",
              report.wall_clock_seconds);
  std::printf("checkpoint: %s\n", ckpt.string().c_str());
  return kOk;
}

int cmd_sample(const Context& ctx, const SampleOptions& o) {
  const std::optional<MaskKind> mask = parse_optional_mask(o.mask);
  const LambdaScale lambda(o.lambda);
  if (o.n == 0) throw ValidationError("--n must be >= 1");
  if (mask && o.ref.empty()) throw ValidationError("--mask needs --ref");
  std::optional<Image> ref;
  if (!o.ref.empty()) ref = read_ppm(o.ref);

  const std::string mask_name(to_string(mask));
  ModelState state = mask ? load_stage(ctx, 2, mask_name) : load_stage(ctx, 1, "");
  const bool ref_independent = !ref || (lambda.value() == 0.0 && !mask);
  json options{{"ref", o.ref},
               {"text_id", o.text_id ? json(*o.text_id) : json(nullptr)},
               {"lambda", lambda.value()},
               {"guidance", o.guidance},
               {"mask", mask_name},
               {"steps", o.steps},
               {"n", o.n}};
  ctx.write_echo("sample", options);

  Sampler sampler(state.config, state.params);
  json rows = json::array();
  for (std::size_t i = 0; i < o.n; ++i) {
    SampleRequest req;
    req.reference = ref ? &*ref : nullptr;
    req.class_id = o.text_id;
    req.mask = mask;
    req.steps = o.steps;
    req.guidance = o.guidance;
    req.lambda = lambda.value();
    req.seed = derive_seed(ctx.global.seed, i);
    const SampleResult r = sampler.sample(req);
    const std::string file = index_name("sample", i, ".ppm");
    write_image(ctx.out / "samples" / file, r.image);
    json row{{"file", file}, {"seed", req.seed}};
    if (ref) {
      const IdentityScore score = identity_metric(r.image, *ref);
      row["identity_metric"] = score.value;
      row["identity_metric_degenerate"] = score.degenerate;
    }
    rows.push_back(row);
  }
  json meta = options;
  meta["ref_independent"] = ref_independent;
  meta["reference_forward_passes"] = sampler.animal_net().forward_passes();
  meta["samples"] = rows;
  write_json(ctx.out / "samples" / "metadata.json", meta);
  std::printf("wrote %zu samples to %s\n", o.n, (ctx.out / "samples").string().c_str());
  return kOk;
}

int cmd_filter(const Context& ctx, const FilterOptions& o) {
  const MaskKind mask = parse_mask_kind(o.mask);
  const Image input = read_ppm(o.input);
  const fs::path out = o.out.empty() ? ctx.out / "filter" / ("filtered-" + o.mask + ".ppm")
                                     : fs::path(o.out);
  ctx.write_echo("filter", {{"input", o.input}, {"mask", o.mask}, {"out", out.generic_string()}});

  const ToyLatentCodec codec(ctx.model.patch);
  const Tensor latent = codec.encode(input);
  const Tensor filtered = codec.decode(make_control_signal(latent, mask));
  const bool band = mask == MaskKind::Mid || mask == MaskKind::High;
  const double offset = band ? 0.5 : 0.0;
  Tensor shown = filtered;
  for (double& v : shown.data()) v += offset;
  write_image(out, Image::from_unclamped(shown));

  const FrequencyMask m = build_mask(mask, latent.dim(1), latent.dim(2));
  json sidecar{{"input", o.input},
               {"mask", o.mask},
               {"latent_shape", latent.shape()},
               {"mask_ones", m.count()},
               {"display_offset", offset},
               {"pixel_variance", variance(filtered)},
               {"channels", channel_stats(filtered)}};
  if (mask == MaskKind::All) {
    sidecar["roundtrip_max_abs_diff"] = max_abs_diff(filtered, codec.decode(latent));
  }
  fs::path side = out;
  side.replace_extension(".json");
  write_json(side, sidecar);
  std::printf("%s-pass: %zu of %zu coefficients kept, pixel variance %.6g -> %s\n", o.mask.c_str(),
              m.count(), m.bits.size(), variance(filtered), out.string().c_str());
  return kOk;
}

int cmd_sweep_lambda(const Context& ctx, const SweepOptions& o) {
  const std::vector<double> values = parse_values(o.values);
  if (o.trials == 0) throw ValidationError("--trials must be >= 1");
  ModelState state = load_stage(ctx, 1, "");
  ctx.write_echo("sweep-lambda", {{"values", values},
                                  {"trials", o.trials},
                                  {"guidance", o.guidance},
                                  {"steps", o.steps},
                                  {"data_seed", o.data_seed}});
  const Dataset ds = default_dataset(ctx, o.data_seed);
  if (ds.test.empty()) throw ValidationError("held-out split is empty");

  Sampler sampler(state.config, state.params);
  const std::size_t S = state.config.image_size;
  Tensor sheet({3, (values.size() + 1) * S, o.trials * S}, 1.0);
  auto paste = [&](const Image& img, std::size_t row, std::size_t col) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) sheet(c, row * S + i, col * S + j) = img.pixels()(c, i, j);
  };

  std::vector<std::vector<double>> metrics(values.size(), std::vector<double>(o.trials));
  json rows = json::array();
  for (std::size_t k = 0; k < o.trials; ++k) {
    const Sample& s = ds.test[k % ds.test.size()];
    paste(s.reference, 0, k);
    for (std::size_t v = 0; v < values.size(); ++v) {
      SampleRequest req;
      req.reference = &s.reference;
      req.class_id = s.context;
      req.lambda = values[v];
      req.guidance = o.guidance;
      req.steps = o.steps;
      req.seed = derive_seed(ctx.global.seed, k);
      const SampleResult r = sampler.sample(req);
      const IdentityScore score = identity_metric(r.image, s.reference);
      metrics[v][k] = score.value;
      paste(r.image, v + 1, k);
      rows.push_back({{"lambda", values[v]},
                      {"trial", k},
                      {"seed", req.seed},
                      {"identity", s.identity},
                      {"text_id", s.context},
                      {"identity_metric", score.value},
                      {"degenerate", score.degenerate}});
    }
  }

  const auto zero = std::find(values.begin(), values.end(), 0.0);
  json summary = json::array();
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto& m = metrics[v];
    double mean = 0.0;
    for (double x : m) mean += x;
    mean /= static_cast<double>(m.size());
    double var = 0.0;
    for (double x : m) var += (x - mean) * (x - mean);
    json entry{{"lambda", values[v]},
               {"mean_identity_metric", mean},
               {"std_identity_metric", std::sqrt(var / static_cast<double>(m.size()))}};
    if (zero != values.end()) {
      const auto& base = metrics[static_cast<std::size_t>(zero - values.begin())];
      std::size_t wins = 0;
      for (std::size_t k = 0; k < m.size(); ++k) wins += m[k] > base[k] ? 1 : 0;
      entry["wins_vs_lambda0"] = wins;
      entry["win_rate_vs_lambda0"] = static_cast<double>(wins) / static_cast<double>(m.size());
    }
    summary.push_back(entry);
  }
  write_json(ctx.out / "sweep" / "report.json",
             json{{"values", values}, {"trials", o.trials}, {"summary", summary}, {"rows", rows}});
  write_image(ctx.out / "sweep" / "contact_sheet.ppm", Image(std::move(sheet)));
  for (const auto& e : summary) {
    std::printf("lambda %.3g: mean identity metric %.4f", e["lambda"].get<double>(),
                e["mean_identity_metric"].get<double>());
    if (e.contains("win_rate_vs_lambda0")) {
      std::printf(", win rate vs 0: %.2f", e["win_rate_vs_lambda0"].get<double>());
    }
    std::printf("\n");
  }
  return kOk;
}

int cmd_ablate_masks(const Context& ctx, const AblateOptions& o) {
  if (o.trials == 0) throw ValidationError("--trials must be >= 1");
  const ModelState stage1 = load_stage(ctx, 1, "");
  ctx.write_echo("ablate-masks", {{"trials", o.trials},
                                  {"train_steps", o.train_steps},
                                  {"guidance", o.guidance},
                                  {"steps", o.steps},
                                  {"data_seed", o.data_seed}});
  const Dataset ds = default_dataset(ctx, o.data_seed);
  if (ds.test.empty()) throw ValidationError("held-out split is empty");

  const std::vector<std::optional<MaskKind>> rows_cfg = {
      std::nullopt, MaskKind::Mini, MaskKind::Low, MaskKind::Mid, MaskKind::High};
  struct Row {
    std::string mask;
    double loss = 0.0;
    double identity = 0.0;
    std::size_t ones = 0;
  };
  std::vector<Row> rows;
  const std::size_t side = ctx.model.latent_size();
  for (const auto& mask : rows_cfg) {
    const std::string name(to_string(mask));
    ModelState state = stage1;
    if (mask) {
      const fs::path path = stage_checkpoint(ctx, 2, name);
      if (fs::exists(path)) {
        state = load_stage(ctx, 2, name);
      } else {
        TrainOptions to;
        to.stage = 2;
        to.steps = o.train_steps;
        to.mask = name;
        to.data_seed = o.data_seed;
        const TrainConfig tc = make_train_config(ctx, to);
        const TrainReport rep = train(tc, ds, state);
        save_checkpoint(path, state);
        write_text_file(ctx.out / "reports" / ("train-stage2-" + name + ".json"),
                        train_report_json(rep));
        std::printf("trained stage 2 (%s): smoothed loss %.5f -> %.5f\n", name.c_str(),
                    rep.initial_smoothed, rep.final_smoothed);
      }
    }
    Row row;
    row.mask = name;
    row.ones = mask ? build_mask(*mask, side, side).count() : 0;
    row.loss = heldout_loss(state, ds, mask ? Stage::Stage2 : Stage::Stage1,
                            mask.value_or(MaskKind::All), ctx.global.seed);
    Sampler sampler(state.config, state.params);
    for (std::size_t k = 0; k < o.trials; ++k) {
      const Sample& s = ds.test[k % ds.test.size()];
      SampleRequest req;
      req.reference = &s.reference;
      req.class_id = s.context;
      req.mask = mask;
      req.guidance = o.guidance;
      req.steps = o.steps;
      req.seed = derive_seed(ctx.global.seed, k);
      row.identity += identity_metric(sampler.sample(req).image, s.reference).value;
    }
    row.identity /= static_cast<double>(o.trials);
    rows.push_back(row);
  }

  auto rank_by = [&](auto key, bool ascending) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ascending ? key(rows[a]) < key(rows[b]) : key(rows[a]) > key(rows[b]);
    });
    std::vector<std::size_t> rank(rows.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
    return std::pair{order, rank};
  };
  const auto [loss_order, loss_rank] = rank_by([](const Row& r) { return r.loss; }, true);
  const auto [id_order, id_rank] = rank_by([](const Row& r) { return r.identity; }, false);

  json table = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.push_back({{"mask", rows[i].mask},
                     {"mask_ones", rows[i].ones},
                     {"heldout_loss", rows[i].loss},
                     {"identity_metric", rows[i].identity},
                     {"rank_loss", loss_rank[i]},
                     {"rank_identity", id_rank[i]}});
  }
  json ranking = json::array();
  for (std::size_t i : loss_order) ranking.push_back(rows[i].mask);
  write_json(ctx.out / "ablation" / "report.json",
             json{{"latent_size", side},
                  {"trials", o.trials},
                  {"rows", table},
                  {"ranking_by_loss", ranking}});
  std::printf("%-6s %6s %14s %16s %5s\n", "mask", "ones", "heldout_loss", "identity_metric", "rank");
  for (std::size_t i : loss_order) {
    std::printf("%-6s %6zu %14.6f %16.4f %5zu\n", rows[i].mask.c_str(), rows[i].ones, rows[i].loss,
                rows[i].identity, loss_rank[i]);
  }
  return kOk;
}

int cmd_gradcheck(const Context& ctx, const GradcheckOptionsCli& o) {
  if (o.fault != "none" && o.fault != "sign-flip") {
    throw ValidationError("--inject-fault must be none or sign-flip");
  }
  std::vector<int> stages;
  if (o.stage == "all") {
    stages = {0, 1, 2};
  } else {
    try {
      std::size_t used = 0;
      stages = {std::stoi(o.stage, &used)};
      if (used != o.stage.size()) throw std::invalid_argument(o.stage);
    } catch (const std::exception&) {
      throw ValidationError("--stage must be 0, 1, 2 or all");
    }
    stage_from_int(stages.front());
  }
  ctx.write_echo("gradcheck", {{"stage", o.stage}, {"inject_fault", o.fault}});

  bool all_passed = true;
  json reports = json::array();
  for (int s : stages) {
    GradcheckOptions go;
    go.stage = stage_from_int(s);
    go.seed = ctx.global.seed;
    go.inject_sign_flip = o.fault == "sign-flip";
    const GradcheckReport r = gradcheck(go);
    all_passed = all_passed && r.passed;
    reports.push_back(json::parse(gradcheck_report_json(r)));
    for (const auto& e : r.entries) {
      std::printf("stage %d  %-28s %-9s max rel err %.3e %s\n", s, e.parameter.c_str(),
                  std::string(to_string(e.group)).c_str(), e.relative_error,
                  e.relative_error <= r.tolerance ? "ok" : "FAIL");
    }
  }
  write_json(ctx.out / "gradcheck" / "report.json",
             json{{"passed", all_passed}, {"stages", reports}});
  std::printf("gradcheck %s\n", all_passed ? "PASSED" : "FAILED");
  return all_passed ? kOk : kGradcheckFailed;
}

}  // namespace freqbooth::cli
