#include "freqbooth/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "freqbooth/errors.hpp"

namespace freqbooth {

using json = nlohmann::ordered_json;

namespace {

json config_to(const ModelConfig& c) {
  return json{{"image_size", c.image_size},   {"patch", c.patch},
              {"latent_channels", c.latent_channels},
              {"d_model", c.d_model},         {"heads", c.heads},
              {"d_ff", c.d_ff},               {"blocks", c.blocks},
              {"time_dim", c.time_dim},       {"n_classes", c.n_classes},
              {"d_tok", c.d_tok},             {"d_id", c.d_id},
              {"n_query", c.n_query},         {"latent_scale", c.latent_scale},
              {"timesteps", c.timesteps},     {"beta_start", c.beta_start},
              {"beta_end", c.beta_end},       {"init_seed", c.init_seed}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.image_size = j.at("image_size").get<std::size_t>();
  c.patch = j.at("patch").get<std::size_t>();
  c.latent_channels = j.at("latent_channels").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.time_dim = j.at("time_dim").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.d_tok = j.at("d_tok").get<std::size_t>();
  c.d_id = j.at("d_id").get<std::size_t>();
  c.n_query = j.at("n_query").get<std::size_t>();
  c.latent_scale = j.at("latent_scale").get<double>();
  c.timesteps = j.at("timesteps").get<std::size_t>();
  c.beta_start = j.at("beta_start").get<double>();
  c.beta_end = j.at("beta_end").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

json train_to(const TrainConfig& c) {
  return json{{"stage", static_cast<int>(c.stage)},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"steps", c.steps},
              {"optimizer", c.weight_decay > 0.0 ? "adamw" : "adam"},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"weight_decay", c.weight_decay},
              {"seed", c.seed},
              {"lambda", c.lambda},
              {"mask", std::string(to_string(c.mask))},
              {"condition_dropout", c.condition_dropout},
              {"smoothing_window", c.smoothing_window}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  c.stage = stage_from_int(j.at("stage").get<int>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.lambda = j.at("lambda").get<double>();
  c.mask = parse_mask_kind(j.at("mask").get<std::string>());
  c.condition_dropout = j.at("condition_dropout").get<double>();
  c.smoothing_window = j.at("smoothing_window").get<std::size_t>();
  c.validate();
  return c;
}

template <typename F>
auto parse_guarded(std::string_view text, const char* what, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string model_config_json(const ModelConfig& config) { return config_to(config).dump(2); }

ModelConfig parse_model_config_json(std::string_view text) {
  return parse_guarded(text, "model config", [](const json& j) { return config_from(j); });
}

std::string train_config_json(const TrainConfig& config) { return train_to(config).dump(2); }

TrainConfig parse_train_config_json(std::string_view text) {
  return parse_guarded(text, "train config", [](const json& j) { return train_from(j); });
}

std::string train_report_json(const TrainReport& r) {
  json checks = json::array();
  for (const auto& c : r.checksums) {
    checks.push_back({{"group", std::string(to_string(c.group))},
                      {"trainable", c.trainable},
                      {"before", c.before},
                      {"after", c.after},
                      {"unchanged", c.before == c.after}});
  }
  json doc{{"stage", static_cast<int>(r.config.stage)},
           {"config", train_to(r.config)},
           {"model_config", config_to(r.model)},
           {"steps", r.losses.size()},
           {"initial_loss", r.initial_loss},
           {"final_loss", r.final_loss},
           {"initial_smoothed_loss", r.initial_smoothed},
           {"final_smoothed_loss", r.final_smoothed},
           {"smoothed_ratio", r.smoothed_ratio()},
           {"frozen_unchanged", r.frozen_unchanged()},
           {"checksums", checks},
           {"losses", r.losses}};
  return doc.dump(2);
}

std::string gradcheck_report_json(const GradcheckReport& r) {
  json entries = json::array();
  json per_set = json::object();
  for (const auto& e : r.entries) {
    entries.push_back({{"parameter", e.parameter},
                       {"group", std::string(to_string(e.group))},
                       {"elements", e.elements},
                       {"max_relative_error", e.relative_error},
                       {"passed", e.relative_error <= r.tolerance}});
    const std::string g(to_string(e.group));
    per_set[g] = std::max(per_set.value(g, 0.0), e.relative_error);
  }
  json doc{{"stage", static_cast<int>(r.stage)},
           {"tolerance", r.tolerance},
           {"max_relative_error", r.max_relative_error},
           {"passed", r.passed},
           {"sets", per_set},
           {"parameters", entries}};
  return doc.dump(2);
}

std::string checkpoint_json(const ModelState& s) {
  json params = json::array();
  for (const auto& p : s.params.parameters()) {
    params.push_back({{"name", p.name},
                      {"group", std::string(to_string(p.group))},
                      {"frozen", s.is_frozen(p.group)},
                      {"shape", p.value.shape()},
                      {"data", p.value.values()}});
  }
  json doc{{"schema_version", kCheckpointSchemaVersion},
           {"completed_stage", s.completed_stage},
           {"model_config", config_to(s.config)},
           {"rng", {{"seed", s.rng.seed}, {"counter", s.rng.counter}}},
           {"parameters", params}};
  return doc.dump();
}

ModelState parse_checkpoint_json(std::string_view text) {
  return parse_guarded(text, "checkpoint", [](const json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      throw ValidationError("checkpoint schema version " + std::to_string(version) +
                            ", expected " + std::to_string(kCheckpointSchemaVersion));
    }
    ModelState s;
    s.config = config_from(j.at("model_config"));
    s.completed_stage = j.at("completed_stage").get<int>();
    if (s.completed_stage < -1 || s.completed_stage > 2) {
      throw ValidationError("checkpoint completed_stage out of range");
    }
    s.rng.seed = j.at("rng").at("seed").get<std::uint64_t>();
    s.rng.counter = j.at("rng").at("counter").get<std::uint64_t>();

    const ParameterStore reference = init_parameters(s.config);
    for (const auto& p : j.at("parameters")) {
      const auto name = p.at("name").get<std::string>();
      Tensor value(p.at("shape").get<Shape>(), p.at("data").get<std::vector<double>>());
      const ParamGroup group = parse_param_group(p.at("group").get<std::string>());
      if (!reference.contains(name)) {
        throw ValidationError("checkpoint has unknown parameter '" + name + "'");
      }
      const auto& expected = reference.parameters()[reference.index(name)];
      if (expected.value.shape() != value.shape() || expected.group != group) {
        throw ValidationError("checkpoint parameter '" + name + "' does not match the model");
      }
      s.params.add(name, group, std::move(value));
    }
    if (s.params.parameters().size() != reference.parameters().size()) {
      throw ValidationError("checkpoint is missing parameters");
    }
    return s;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.put('\n');
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state) {
  write_text_file(path, checkpoint_json(state));
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw StateError("checkpoint not found: " + path.string());
  return parse_checkpoint_json(read_text_file(path));
}

}  // namespace freqbooth
