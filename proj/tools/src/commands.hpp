#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqbooth/model_config.hpp"

namespace freqbooth::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kGradcheckFailed = 1,
  kUsage = 2,
  kMissingPrerequisite = 3,
  kNumerical = 4,
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out_dir = "freqbooth_out";
  std::string checkpoint_dir;  // empty -> <out>/checkpoints
  std::string preset = "toy";
};

// Effective paths and model configuration shared by every command.
struct Context {
  GlobalOptions global;
  std::filesystem::path out;
  std::filesystem::path checkpoints;
  ModelConfig model;

  static Context resolve(const GlobalOptions& global);
  json echo() const;
  // Writes <out>/<command>.config.json.
  void write_echo(const std::string& command, const json& options) const;
};

struct DataOptions {
  std::size_t n_identities = 16;
  std::optional<std::size_t> n_contexts;  // default min(4, preset context ids)
  std::size_t train_size = 512;
  std::size_t test_size = 64;
  std::uint64_t data_seed = 0;
};

struct TrainOptions {
  int stage = 0;
  std::optional<std::size_t> steps;
  std::optional<double> learning_rate;
  std::size_t batch_size = 4;
  double lambda = 0.4;
  std::string mask = "low";
  std::string optimizer;  // adam|adamw; empty -> preset default
  std::uint64_t data_seed = 0;
};

struct SampleOptions {
  std::string ref;
  std::optional<std::size_t> text_id;
  double lambda = 0.4;
  double guidance = 3.0;
  std::string mask = "none";
  std::size_t steps = 20;
  std::size_t n = 1;
};

struct FilterOptions {
  std::string input;
  std::string mask;
  std::string out;
};

struct SweepOptions {
  std::string values = "0,0.4,1.0";
  std::size_t trials = 20;
  double guidance = 3.0;
  std::size_t steps = 20;
  std::uint64_t data_seed = 0;
};

struct AblateOptions {
  std::size_t trials = 8;
  std::size_t train_steps = 1000;
  double guidance = 3.0;
  std::size_t steps = 20;
  std::uint64_t data_seed = 0;
};

struct GradcheckOptionsCli {
  std::string stage = "all";
  std::string fault = "none";
};

inline constexpr std::size_t kDefaultStageSteps[] = {1500, 2000, 1000};

int cmd_gen_data(const Context& ctx, const DataOptions& o);
int cmd_train(const Context& ctx, const TrainOptions& o);
int cmd_sample(const Context& ctx, const SampleOptions& o);
int cmd_filter(const Context& ctx, const FilterOptions& o);
int cmd_sweep_lambda(const Context& ctx, const SweepOptions& o);
int cmd_ablate_masks(const Context& ctx, const AblateOptions& o);
int cmd_gradcheck(const Context& ctx, const GradcheckOptionsCli& o);

// Training seed for a stage; shared by train and ablate-masks so both
// produce identical checkpoints.
std::uint64_t stage_seed(std::uint64_t seed, int stage);
std::filesystem::path stage_checkpoint(const Context& ctx, int stage, const std::string& mask);

}  // namespace freqbooth::cli
