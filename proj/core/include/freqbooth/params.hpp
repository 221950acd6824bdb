#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "freqbooth/autodiff.hpp"
#include "freqbooth/model_config.hpp"
#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Which training stage owns a parameter. Encoder parameters are never trained.
enum class ParamGroup { Encoder, Backbone, Identity, Control };

std::string_view to_string(ParamGroup g);
ParamGroup parse_param_group(std::string_view name);
// Stage 0 trains Backbone, stage 1 Identity, stage 2 Control.
ParamGroup trainable_group(int stage);

struct Parameter {
  std::string name;
  ParamGroup group;
  Tensor value;
};

// Ordered, name-addressable parameter set. Order is insertion order and is
// what checkpoints, checksums and optimizers iterate over.
class ParameterStore {
 public:
  void add(std::string name, ParamGroup group, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& mutable_value(std::string_view name);
  std::size_t index(std::string_view name) const;

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }

  std::uint64_t group_checksum(ParamGroup g) const;
  std::size_t group_size(ParamGroup g) const;
  std::size_t total_size() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parameters placed on a tape. Members of `trainable` become gradient leaves,
// everything else a constant.
class ParamBinding {
 public:
  ParamBinding(Tape& tape, const ParameterStore& store, std::optional<ParamGroup> trainable);

  Tape::Var operator[](std::string_view name) const { return vars_[store_->index(name)]; }
  Tape::Var at(std::size_t i) const { return vars_[i]; }
  const ParameterStore& store() const { return *store_; }

 private:
  const ParameterStore* store_;
  std::vector<Tape::Var> vars_;
};

// Frozen encoder matrices, backbone, identity branch and control branch with
// their initialization policy: W_k_ID, W_v_ID and control gates start at zero.
ParameterStore init_parameters(const ModelConfig& config);

std::string block_name(std::size_t block, std::string_view leaf);

}  // namespace freqbooth
