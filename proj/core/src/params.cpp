#include "freqbooth/params.hpp"

#include <cmath>

#include "freqbooth/errors.hpp"
#include "freqbooth/rng.hpp"

namespace freqbooth {

std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::Encoder: return "encoder";
    case ParamGroup::Backbone: return "backbone";
    case ParamGroup::Identity: return "identity";
    case ParamGroup::Control: return "control";
  }
  return "encoder";
}

ParamGroup parse_param_group(std::string_view name) {
  if (name == "encoder") return ParamGroup::Encoder;
  if (name == "backbone") return ParamGroup::Backbone;
  if (name == "identity") return ParamGroup::Identity;
  if (name == "control") return ParamGroup::Control;
  throw ValidationError("unknown parameter group '" + std::string(name) + "'");
}

ParamGroup trainable_group(int stage) {
  switch (stage) {
    case 0: return ParamGroup::Backbone;
    case 1: return ParamGroup::Identity;
    case 2: return ParamGroup::Control;
    default: throw ValidationError("stage must be 0, 1 or 2, got " + std::to_string(stage));
  }
}

void ParameterStore::add(std::string name, ParamGroup group, Tensor value) {
  if (index_.contains(name)) throw ValidationError("duplicate parameter '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back(Parameter{std::move(name), group, std::move(value)});
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParameterStore::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw StateError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Tensor& ParameterStore::get(std::string_view name) const {
  return params_[index(name)].value;
}

Tensor& ParameterStore::mutable_value(std::string_view name) { return params_[index(name)].value; }

std::uint64_t ParameterStore::group_checksum(ParamGroup g) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    if (p.group != g) continue;
    for (char c : p.name) h = checksum_combine(h, static_cast<unsigned char>(c));
    h = checksum_combine(h, checksum(p.value));
  }
  return h;
}

std::size_t ParameterStore::group_size(ParamGroup g) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.group == g) n += p.value.size();
  return n;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

ParamBinding::ParamBinding(Tape& tape, const ParameterStore& store,
                           std::optional<ParamGroup> trainable)
    : store_(&store) {
  vars_.reserve(store.parameters().size());
  for (const auto& p : store.parameters()) {
    vars_.push_back(trainable && p.group == *trainable ? tape.leaf(p.value)
                                                       : tape.constant(p.value));
  }
}

std::string block_name(std::size_t block, std::string_view leaf) {
  return "block" + std::to_string(block) + "." + std::string(leaf);
}

namespace {

std::uint64_t name_stream(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Initializer {
 public:
  Initializer(ParameterStore& store, std::uint64_t seed) : store_(store), seed_(seed) {}

  void normal(const std::string& name, ParamGroup g, Shape shape, double stddev) {
    RngState rng{derive_seed(seed_, name_stream(name)), 0};
    Tensor t = gaussian(shape, rng);
    for (auto& v : t.data()) v *= stddev;
    store_.add(name, g, std::move(t));
  }
  // stddev 1/sqrt(fan_in)
  void fan_in(const std::string& name, ParamGroup g, std::size_t in, std::size_t out) {
    normal(name, g, {in, out}, 1.0 / std::sqrt(static_cast<double>(in)));
  }
  void zeros(const std::string& name, ParamGroup g, Shape shape) {
    store_.add(name, g, Tensor::zeros(std::move(shape)));
  }
  void add(const std::string& name, ParamGroup g, Tensor t) { store_.add(name, g, std::move(t)); }

 private:
  ParameterStore& store_;
  std::uint64_t seed_;
};

Tensor sinusoidal_positions(std::size_t count, std::size_t dim) {
  Tensor t({count, dim});
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double freq = std::pow(100.0, -static_cast<double>(k / 2 * 2) / static_cast<double>(dim));
      const double a = static_cast<double>(p) * freq;
      t(p, k) = 0.1 * (k % 2 == 0 ? std::sin(a) : std::cos(a));
    }
  }
  return t;
}

}  // namespace

ParameterStore init_parameters(const ModelConfig& c) {
  c.validate();
  ParameterStore store;
  Initializer init(store, c.init_seed);
  const std::size_t patch_dim = 3 * c.patch * c.patch;
  const std::size_t ref_dim = c.d_tok + c.latent_channels;
  const std::size_t D = c.d_model;

  init.fan_in("encoder.patch_embed", ParamGroup::Encoder, patch_dim, c.d_tok);
  init.add("encoder.pos_code", ParamGroup::Encoder, sinusoidal_positions(c.tokens(), c.d_tok));

  init.fan_in("in.weight", ParamGroup::Backbone, c.latent_channels, D);
  init.zeros("in.bias", ParamGroup::Backbone, {1, D});
  init.normal("pos_embed", ParamGroup::Backbone, {c.tokens(), D}, 0.1);
  for (std::size_t k = 0; k < c.blocks; ++k) {
    init.fan_in(block_name(k, "attn.w_q"), ParamGroup::Backbone, D, D);
    init.fan_in(block_name(k, "attn.w_k"), ParamGroup::Backbone, D, D);
    init.fan_in(block_name(k, "attn.w_v"), ParamGroup::Backbone, D, D);
    init.fan_in(block_name(k, "time"), ParamGroup::Backbone, c.time_dim, D);
    init.normal(block_name(k, "class"), ParamGroup::Backbone, {c.n_classes + 1, D}, 0.1);
    init.fan_in(block_name(k, "ff1.weight"), ParamGroup::Backbone, D, c.d_ff);
    init.zeros(block_name(k, "ff1.bias"), ParamGroup::Backbone, {1, c.d_ff});
    init.fan_in(block_name(k, "ff2.weight"), ParamGroup::Backbone, c.d_ff, D);
    init.zeros(block_name(k, "ff2.bias"), ParamGroup::Backbone, {1, D});
  }
  init.normal("out.weight", ParamGroup::Backbone, {D, c.latent_channels}, 0.01);
  init.zeros("out.bias", ParamGroup::Backbone, {1, c.latent_channels});

  init.normal("identity.queries", ParamGroup::Identity, {c.n_query, c.d_id}, 1.0);
  init.fan_in("identity.w_key", ParamGroup::Identity, ref_dim, c.d_id);
  init.fan_in("identity.w_value", ParamGroup::Identity, ref_dim, c.d_id);
  for (std::size_t k = 0; k < c.blocks; ++k) {
    init.fan_in(block_name(k, "identity_head"), ParamGroup::Identity, c.d_id, c.d_id);
    init.zeros(block_name(k, "attn.w_k_id"), ParamGroup::Identity, {c.d_id, D});
    init.zeros(block_name(k, "attn.w_v_id"), ParamGroup::Identity, {c.d_id, D});
  }

  for (std::size_t k = 0; k < c.blocks; ++k) {
    init.fan_in(block_name(k, "control.weight"), ParamGroup::Control, c.latent_channels, D);
    init.zeros(block_name(k, "control.gate"), ParamGroup::Control, {1, D});
  }
  return store;
}

}  // namespace freqbooth
