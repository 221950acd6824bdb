#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "freqbooth/model_config.hpp"
#include "freqbooth/training.hpp"

namespace freqbooth {

inline constexpr int kCheckpointSchemaVersion = 1;

// All documents are JSON text with doubles written at round-trip precision.
std::string model_config_json(const ModelConfig& config);
ModelConfig parse_model_config_json(std::string_view text);

std::string train_config_json(const TrainConfig& config);
TrainConfig parse_train_config_json(std::string_view text);

// Training reports omit wall-clock time so they are reproducible byte for byte.
std::string train_report_json(const TrainReport& report);
std::string gradcheck_report_json(const GradcheckReport& report);

// Schema version, completed stage, model config, RNG state and every
// parameter with its group, frozen marker, shape and flat data.
std::string checkpoint_json(const ModelState& state);
// Throws ValidationError on schema mismatch or malformed content.
ModelState parse_checkpoint_json(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const ModelState& state);
// Throws StateError if the file does not exist.
ModelState load_checkpoint(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace freqbooth
