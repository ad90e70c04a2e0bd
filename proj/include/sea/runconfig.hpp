#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sea/evalprobe.hpp"
#include "sea/trainer.hpp"
#include "sea/world.hpp"

namespace sea {

// Effective run configuration: world + training + model + augmentation +
// probe settings, addressed by flat dotted keys ("world.rows", "train.tau").
// Precedence: built-in defaults < SEA_SEED env < config file < --set flags.
// Unknown keys are hard errors.
struct RunConfig {
    WorldConfig world;
    TrainConfig train;
    nn::ModelConfig model;
    AugmentConfig aug;
    ProbeConfig probe;
};

// file_path empty = defaults only. overrides are "key=value" strings.
RunConfig parse_run_config(const std::string& file_path, const std::vector<std::string>& overrides);

// Canonical snapshot (sorted flat keys); parsing it back reproduces the run.
std::string run_config_to_json(const RunConfig& cfg);

void write_config_snapshot(const RunConfig& cfg, const std::string& out_dir);

}  // namespace sea
