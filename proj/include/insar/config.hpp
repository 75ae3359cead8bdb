#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "insar/eval.hpp"
#include "insar/mrf.hpp"
#include "insar/pipeline.hpp"
#include "insar/sim.hpp"

namespace insar {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct ClassifierShape {
    int separable_layers = 4;
    int maps = 16;
};

/// Everything a pipeline run depends on. Missing keys keep their defaults;
/// unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 7;  // simulation seed
    pipeline::TrainingConfig denoiser = pipeline::default_denoiser_config();
    pipeline::TrainingConfig classifier = pipeline::default_classifier_config();
    ClassifierShape classifier_shape;
    MrfConfig mrf;
    sim::SceneRanges scene;
    eval::EvalConfig evaluation;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Human-readable list of every key with its default, for --help.
std::string config_reference();

}  // namespace insar
