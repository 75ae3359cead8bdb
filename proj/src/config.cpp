#include "insar/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace insar {

using nlohmann::json;

namespace {

// One table per section: key -> (reader, writer, description).
template <typename T>
struct Field {
    std::function<void(T&, const json&)> read;
    std::function<json(const T&)> write;
    std::string help;
};

template <typename T>
using FieldTable = std::map<std::string, Field<T>>;

template <typename T, typename V>
Field<T> field(V T::*member, std::string help) {
    return {[member](T& t, const json& j) { t.*member = j.get<V>(); },
            [member](const T& t) { return json(t.*member); }, std::move(help)};
}

template <typename T>
void read_section(T& target, const json& j, const FieldTable<T>& table, const std::string& section) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
        try {
            it->second.read(target, value);
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + section + "." + key + "': " + e.what());
        }
    }
}

template <typename T>
json write_section(const T& source, const FieldTable<T>& table) {
    json j = json::object();
    for (const auto& [key, f] : table) j[key] = f.write(source);
    return j;
}

const FieldTable<pipeline::TrainingConfig>& training_fields() {
    using C = pipeline::TrainingConfig;
    static const FieldTable<C> t = {
        {"patches_per_image", field(&C::patches_per_image, "random patches drawn per training image")},
        {"patch_size", field(&C::patch_size, "square patch side in pixels (denoiser: multiple of 3)")},
        {"batch_size", field(&C::batch_size, "patches per Adam step")},
        {"initial_lr", field(&C::initial_lr, "learning rate of the first epochs")},
        {"lr_halving_period", field(&C::lr_halving_period, "epochs between learning-rate halvings")},
        {"epochs", field(&C::epochs, "training epochs")},
        {"seed", field(&C::seed, "seed for init, patch sampling and shuffling")},
    };
    return t;
}

const FieldTable<ClassifierShape>& shape_fields() {
    using C = ClassifierShape;
    static const FieldTable<C> t = {
        {"separable_layers", field(&C::separable_layers, "separable 3x3 ReLU layers before the sigmoid head")},
        {"maps", field(&C::maps, "feature maps per separable layer")},
    };
    return t;
}

const FieldTable<MrfConfig>& mrf_fields() {
    static const FieldTable<MrfConfig> t = {
        {"alpha", field(&MrfConfig::alpha, "smoothness weight of the label energy")},
        {"init_threshold", field(&MrfConfig::init_threshold, "raw coherence above which a pixel starts coherent")},
    };
    return t;
}

const FieldTable<sim::SceneRanges>& scene_fields() {
    using C = sim::SceneRanges;
    static const FieldTable<C> t = {
        {"min_bubbles", field(&C::min_bubbles, "Gaussian deformation bubbles per scene (min)")},
        {"max_bubbles", field(&C::max_bubbles, "Gaussian deformation bubbles per scene (max)")},
        {"min_sigma", field(&C::min_sigma, "bubble sigma in pixels (min)")},
        {"max_sigma", field(&C::max_sigma, "bubble sigma in pixels (max)")},
        {"min_amplitude", field(&C::min_amplitude, "bubble peak phase in radians (min)")},
        {"max_amplitude", field(&C::max_amplitude, "bubble peak phase in radians (max)")},
        {"min_roads", field(&C::min_roads, "roads per scene (min)")},
        {"max_roads", field(&C::max_roads, "roads per scene (max)")},
        {"min_road_width", field(&C::min_road_width, "road width in pixels (min)")},
        {"max_road_width", field(&C::max_road_width, "road width in pixels (max)")},
        {"min_buildings", field(&C::min_buildings, "buildings per scene (min)")},
        {"max_buildings", field(&C::max_buildings, "buildings per scene (max)")},
        {"min_building_size", field(&C::min_building_size, "building side in pixels (min)")},
        {"max_building_size", field(&C::max_building_size, "building side in pixels (max)")},
        {"min_incoherent_fraction", field(&C::min_incoherent_fraction, "image area covered by incoherent blobs (min)")},
        {"max_incoherent_fraction", field(&C::max_incoherent_fraction, "image area covered by incoherent blobs (max)")},
        {"min_blob_radius", field(&C::min_blob_radius, "blob radius as a fraction of image size (min)")},
        {"max_blob_radius", field(&C::max_blob_radius, "blob radius as a fraction of image size (max)")},
        {"min_incoherent_gamma", field(&C::min_incoherent_gamma, "true coherence inside blobs (min)")},
        {"max_incoherent_gamma", field(&C::max_incoherent_gamma, "true coherence inside blobs (max)")},
        {"min_background_gamma", field(&C::min_background_gamma, "true coherence outside blobs (min)")},
        {"max_background_gamma", field(&C::max_background_gamma, "true coherence outside blobs (max)")},
    };
    return t;
}

const FieldTable<eval::EvalConfig>& eval_fields() {
    using C = eval::EvalConfig;
    static const FieldTable<C> t = {
        {"boxcar_window", field(&C::boxcar_window, "boxcar coherence window (odd)")},
        {"threshold", field(&C::threshold, "score threshold for the coherent class")},
        {"boxcar_reference",
         {[](C& c, const json& j) {
              const auto s = j.get<std::string>();
              if (s == "denoised")
                  c.boxcar_reference = eval::BoxcarReference::Denoised;
              else if (s == "clean")
                  c.boxcar_reference = eval::BoxcarReference::Clean;
              else
                  throw ConfigError("evaluation.boxcar_reference must be \"denoised\" or \"clean\"");
          },
          [](const C& c) {
              return json(c.boxcar_reference == eval::BoxcarReference::Denoised ? "denoised" : "clean");
          },
          "image the noisy input is correlated with for the boxcar baseline: \"denoised\" or \"clean\""}},
    };
    return t;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") {
            if (!value.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "denoiser") {
            read_section(cfg.denoiser, value, training_fields(), key);
        } else if (key == "classifier") {
            read_section(cfg.classifier, value, training_fields(), key);
        } else if (key == "classifier_shape") {
            read_section(cfg.classifier_shape, value, shape_fields(), key);
        } else if (key == "mrf") {
            read_section(cfg.mrf, value, mrf_fields(), key);
        } else if (key == "scene") {
            read_section(cfg.scene, value, scene_fields(), key);
        } else if (key == "evaluation") {
            read_section(cfg.evaluation, value, eval_fields(), key);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    try {
        pipeline::validate(cfg.denoiser, pipeline::Role::Denoiser);
        pipeline::validate(cfg.classifier, pipeline::Role::Classifier);
        validate(cfg.mrf);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    if (cfg.classifier_shape.separable_layers < 1 || cfg.classifier_shape.maps < 1)
        throw ConfigError("classifier_shape values must be >= 1");
    if (cfg.evaluation.boxcar_window < 1 || cfg.evaluation.boxcar_window % 2 == 0)
        throw ConfigError("evaluation.boxcar_window must be odd and >= 1");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
    return {{"seed", cfg.seed},
            {"denoiser", write_section(cfg.denoiser, training_fields())},
            {"classifier", write_section(cfg.classifier, training_fields())},
            {"classifier_shape", write_section(cfg.classifier_shape, shape_fields())},
            {"mrf", write_section(cfg.mrf, mrf_fields())},
            {"scene", write_section(cfg.scene, scene_fields())},
            {"evaluation", write_section(cfg.evaluation, eval_fields())}};
}

std::string config_reference() {
    const RunConfig defaults;
    std::ostringstream out;
    out << "Config file keys (JSON; omitted keys keep these defaults, unknown keys are errors):\n";
    out << "  seed = " << defaults.seed << "    simulation seed\n";
    auto section = [&out](const std::string& name, const auto& table, const auto& value) {
        out << "  " << name << ":\n";
        for (const auto& [key, f] : table)
            out << "    " << key << " = " << f.write(value).dump() << "    " << f.help << "\n";
    };
    section("denoiser", training_fields(), defaults.denoiser);
    section("classifier", training_fields(), defaults.classifier);
    section("classifier_shape", shape_fields(), defaults.classifier_shape);
    section("mrf", mrf_fields(), defaults.mrf);
    section("scene", scene_fields(), defaults.scene);
    section("evaluation", eval_fields(), defaults.evaluation);
    return out.str();
}

}  // namespace insar
