#include "insar/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "insar/config.hpp"
#include "insar/eval.hpp"
#include "insar/pipeline.hpp"
#include "insar/sim.hpp"
#include "insar/weights_io.hpp"

namespace insar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<fs::path> require_samples(const fs::path& root) {
    auto dirs = sim::list_sample_dirs(root);
    if (dirs.empty()) throw ParameterError("no sample directories (with manifest.json) under " + root.string());
    return dirs;
}

pipeline::ProgressCallback progress_printer(std::ostream& err, const std::string& stage) {
    return [&err, stage](const pipeline::EpochReport& r) {
        err << stage << " epoch=" << r.epoch << " loss=" << std::setprecision(8) << r.loss
            << " lr=" << r.learning_rate << std::endl;
    };
}

json history_json(const std::vector<double>& history, const pipeline::TrainingConfig& cfg) {
    json j;
    j["loss"] = history;
    j["learning_rate"] = json::array();
    for (int e = 0; e < cfg.epochs; ++e) j["learning_rate"].push_back(pipeline::learning_rate_at(cfg, e));
    return j;
}

struct Options {
    std::string config_path;
    // simulate
    int n = 20;
    int size = 256;
    std::optional<std::uint64_t> seed;
    std::string out;
    // training / labels / evaluation
    std::string data;
    std::string weights;
    std::string denoiser;
    std::string input;
    std::string report;
    std::optional<int> epochs;
    std::optional<int> patches;
};

RunConfig effective_config(const Options& o) {
    return o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
}

void apply_overrides(pipeline::TrainingConfig& t, const Options& o) {
    if (o.epochs) t.epochs = *o.epochs;
    if (o.patches) t.patches_per_image = *o.patches;
}

void cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = effective_config(o);
    const std::uint64_t seed = o.seed.value_or(cfg.seed);
    if (o.n < 1) throw ParameterError("--n must be >= 1");
    if (o.size < 1) throw ParameterError("--size must be >= 1");
    const fs::path root(o.out);
    for (int i = 0; i < o.n; ++i) {
        const auto spec = sim::random_scene(o.size, o.size, sim::child_seed(seed, static_cast<std::uint64_t>(i)), cfg.scene);
        char name[32];
        std::snprintf(name, sizeof name, "sample_%04d", i);
        sim::write_sample(root / name, sim::make_sample(spec));
        err << "simulate sample=" << i << " dir=" << (root / name).string() << std::endl;
    }
    out << "wrote " << o.n << " samples to " << root.string() << "\n";
}

void cmd_train_denoiser(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = effective_config(o);
    apply_overrides(cfg.denoiser, o);
    pipeline::TrainingData data;
    for (const auto& dir : require_samples(o.data))
        data.inputs.push_back(saturate_and_normalize(load_complex_raster(dir / "noisy.igrm")).shifted);
    const auto result = pipeline::train_network(pipeline::denoiser_role(), data, cfg.denoiser,
                                                progress_printer(err, "train-denoiser"));
    nn::save_weights(o.out, result.params);
    write_json(o.out + ".history.json", history_json(result.loss_history, cfg.denoiser));
    out << "denoiser weights written to " << o.out << "\n";
}

void cmd_prepare_labels(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = effective_config(o);
    const auto denoiser = nn::load_weights(o.weights, pipeline::denoiser_spec());
    std::vector<LabelField> labels;
    std::vector<LabelField> truths;
    for (const auto& dir : require_samples(o.data)) {
        const ComplexRaster noisy = load_complex_raster(dir / "noisy.igrm");
        const ComplexRaster denoised = pipeline::denoise_image(denoiser, noisy);
        save_raster(dir / "denoised.igrm", denoised);
        LabelField label = pipeline::prepare_labels(noisy, denoised, cfg.mrf);
        save_raster(dir / "label.rast", to_scalar(label));
        err << "prepare-labels dir=" << dir.string() << std::endl;
        truths.push_back(labels_from_scalar(load_scalar_raster(dir / "truth.rast")));
        labels.push_back(std::move(label));
    }
    const auto quality = eval::label_quality(labels, truths);
    write_json(fs::path(o.data) / "label_quality.json", eval::to_json(quality));
    out << "label quality vs ground truth: accuracy=" << quality.accuracy.value_or(-1)
        << " precision=" << quality.precision.value_or(-1) << " recall=" << quality.recall.value_or(-1) << "\n";
}

void cmd_train_classifier(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig cfg = effective_config(o);
    apply_overrides(cfg.classifier, o);
    pipeline::TrainingData data;
    for (const auto& dir : require_samples(o.data)) {
        if (!fs::exists(dir / "label.rast"))
            throw ParameterError(dir.string() + " has no label.rast; run prepare-labels first");
        data.inputs.push_back(saturate_and_normalize(load_complex_raster(dir / "noisy.igrm")).shifted);
        data.labels.push_back(labels_from_scalar(load_scalar_raster(dir / "label.rast")));
    }
    const auto role = pipeline::classifier_role(cfg.classifier_shape.separable_layers, cfg.classifier_shape.maps);
    const auto result = pipeline::train_network(role, data, cfg.classifier, progress_printer(err, "train-classifier"));
    nn::save_weights(o.out, result.params);
    write_json(o.out + ".history.json", history_json(result.loss_history, cfg.classifier));
    out << "classifier weights written to " << o.out << "\n";
}

void cmd_classify(const Options& o, std::ostream& out, std::ostream&) {
    const auto params = nn::load_weights(o.weights);
    const auto scores = pipeline::classify_image(params, load_complex_raster(o.input));
    save_raster(o.out, scores.values);
    out << "scores written to " << o.out << "\n";
}

void cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = effective_config(o);
    const auto classifier = nn::load_weights(o.weights);
    std::optional<nn::NetworkParams<float>> denoiser;
    if (!o.denoiser.empty()) denoiser = nn::load_weights(o.denoiser, pipeline::denoiser_spec());

    const auto dirs = require_samples(o.data);
    std::vector<sim::SimSample> samples;
    std::vector<ComplexRaster> denoised;
    for (const auto& dir : dirs) {
        samples.push_back(sim::read_sample(dir));
        if (cfg.evaluation.boxcar_reference == eval::BoxcarReference::Denoised) {
            if (denoiser)
                denoised.push_back(pipeline::denoise_image(*denoiser, samples.back().noisy));
            else if (fs::exists(dir / "denoised.igrm"))
                denoised.push_back(load_complex_raster(dir / "denoised.igrm"));
            else
                throw ParameterError(dir.string() + " has no denoised.igrm; pass --denoiser");
        }
        err << "evaluate load dir=" << dir.string() << std::endl;
    }
    std::vector<eval::EvalInput> inputs;
    for (std::size_t i = 0; i < samples.size(); ++i)
        inputs.push_back({&samples[i], denoised.empty() ? nullptr : &denoised[i]});

    const auto comparison = eval::compare_methods(inputs, classifier, cfg.evaluation);
    const fs::path report = o.report.empty() ? fs::path(o.data) / "report.json" : fs::path(o.report);
    write_json(report, eval::report_json(comparison, std::nullopt));
    fs::path table = report;
    table.replace_extension(".txt");
    fs::path timing = report;
    timing.replace_extension(".timings.json");
    const std::string text = eval::format_table(comparison);
    write_text(table, text);
    write_json(timing, eval::timing_json(comparison));
    out << text;
}

void cmd_export_png(const Options& o, std::ostream& out, std::ostream&) {
    export_phase_png(load_complex_raster(o.input), o.out);
    out << "phase image written to " << o.out << "\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"InSAR coherence classification toolkit"};
    app.require_subcommand(1);
    app.footer(config_reference());
    Options o;

    auto add_config = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON run config (see keys below)")->check(CLI::ExistingFile);
    };

    auto* simulate = app.add_subcommand("simulate", "generate simulated interferograms with ground truth");
    add_config(simulate);
    simulate->add_option("--n", o.n, "number of samples")->capture_default_str();
    simulate->add_option("--size", o.size, "image side in pixels")->capture_default_str();
    simulate->add_option("--seed", o.seed, "simulation seed (overrides config 'seed')");
    simulate->add_option("--out", o.out, "output directory")->required();

    auto* train_den = app.add_subcommand("train-denoiser", "train the denoising autoencoder on noisy samples");
    add_config(train_den);
    train_den->add_option("--data", o.data, "directory of sample directories")->required();
    train_den->add_option("--out", o.out, "output CNNW weight file")->required();
    train_den->add_option("--epochs", o.epochs, "override denoiser.epochs");
    train_den->add_option("--patches-per-image", o.patches, "override denoiser.patches_per_image");

    auto* labels = app.add_subcommand("prepare-labels", "denoise samples and derive MRF training labels");
    add_config(labels);
    labels->add_option("--data", o.data, "directory of sample directories")->required();
    labels->add_option("--weights", o.weights, "denoiser CNNW weights")->required()->check(CLI::ExistingFile);

    auto* train_clf = app.add_subcommand("train-classifier", "train the coherence classifier on prepared labels");
    add_config(train_clf);
    train_clf->add_option("--data", o.data, "directory of sample directories")->required();
    train_clf->add_option("--out", o.out, "output CNNW weight file")->required();
    train_clf->add_option("--epochs", o.epochs, "override classifier.epochs");
    train_clf->add_option("--patches-per-image", o.patches, "override classifier.patches_per_image");

    auto* classify = app.add_subcommand("classify", "score every pixel of an interferogram");
    classify->add_option("--input", o.input, "IGRM interferogram")->required()->check(CLI::ExistingFile);
    classify->add_option("--weights", o.weights, "classifier CNNW weights")->required()->check(CLI::ExistingFile);
    classify->add_option("--out", o.out, "output RAST score map")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score boxcar and classifier against ground truth");
    add_config(evaluate);
    evaluate->add_option("--test", o.data, "directory of test sample directories")->required();
    evaluate->add_option("--weights", o.weights, "classifier CNNW weights")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--denoiser", o.denoiser, "denoiser weights (else each sample's denoised.igrm)")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--report", o.report, "JSON report path (default <test>/report.json)");

    auto* png = app.add_subcommand("export-png", "render interferogram phase as a color PNG");
    png->add_option("--input", o.input, "IGRM interferogram")->required()->check(CLI::ExistingFile);
    png->add_option("--out", o.out, "output PNG path")->required();

    std::vector<std::string> argv_store{"insarcoh"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsageError;
    }

    try {
        if (*simulate) cmd_simulate(o, out, err);
        else if (*train_den) cmd_train_denoiser(o, out, err);
        else if (*labels) cmd_prepare_labels(o, out, err);
        else if (*train_clf) cmd_train_classifier(o, out, err);
        else if (*classify) cmd_classify(o, out, err);
        else if (*evaluate) cmd_evaluate(o, out, err);
        else if (*png) cmd_export_png(o, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumericError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kSuccess;
}

}  // namespace insar::cli
