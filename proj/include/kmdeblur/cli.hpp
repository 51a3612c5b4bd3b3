// Command-line surface: `deblur`, `synth` and `eval` subcommands with
// flat key=value config files (unknown keys are errors) and JSON result
// manifests. Exit codes: 0 success, 2 config, 3 io, 4 numeric.

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kmdeblur/kmdeblur.hpp"

namespace kmdeblur::cli {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline json config_to_json(const SolverConfig& cfg) {
    return json{{"num_kernels", cfg.n_bases},
                {"kernel_size", cfg.kernel_size},
                {"lambda1", cfg.lambda1},
                {"lambda2", cfg.lambda2},
                {"lambda3", cfg.lambda3_init},
                {"lambda3_decay", cfg.lambda3_decay},
                {"epsilon", cfg.epsilon},
                {"max_iters", cfg.max_outer_iters},
                {"max_cg_iters", cfg.max_cg_iters},
                {"seed", cfg.rng_seed},
                {"variant", variant_name(cfg.variant)},
                {"edge_taper", cfg.edge_taper}};
}

inline json quality_to_json(const QualityReport& q) {
    json j{{"rmse", q.rmse}, {"width", q.width}, {"height", q.height}};
    if (q.psnr_paper) {
        j["psnr_paper"] = *q.psnr_paper;
        j["psnr_db"] = *q.psnr_db;
    } else {
        j["psnr_paper"] = nullptr;
        j["psnr_db"] = nullptr;
        j["psnr_undefined"] = "zero MSE";
    }
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

/// Loads a clean image: a known procedural name or a file path.
inline MultiChannelImage load_clean(const std::string& source, int width, int height) {
    if (source == "checkerboard" || source == "disks" || source == "gratings") {
        return make_gray(procedural_image(source, width, height));
    }
    return load_image(source);
}

struct DeblurOptions {
    std::vector<std::string> inputs;
    std::string output_dir = ".";
    std::string variant = "center";
    std::string truth;
    int jobs = 1;
    SolverConfig cfg;
};

inline int run_one_deblur(const DeblurOptions& opt, const std::string& input,
                          const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    MultiChannelImage blurred = load_image(input);
    const double load_s = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    DeblurResult result = deblur(blurred, opt.cfg);
    const double deblur_s = seconds_since(t1);

    const auto t2 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    const std::string recovered_path = (out_dir / "recovered.png").string();
    const std::string heatmap_path = (out_dir / "kernel.png").string();
    const std::string kernel_path = (out_dir / "kernel.txt").string();
    const std::string trace_path = (out_dir / "trace.csv").string();
    const std::string manifest_path = (out_dir / "manifest.json").string();
    save_image(recovered_path, result.latent);
    write_kernel_heatmap_png(heatmap_path, result.kernel);
    write_kernel_text_file(kernel_path, result.kernel);
    write_trace_csv_file(trace_path, result.trace);

    json manifest{{"input", input},
                  {"config", config_to_json(opt.cfg)},
                  {"seed", opt.cfg.rng_seed},
                  {"termination", termination_name(result.termination)},
                  {"iterations", result.trace.size()},
                  {"outputs",
                   {{"recovered", recovered_path},
                    {"kernel_heatmap", heatmap_path},
                    {"kernel_text", kernel_path},
                    {"trace_csv", trace_path}}}};
    if (!opt.truth.empty()) {
        MultiChannelImage truth = load_image(opt.truth);
        manifest["quality"] = {
            {"recovered", quality_to_json(quality_report(truth, clamp_unit(result.latent)))},
            {"blurred", quality_to_json(quality_report(truth, blurred))}};
    }
    manifest["timings"] = {{"load_s", load_s},
                           {"deblur_s", deblur_s},
                           {"write_s", seconds_since(t2)},
                           {"total_s", seconds_since(t0)}};
    write_json_file(manifest_path, manifest);
    return kExitOk;
}

inline int run_deblur(const DeblurOptions& opt_in) {
    DeblurOptions opt = opt_in;
    opt.cfg.variant = parse_variant(opt.variant);
    validate_config(opt.cfg);
    if (opt.inputs.empty()) throw std::invalid_argument("at least one --input is required");

    if (opt.inputs.size() == 1) {
        return run_one_deblur(opt, opt.inputs.front(), fs::path(opt.output_dir));
    }

    // batch mode: one subdirectory per input, optionally concurrent
    std::vector<std::exception_ptr> errors(opt.inputs.size());
    std::vector<std::thread> workers;
    std::size_t next = 0;
    std::mutex next_mutex;
    const int jobs = std::max(1, opt.jobs);
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= opt.inputs.size()) return;
                i = next++;
            }
            try {
                const fs::path sub =
                    fs::path(opt.output_dir) / fs::path(opt.inputs[i]).stem().string();
                run_one_deblur(opt, opt.inputs[i], sub);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    for (int j = 0; j < jobs; ++j) workers.emplace_back(worker);
    for (std::thread& w : workers) w.join();
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return kExitOk;
}

struct SynthOptions {
    std::string scenario;
    std::string spec_file;
    std::string kernel;  // "delta" or kernel text path
    std::string image = "disks";
    std::string output_dir = ".";
    int width = 128;
    int height = 128;
    double noise = -1.0;  // <0: keep scenario/spec value
    std::uint64_t seed = 0;
    bool seed_given = false;
};

inline DegradationSpec spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("spec file '" + path + "': " + e.what());
    }
    DegradationSpec spec;
    spec.name = j.value("name", fs::path(path).stem().string());
    spec.kernel_size = j.value("kernel_size", 15);
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.seed = j.value("seed", 0);
    if (j.contains("kernel_text")) {
        spec.kernel = read_kernel_text_file(j.at("kernel_text").get<std::string>());
    } else {
        MixtureParams params;
        params.variant = parse_variant(j.value("variant", "center"));
        for (const json& jb : j.at("bases")) {
            BaseKernelParams b;
            b.sigma_x_sq = jb.at("sigma_x_sq").get<double>();
            b.sigma_y_sq = jb.value("sigma_y_sq", b.sigma_x_sq);
            b.mu_x = jb.value("mu_x", 0.0);
            b.mu_y = jb.value("mu_y", 0.0);
            b.theta = jb.value("theta", 0.0);
            params.bases.push_back(b);
        }
        spec.kernel = params;
    }
    return spec;
}

inline int run_synth(const SynthOptions& opt) {
    DegradationSpec spec;
    if (!opt.scenario.empty()) {
        spec = find_scenario(opt.scenario);
    } else if (!opt.spec_file.empty()) {
        spec = spec_from_json_file(opt.spec_file);
    } else if (!opt.kernel.empty()) {
        spec.name = "custom";
    } else {
        throw std::invalid_argument("one of --scenario, --spec or --kernel is required");
    }
    if (!opt.kernel.empty()) {
        if (opt.kernel == "delta") {
            KernelGrid delta;
            delta.size = 1;
            delta.weights = {1.0};
            spec.kernel = delta;
        } else {
            spec.kernel = read_kernel_text_file(opt.kernel);
        }
    }
    if (opt.noise >= 0.0) spec.noise_sigma = opt.noise;
    if (opt.seed_given) spec.seed = opt.seed;

    MultiChannelImage clean = load_clean(opt.image, opt.width, opt.height);
    DegradedPair pair = degrade(clean, spec);

    fs::create_directories(opt.output_dir);
    const fs::path dir(opt.output_dir);
    const std::string clean_path = (dir / "clean.png").string();
    const std::string blurred_path = (dir / "blurred.png").string();
    const std::string kernel_path = (dir / "kernel.txt").string();
    const std::string manifest_path = (dir / "manifest.json").string();
    save_image(clean_path, clean);
    save_image(blurred_path, pair.blurred);
    write_kernel_text_file(kernel_path, pair.kernel);

    json manifest{{"scenario", spec.name},
                  {"seed", spec.seed},
                  {"noise_sigma", spec.noise_sigma},
                  {"image", opt.image},
                  {"kernel_size", pair.kernel.size},
                  {"outputs",
                   {{"clean", clean_path},
                    {"blurred", blurred_path},
                    {"kernel_text", kernel_path}}}};
    write_json_file(manifest_path, manifest);
    return kExitOk;
}

struct EvalOptions {
    std::string reference;
    std::string recovered;
    std::string output;
};

inline int run_eval(const EvalOptions& opt) {
    MultiChannelImage reference = load_image(opt.reference);
    MultiChannelImage recovered = load_image(opt.recovered);
    json report{{"reference", opt.reference},
                {"recovered", opt.recovered},
                {"mean", quality_to_json(quality_report(reference, recovered))}};
    if (reference.channels.size() > 1) {
        json channels = json::array();
        for (std::size_t ch = 0; ch < reference.channels.size(); ++ch) {
            channels.push_back(
                quality_to_json(quality_report(reference.channels[ch], recovered.channels[ch])));
        }
        report["channels"] = channels;
    }
    std::cout << report.dump(2) << std::endl;
    if (!opt.output.empty()) write_json_file(opt.output, report);
    return kExitOk;
}

inline void add_config_option(CLI::App* sub) {
    sub->set_config("--config", "", "Flat key=value config file; flags override file values");
    sub->allow_config_extras(false);
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Blind image deblurring with a mixture of structure-enhanced Gaussian kernels"};
    app.require_subcommand(1);

    detail::DeblurOptions dopt;
    dopt.cfg.edge_taper = true;
    CLI::App* dsub = app.add_subcommand("deblur", "Recover a latent image and blur kernel");
    dsub->add_option("--input", dopt.inputs, "Input image(s), PNG or PGM")->required();
    dsub->add_option("--output-dir", dopt.output_dir, "Directory for result artifacts");
    dsub->add_option("--kernel-size", dopt.cfg.kernel_size, "Blur kernel size h (odd)");
    dsub->add_option("--num-kernels", dopt.cfg.n_bases, "Number of base kernels N");
    dsub->add_option("--lambda1", dopt.cfg.lambda1, "Kernel prior weight");
    dsub->add_option("--lambda2", dopt.cfg.lambda2, "Covariance prior weight");
    dsub->add_option("--lambda3", dopt.cfg.lambda3_init, "Initial image prior weight");
    dsub->add_option("--lambda3-decay", dopt.cfg.lambda3_decay, "Per-iteration lambda3 divisor");
    dsub->add_option("--epsilon", dopt.cfg.epsilon, "Relative-change convergence threshold");
    dsub->add_option("--max-iters", dopt.cfg.max_outer_iters, "Outer iteration cap");
    dsub->add_option("--max-cg-iters", dopt.cfg.max_cg_iters, "CG iteration cap per kernel step");
    dsub->add_option("--seed", dopt.cfg.rng_seed, "RNG seed for parameter initialization");
    dsub->add_option("--variant", dopt.variant,
                     "Base kernel structure: simple|scale|center|rotation");
    dsub->add_flag("--edge-taper,!--no-edge-taper", dopt.cfg.edge_taper,
                   "Cosine border taper before spectral solves");
    dsub->add_option("--truth", dopt.truth, "Ground-truth image for quality reporting");
    dsub->add_option("--jobs", dopt.jobs, "Concurrent deblur jobs in batch mode");
    detail::add_config_option(dsub);

    detail::SynthOptions sopt;
    CLI::App* ssub = app.add_subcommand("synth", "Generate a synthetic blurred/clean pair");
    ssub->add_option("--scenario", sopt.scenario, "Preset scenario name");
    ssub->add_option("--spec", sopt.spec_file, "JSON degradation spec file");
    ssub->add_option("--kernel", sopt.kernel, "'delta' or kernel matrix text file");
    ssub->add_option("--image", sopt.image,
                     "Clean source: checkerboard|disks|gratings or an image path");
    ssub->add_option("--width", sopt.width, "Procedural image width");
    ssub->add_option("--height", sopt.height, "Procedural image height");
    ssub->add_option("--noise", sopt.noise, "Noise sigma override on the [0,1] scale");
    ssub->add_option("--seed", sopt.seed, "Noise seed override")
        ->each([&sopt](const std::string&) { sopt.seed_given = true; });
    ssub->add_option("--output-dir", sopt.output_dir, "Directory for the generated set");
    detail::add_config_option(ssub);

    detail::EvalOptions eopt;
    CLI::App* esub = app.add_subcommand("eval", "Score a recovered image against a reference");
    esub->add_option("--reference", eopt.reference, "Ground-truth image")->required();
    esub->add_option("--recovered", eopt.recovered, "Image to score")->required();
    esub->add_option("--output", eopt.output, "Optional report JSON path");
    detail::add_config_option(esub);

    try {
        app.parse(argc, argv);
        if (dsub->parsed()) return detail::run_deblur(dopt);
        if (ssub->parsed()) return detail::run_synth(sopt);
        if (esub->parsed()) return detail::run_eval(eopt);
        return kExitConfig;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error [config]: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error [config]: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error [io]: " << e.what() << std::endl;
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "error [numeric]: " << e.what() << std::endl;
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error [numeric]: " << e.what() << std::endl;
        return kExitNumeric;
    }
}

}  // namespace kmdeblur::cli
