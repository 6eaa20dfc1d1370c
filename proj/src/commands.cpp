#include "swt/commands.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include <json.hpp>

#include "swt/gradcheck.hpp"

namespace swt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string scene_stem(size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%05zu", index);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
}

}  // namespace

void write_dataset_dir(const std::string& dir, const std::vector<SyntheticScene>& scenes,
                       int num_classes, const std::string& domain,
                       const std::string& config_echo) {
    ensure_dir(dir);
    json manifest;
    manifest["format"] = "swt-dataset";
    manifest["version"] = 1;
    manifest["num_scenes"] = scenes.size();
    manifest["num_classes"] = num_classes;
    manifest["domain"] = domain;
    json entries = json::array();
    for (size_t i = 0; i < scenes.size(); ++i) {
        const SyntheticScene& s = scenes[i];
        const std::string stem = scene_stem(i);
        write_swt1(dir + "/" + stem + ".image.swt1", to_tensor(s.image));
        write_swt1(dir + "/" + stem + ".labels.swt1",
                   labels_to_tensor(s.labels, s.image.height, s.image.width));
        json e;
        e["image"] = stem + ".image.swt1";
        e["labels"] = stem + ".labels.swt1";
        e["content_seed"] = s.content_seed;
        e["style"] = {{"hue_rotation", s.style.hue_rotation},
                      {"brightness_scale", s.style.brightness_scale},
                      {"blur_sigma", s.style.blur_sigma}};
        entries.push_back(e);
    }
    manifest["scenes"] = entries;
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
    if (!config_echo.empty()) {
        write_text_file(dir + "/config.resolved.json", config_echo);
    }
}

LoadedDataset load_dataset_dir(const std::string& dir) {
    json manifest;
    try {
        manifest = json::parse(read_text_file(dir + "/manifest.json"));
    } catch (const json::exception& e) {
        throw IoError("dataset manifest parse error: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "swt-dataset") {
        throw IoError("not a dataset directory: " + dir);
    }
    LoadedDataset out;
    out.num_classes = manifest.at("num_classes").get<int>();
    out.domain = manifest.value("domain", "");
    for (const auto& e : manifest.at("scenes")) {
        SyntheticScene s;
        s.image = feature_map_from_tensor(read_swt1(dir + "/" + e.at("image").get<std::string>()));
        s.labels = labels_from_tensor(read_swt1(dir + "/" + e.at("labels").get<std::string>()));
        s.content_seed = e.at("content_seed").get<uint64_t>();
        const auto& st = e.at("style");
        s.style.hue_rotation = st.at("hue_rotation").get<double>();
        s.style.brightness_scale = st.at("brightness_scale").get<double>();
        s.style.blur_sigma = st.at("blur_sigma").get<double>();
        for (int label : s.labels) {
            if (label < 0 || label >= out.num_classes) {
                throw IoError("dataset label out of range in " + dir);
            }
        }
        out.scenes.push_back(std::move(s));
    }
    return out;
}

int cmd_gen_data(const std::string& config_path, const std::string& domain,
                 const std::string& out_dir) {
    if (domain != "source" && domain != "target") {
        throw ConfigError("gen-data: --domain must be 'source' or 'target'");
    }
    const RunConfig cfg = load_run_config(config_path);
    DatasetConfig dcfg = cfg.dataset;
    if (domain == "source") {
        dcfg.style = cfg.source_style;
        dcfg.seed = cfg.seed;
    } else {
        dcfg.style = cfg.target_style;
        dcfg.num_scenes = cfg.eval_scenes;
        dcfg.seed = mix_seed(cfg.seed, 0x7a96e7);  // held-out content stream
    }
    const std::vector<SyntheticScene> scenes = generate_dataset(dcfg);
    write_dataset_dir(out_dir, scenes, dcfg.num_classes, domain, dump_run_config(cfg));
    std::cout << "wrote " << scenes.size() << " scenes to " << out_dir << "\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& variant,
              const std::string& data_dir, const std::string& out_dir) {
    const RunConfig cfg = load_run_config(config_path);
    const TrainVariant tv = train_variant_from_string(variant);
    const LoadedDataset data = load_dataset_dir(data_dir);
    if (data.num_classes != cfg.dataset.num_classes) {
        throw ConfigError("train: dataset class count does not match config");
    }

    TrainConfig tcfg = cfg.train;
    tcfg.variant = tv;
    ensure_dir(out_dir);

    const TrainResult result = train(tcfg, data.scenes, cfg.photometric, cfg.cluster);

    write_training_log_csv(out_dir + "/train_log.csv", result.log);
    write_text_file(out_dir + "/config.resolved.json", dump_run_config(cfg));

    std::vector<std::string> mask_files;
    if (result.state.phase == Phase::phase2) {
        for (int layer = 0; layer < 3; ++layer) {
            const std::string name = "mask_layer" + std::to_string(layer + 1) + ".csv";
            write_mask_csv(out_dir + "/" + name, result.state.layer_masks[layer]);
            mask_files.push_back(name);
        }
    }
    if (result.sensitivity_ran) {
        for (int layer = 0; layer < 3; ++layer) {
            write_matrix_csv(out_dir + "/v_layer" + std::to_string(layer + 1) + ".csv",
                             result.variance_matrices[layer]);
        }
    }
    write_checkpoint(out_dir + "/checkpoint", result.state, dump_run_config(cfg), mask_files);

    json metrics;
    metrics["variant"] = variant;
    metrics["masked_cov_phase2_start"] = result.masked_cov_phase2_start;
    metrics["masked_cov_final"] = result.masked_cov_final;
    metrics["final_task_loss"] = result.log.empty() ? 0.0 : result.log.back().task_loss;
    write_text_file(out_dir + "/train_metrics.json", metrics.dump(2) + "\n");

    std::cout << "trained " << variant << " for " << tcfg.total_iterations
              << " iterations; checkpoint at " << out_dir << "/checkpoint.swt1\n";
    return kExitOk;
}

std::string dump_metrics(const Metrics& m) {
    json root;
    root["miou"] = m.miou;
    json per_class = json::array();
    for (double v : m.per_class_iou) {
        if (std::isnan(v)) {
            per_class.push_back(nullptr);
        } else {
            per_class.push_back(v);
        }
    }
    root["per_class_iou"] = per_class;
    root["gt_pixels"] = m.gt_pixels;
    return root.dump(2) + "\n";
}

Metrics parse_metrics(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError("metrics parse error: " + std::string(e.what()));
    }
    for (const auto& [key, _] : root.items()) {
        if (key != "miou" && key != "per_class_iou" && key != "gt_pixels") {
            throw IoError("metrics: unknown key '" + key + "'");
        }
    }
    Metrics m;
    m.miou = root.at("miou").get<double>();
    for (const auto& v : root.at("per_class_iou")) {
        m.per_class_iou.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                              : v.get<double>());
    }
    for (const auto& v : root.at("gt_pixels")) m.gt_pixels.push_back(v.get<long>());
    if (m.per_class_iou.size() != m.gt_pixels.size()) {
        throw IoError("metrics: class arrays disagree");
    }
    return m;
}

int cmd_eval(const std::string& checkpoint_prefix, const std::string& data_dir,
             const std::string& out_path) {
    const TrainState state = read_checkpoint(checkpoint_prefix);
    const LoadedDataset data = load_dataset_dir(data_dir);
    if (data.num_classes != state.arch.num_classes) {
        throw ConfigError("eval: checkpoint and dataset class counts disagree");
    }
    const EvalResult result = evaluate_miou(state, data.scenes);

    Metrics m;
    m.miou = result.miou;
    m.per_class_iou = result.per_class_iou;
    m.gt_pixels = result.gt_pixels;
    const std::string text = dump_metrics(m);
    if (!out_path.empty()) write_text_file(out_path, text);
    std::cout << text;
    return kExitOk;
}

int cmd_stats(const std::string& config_path, const std::string& checkpoint_prefix,
              const std::string& data_dir, const std::string& out_dir) {
    const RunConfig cfg = load_run_config(config_path);
    const TrainState state = read_checkpoint(checkpoint_prefix);
    const LoadedDataset data = load_dataset_dir(data_dir);
    ensure_dir(out_dir);

    const SensitivityPassResult pass =
        run_sensitivity_pass(state, data.scenes, cfg.photometric, cfg.cluster);
    for (int layer = 0; layer < 3; ++layer) {
        write_matrix_csv(out_dir + "/v_layer" + std::to_string(layer + 1) + ".csv",
                         pass.stats[layer].variance_matrix());
    }
    write_text_file(out_dir + "/config.resolved.json", dump_run_config(cfg));
    std::cout << "wrote variance matrices to " << out_dir << "\n";
    return kExitOk;
}

int cmd_mask(const std::string& config_path, const std::string& stats_dir,
             const std::string& out_dir) {
    const RunConfig cfg = load_run_config(config_path);
    ensure_dir(out_dir);
    for (int layer = 0; layer < 3; ++layer) {
        const std::string v_path =
            stats_dir + "/v_layer" + std::to_string(layer + 1) + ".csv";
        const Matrix v = read_matrix_csv(v_path);
        if (v.rows() != v.cols()) {
            throw ConfigError("mask: variance matrix must be square: " + v_path);
        }
        SensitivityStats stats(v.rows());
        stats.sum = v;
        stats.sample_count = 1;
        const MaskDerivation derived = derive_mask(stats, cfg.cluster);
        if (derived.degenerate) {
            std::cerr << "warning: layer " << (layer + 1)
                      << " clustering is degenerate; mask is empty\n";
        }
        write_mask_csv(out_dir + "/mask_layer" + std::to_string(layer + 1) + ".csv",
                       derived.mask);
    }
    write_text_file(out_dir + "/config.resolved.json", dump_run_config(cfg));
    std::cout << "wrote masks to " << out_dir << "\n";
    return kExitOk;
}

int cmd_heatmap(const std::string& matrix_csv, const std::string& out_pgm, bool log_scale) {
    const Matrix m = read_matrix_csv(matrix_csv);
    if (m.rows() != m.cols()) {
        throw ConfigError("heatmap: input matrix must be square");
    }
    write_heatmap_pgm(out_pgm, m, log_scale);
    std::cout << "wrote " << out_pgm << "\n";
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed, const std::vector<int>& sizes, bool corrupt_hook) {
    const std::array<LossVariant, 4> variants = {LossVariant::DWT, LossVariant::IW,
                                                 LossVariant::IRW, LossVariant::ISW};
    bool all_pass = true;
    for (LossVariant v : variants) {
        const GradCheckReport r = gradcheck_loss(v, seed, 50, corrupt_hook, sizes);
        std::printf("%-14s cases=%-3d worst_rel_error=%.3e tolerance=%.0e %s\n",
                    r.name.c_str(), r.cases, r.worst_rel_error, r.tolerance,
                    r.pass ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    for (bool aux : {false, true}) {
        const GradCheckReport r = gradcheck_end_to_end(seed, aux ? 10 : 50, aux, corrupt_hook);
        std::printf("%-14s cases=%-3d worst_rel_error=%.3e tolerance=%.0e %s\n",
                    r.name.c_str(), r.cases, r.worst_rel_error, r.tolerance,
                    r.pass ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kExitOk : kExitVerificationFailure;
}

int cmd_probe(uint64_t seed, int channels, int side, int steps, double lr,
              const std::string& out_path) {
    Rng rng(mix_seed(seed, 0x9806e));
    FeatureMap x(channels, side, side);
    for (double& v : x.data) v = rng.normal();
    const ConflictReport report = conflict_probe(x, steps, lr);

    json root;
    root["seed"] = seed;
    root["channels"] = channels;
    root["side"] = side;
    root["steps"] = steps;
    root["lr"] = lr;
    root["initial_offdiag"] = report.initial_offdiag;
    root["dwt_offdiag"] = report.dwt_diverged ? json() : json(report.dwt_offdiag);
    root["iw_offdiag"] = report.iw_diverged ? json() : json(report.iw_offdiag);
    root["dwt_diverged"] = report.dwt_diverged;
    root["iw_diverged"] = report.iw_diverged;
    const std::string text = root.dump(2) + "\n";
    if (!out_path.empty()) write_text_file(out_path, text);
    std::cout << text;
    return kExitOk;
}

int run_command(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerificationFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerificationFailure;
    }
}

}  // namespace swt
