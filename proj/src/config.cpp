#include "swt/config.hpp"

#include <set>

#include <json.hpp>

#include "swt/io.hpp"

namespace swt {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

Interval parse_interval(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + ": expected [lo, hi]");
    }
    Interval out{v[0].get<double>(), v[1].get<double>()};
    if (!out.well_ordered()) throw ConfigError(where + ": range must satisfy lo <= hi");
    return out;
}

json dump_interval(const Interval& i) { return json::array({i.lo, i.hi}); }

StyleRange parse_style(const json& v, const std::string& where, StyleRange base) {
    require_keys(v, where, {"hue_rotation", "brightness_scale", "blur_sigma"});
    if (v.contains("hue_rotation")) {
        base.hue_rotation = parse_interval(v["hue_rotation"], where + ".hue_rotation");
    }
    if (v.contains("brightness_scale")) {
        base.brightness_scale =
            parse_interval(v["brightness_scale"], where + ".brightness_scale");
    }
    if (v.contains("blur_sigma")) {
        base.blur_sigma = parse_interval(v["blur_sigma"], where + ".blur_sigma");
    }
    return base;
}

json dump_style(const StyleRange& s) {
    json out;
    out["hue_rotation"] = dump_interval(s.hue_rotation);
    out["brightness_scale"] = dump_interval(s.brightness_scale);
    out["blur_sigma"] = dump_interval(s.blur_sigma);
    return out;
}

template <typename T>
void read_if(const json& obj, const char* key, T& dst) {
    if (obj.contains(key)) dst = obj.at(key).get<T>();
}

}  // namespace

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.dataset.num_scenes = 200;
    cfg.dataset.height = 64;
    cfg.dataset.width = 64;
    cfg.dataset.num_classes = 5;
    // Source domain: mild photometric spread.
    cfg.source_style.hue_rotation = {-0.3, 0.3};
    cfg.source_style.brightness_scale = {0.9, 1.1};
    cfg.source_style.blur_sigma = {0.0, 0.4};
    // Target domain: disjoint, strongly shifted style over the same content.
    cfg.target_style.hue_rotation = {1.6, 2.6};
    cfg.target_style.brightness_scale = {0.55, 0.8};
    cfg.target_style.blur_sigma = {0.8, 1.5};
    cfg.eval_scenes = 100;
    cfg.photometric.rng_seed = 7;
    return cfg;
}

void RunConfig::validate() const {
    dataset.validate();
    source_style.validate();
    target_style.validate();
    if (eval_scenes < 1) throw ConfigError("RunConfig: eval_scenes must be >= 1");
    train.validate();
    photometric.validate();
    cluster.validate();
    if (train.eval_num_classes != dataset.num_classes) {
        throw ConfigError("RunConfig: train.eval_num_classes must match dataset.num_classes");
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    require_keys(root, "config",
                 {"seed", "dataset", "train", "photometric", "cluster"});

    RunConfig cfg = default_run_config();
    read_if(root, "seed", cfg.seed);

    if (root.contains("dataset")) {
        const json& d = root["dataset"];
        require_keys(d, "dataset",
                     {"num_scenes", "eval_scenes", "height", "width", "num_classes",
                      "source_style", "target_style"});
        read_if(d, "num_scenes", cfg.dataset.num_scenes);
        read_if(d, "eval_scenes", cfg.eval_scenes);
        read_if(d, "height", cfg.dataset.height);
        read_if(d, "width", cfg.dataset.width);
        read_if(d, "num_classes", cfg.dataset.num_classes);
        if (d.contains("source_style")) {
            cfg.source_style = parse_style(d["source_style"], "dataset.source_style",
                                           cfg.source_style);
        }
        if (d.contains("target_style")) {
            cfg.target_style = parse_style(d["target_style"], "dataset.target_style",
                                           cfg.target_style);
        }
    }

    if (root.contains("train")) {
        const json& t = root["train"];
        require_keys(t, "train",
                     {"n_phase1_epochs", "total_iterations", "base_lr", "poly_power",
                      "momentum", "lambda_weight", "margin_delta", "batch_size",
                      "aux_enabled", "gamma_aux", "widths"});
        read_if(t, "n_phase1_epochs", cfg.train.n_phase1_epochs);
        read_if(t, "total_iterations", cfg.train.total_iterations);
        read_if(t, "base_lr", cfg.train.base_lr);
        read_if(t, "poly_power", cfg.train.poly_power);
        read_if(t, "momentum", cfg.train.momentum);
        read_if(t, "lambda_weight", cfg.train.lambda_weight);
        read_if(t, "margin_delta", cfg.train.margin_delta);
        read_if(t, "batch_size", cfg.train.batch_size);
        read_if(t, "aux_enabled", cfg.train.aux_enabled);
        read_if(t, "gamma_aux", cfg.train.gamma_aux);
        if (t.contains("widths")) {
            const json& w = t["widths"];
            if (!w.is_array() || w.size() != 3) {
                throw ConfigError("train.widths: expected three block widths");
            }
            for (int i = 0; i < 3; ++i) cfg.train.widths[i] = w[i].get<int>();
        }
    }

    if (root.contains("photometric")) {
        const json& p = root["photometric"];
        require_keys(p, "photometric",
                     {"brightness", "contrast", "saturation", "hue_shift", "blur_sigma",
                      "rng_seed"});
        if (p.contains("brightness")) {
            cfg.photometric.brightness = parse_interval(p["brightness"], "photometric.brightness");
        }
        if (p.contains("contrast")) {
            cfg.photometric.contrast = parse_interval(p["contrast"], "photometric.contrast");
        }
        if (p.contains("saturation")) {
            cfg.photometric.saturation = parse_interval(p["saturation"], "photometric.saturation");
        }
        if (p.contains("hue_shift")) {
            cfg.photometric.hue_shift = parse_interval(p["hue_shift"], "photometric.hue_shift");
        }
        if (p.contains("blur_sigma")) {
            cfg.photometric.blur_sigma = parse_interval(p["blur_sigma"], "photometric.blur_sigma");
        }
        read_if(p, "rng_seed", cfg.photometric.rng_seed);
    }

    if (root.contains("cluster")) {
        const json& c = root["cluster"];
        require_keys(c, "cluster", {"k", "m", "log_scale"});
        read_if(c, "k", cfg.cluster.k);
        read_if(c, "m", cfg.cluster.m);
        read_if(c, "log_scale", cfg.cluster.log_scale);
    }

    // The dataset seed and network class count are derived fields.
    cfg.dataset.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    cfg.train.eval_num_classes = cfg.dataset.num_classes;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

std::string dump_run_config(const RunConfig& cfg) {
    json root;
    root["seed"] = cfg.seed;

    json d;
    d["num_scenes"] = cfg.dataset.num_scenes;
    d["eval_scenes"] = cfg.eval_scenes;
    d["height"] = cfg.dataset.height;
    d["width"] = cfg.dataset.width;
    d["num_classes"] = cfg.dataset.num_classes;
    d["source_style"] = dump_style(cfg.source_style);
    d["target_style"] = dump_style(cfg.target_style);
    root["dataset"] = d;

    json t;
    t["n_phase1_epochs"] = cfg.train.n_phase1_epochs;
    t["total_iterations"] = cfg.train.total_iterations;
    t["base_lr"] = cfg.train.base_lr;
    t["poly_power"] = cfg.train.poly_power;
    t["momentum"] = cfg.train.momentum;
    t["lambda_weight"] = cfg.train.lambda_weight;
    t["margin_delta"] = cfg.train.margin_delta;
    t["batch_size"] = cfg.train.batch_size;
    t["aux_enabled"] = cfg.train.aux_enabled;
    t["gamma_aux"] = cfg.train.gamma_aux;
    t["widths"] = cfg.train.widths;
    root["train"] = t;

    json p;
    p["brightness"] = dump_interval(cfg.photometric.brightness);
    p["contrast"] = dump_interval(cfg.photometric.contrast);
    p["saturation"] = dump_interval(cfg.photometric.saturation);
    p["hue_shift"] = dump_interval(cfg.photometric.hue_shift);
    p["blur_sigma"] = dump_interval(cfg.photometric.blur_sigma);
    p["rng_seed"] = cfg.photometric.rng_seed;
    root["photometric"] = p;

    json c;
    c["k"] = cfg.cluster.k;
    c["m"] = cfg.cluster.m;
    c["log_scale"] = cfg.cluster.log_scale;
    root["cluster"] = c;

    return root.dump(2) + "\n";
}

}  // namespace swt
