#pragma once

#include <string>

#include "swt/train.hpp"

namespace swt {

// One JSON document drives every command. Unknown keys are rejected so a
// typo cannot silently fall back to a default; every run echoes the fully
// resolved document next to its outputs.
struct RunConfig {
    uint64_t seed = 1;
    DatasetConfig dataset;       // geometry shared by both domains
    StyleRange source_style;
    StyleRange target_style;
    int eval_scenes = 100;
    TrainConfig train;
    PhotometricTransform photometric;
    ClusterConfig cluster;

    void validate() const;
};

RunConfig default_run_config();

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Fully resolved document (defaults filled in), stable key order.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace swt
