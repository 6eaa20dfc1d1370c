#pragma once

#include <string>
#include <vector>

#include "swt/config.hpp"
#include "swt/io.hpp"

namespace swt {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailure = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitIoError = 3;

// Dataset directory layout: manifest.json plus one SWT1 image tensor and one
// SWT1 label tensor per scene. No timestamps; reruns are byte-identical.
void write_dataset_dir(const std::string& dir, const std::vector<SyntheticScene>& scenes,
                       int num_classes, const std::string& domain,
                       const std::string& config_echo);

struct LoadedDataset {
    std::vector<SyntheticScene> scenes;
    int num_classes = 0;
    std::string domain;
};

LoadedDataset load_dataset_dir(const std::string& dir);

int cmd_gen_data(const std::string& config_path, const std::string& domain,
                 const std::string& out_dir);

int cmd_train(const std::string& config_path, const std::string& variant,
              const std::string& data_dir, const std::string& out_dir);

int cmd_eval(const std::string& checkpoint_prefix, const std::string& data_dir,
             const std::string& out_path);

int cmd_stats(const std::string& config_path, const std::string& checkpoint_prefix,
              const std::string& data_dir, const std::string& out_dir);

int cmd_mask(const std::string& config_path, const std::string& stats_dir,
             const std::string& out_dir);

int cmd_heatmap(const std::string& matrix_csv, const std::string& out_pgm, bool log_scale);

// sizes: channel counts exercised by the loss suites (empty = defaults).
// corrupt_hook deliberately breaks one analytic gradient; the harness must
// notice and exit nonzero.
int cmd_gradcheck(uint64_t seed, const std::vector<int>& sizes, bool corrupt_hook);

int cmd_probe(uint64_t seed, int channels, int side, int steps, double lr,
              const std::string& out_path);

// Maps the library's exception taxonomy onto exit codes and prints the error.
int run_command(const std::function<int()>& body);

// Metrics JSON (strict schema).
struct Metrics {
    double miou = 0.0;
    std::vector<double> per_class_iou;
    std::vector<long> gt_pixels;
};
std::string dump_metrics(const Metrics& m);
Metrics parse_metrics(const std::string& json_text);

}  // namespace swt
