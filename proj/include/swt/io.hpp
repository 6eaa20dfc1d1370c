#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swt/losses.hpp"
#include "swt/train.hpp"

namespace swt {

// Payload of one SWT1 record: magic "SWT1", u32 version (=1), u32 ndim,
// ndim x u64 dims, little-endian f64 data, row-major.
struct Tensor {
    std::vector<uint64_t> dims;
    std::vector<double> data;

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint64_t d : dims) n *= d;
        return n;
    }
};

void write_swt1(const std::string& path, const Tensor& t);
Tensor read_swt1(const std::string& path);

// Multiple records back to back in one stream (checkpoints).
void append_swt1(std::ostream& out, const Tensor& t);
Tensor read_swt1_record(std::istream& in);

Tensor to_tensor(const FeatureMap& x);
FeatureMap feature_map_from_tensor(const Tensor& t);
Tensor labels_to_tensor(const std::vector<int>& labels, int height, int width);
std::vector<int> labels_from_tensor(const Tensor& t);

// Full-precision CSV (17 significant digits round-trips doubles exactly).
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

void write_mask_csv(const std::string& path, const SelectionMask& m);
SelectionMask read_mask_csv(const std::string& path);

// Binary PGM (P5), 8-bit. Pixel = |entry| min-max scaled, optionally on
// log10(|entry| + 1e-12). Zero-range matrices render black.
void write_heatmap_pgm(const std::string& path, const Matrix& m, bool log_scale);

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;
};
PgmImage read_pgm(const std::string& path);

void write_training_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows);

// Checkpoint: <prefix>.swt1 with the parameter tensors concatenated in
// manifest order, plus <prefix>.json naming layers, dims, phase, config echo
// and mask file references.
void write_checkpoint(const std::string& prefix, const TrainState& state,
                      const std::string& config_echo_json,
                      const std::vector<std::string>& mask_files);
TrainState read_checkpoint(const std::string& prefix);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace swt
