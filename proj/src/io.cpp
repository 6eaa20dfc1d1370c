#include "swt/io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "SWT1 I/O assumes a little-endian host");

namespace swt {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("SWT1: truncated stream");
    return v;
}

}  // namespace

void append_swt1(std::ostream& out, const Tensor& t) {
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, static_cast<uint32_t>(t.dims.size()));
    for (uint64_t d : t.dims) write_raw(out, d);
    if (t.data.size() != t.element_count()) {
        throw IoError("SWT1: data length does not match dims");
    }
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!out) throw IoError("SWT1: write failed");
}

Tensor read_swt1_record(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("SWT1: bad magic");
    }
    const uint32_t version = read_raw<uint32_t>(in);
    if (version != kVersion) {
        throw IoError("SWT1: unsupported version " + std::to_string(version));
    }
    const uint32_t ndim = read_raw<uint32_t>(in);
    if (ndim > 8) throw IoError("SWT1: implausible ndim");
    Tensor t;
    t.dims.resize(ndim);
    for (uint32_t i = 0; i < ndim; ++i) t.dims[i] = read_raw<uint64_t>(in);
    const uint64_t count = t.element_count();
    if (count > (1ULL << 32)) throw IoError("SWT1: tensor too large");
    t.data.resize(count);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw IoError("SWT1: truncated payload");
    return t;
}

void write_swt1(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    append_swt1(out, t);
}

Tensor read_swt1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return read_swt1_record(in);
}

Tensor to_tensor(const FeatureMap& x) {
    Tensor t;
    t.dims = {static_cast<uint64_t>(x.channels), static_cast<uint64_t>(x.height),
              static_cast<uint64_t>(x.width)};
    t.data = x.data;
    return t;
}

FeatureMap feature_map_from_tensor(const Tensor& t) {
    if (t.dims.size() != 3) throw IoError("expected a 3-dimensional tensor");
    FeatureMap x(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                 static_cast<int>(t.dims[2]));
    x.data = t.data;
    return x;
}

Tensor labels_to_tensor(const std::vector<int>& labels, int height, int width) {
    if (labels.size() != static_cast<size_t>(height) * width) {
        throw DimensionError("labels_to_tensor: size mismatch");
    }
    Tensor t;
    t.dims = {static_cast<uint64_t>(height), static_cast<uint64_t>(width)};
    t.data.reserve(labels.size());
    for (int v : labels) t.data.push_back(static_cast<double>(v));
    return t;
}

std::vector<int> labels_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw IoError("expected a 2-dimensional label tensor");
    std::vector<int> labels;
    labels.reserve(t.data.size());
    for (double v : t.data) {
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v || i < 0) {
            throw IoError("label tensor holds a non-integer value");
        }
        labels.push_back(i);
    }
    return labels;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[64];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf;
            if (j + 1 < m.cols()) out << ',';
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("CSV: cannot parse value '" + cell + "' in " + path);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("CSV: empty matrix in " + path);
    const size_t cols = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != cols) throw IoError("CSV: ragged rows in " + path);
    }
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < cols; ++j) {
            m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_mask_csv(const std::string& path, const SelectionMask& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (int i = 0; i < m.dim; ++i) {
        for (int j = 0; j < m.dim; ++j) {
            out << (m.get(i, j) ? '1' : '0');
            if (j + 1 < m.dim) out << ',';
        }
        out << '\n';
    }
}

SelectionMask read_mask_csv(const std::string& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.rows() != m.cols()) throw IoError("mask CSV must be square: " + path);
    SelectionMask mask(m.rows());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (v != 0.0 && v != 1.0) throw IoError("mask CSV holds a non-binary value");
            if (v == 1.0) {
                if (i >= j) throw IoError("mask CSV is not strictly upper triangular");
                mask.set(i, j, true);
            }
        }
    }
    return mask;
}

void write_heatmap_pgm(const std::string& path, const Matrix& m, bool log_scale) {
    std::vector<double> mag(m.values().size());
    for (size_t i = 0; i < mag.size(); ++i) {
        const double a = std::abs(m.values()[i]);
        mag[i] = log_scale ? std::log10(a + 1e-12) : a;
    }
    double lo = mag[0], hi = mag[0];
    for (double v : mag) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
    for (double v : mag) {
        // zero-range guard: degenerate matrices render black
        const int byte = range > 0.0
                             ? static_cast<int>(std::lround(255.0 * (v - lo) / range))
                             : 0;
        out.put(static_cast<char>(std::min(255, std::max(0, byte))));
    }
    if (!out) throw IoError("write failed: " + path);
}

PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError("not a binary PGM: " + path);
    int w, h, maxval;
    in >> w >> h >> maxval;
    in.get();  // single whitespace after the header
    if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PGM header");
    PgmImage img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw IoError("truncated PGM: " + path);
    return img;
}

void write_training_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "iteration,lr,task_loss,wloss_layer1,wloss_layer2,wloss_layer3,phase\n";
    char buf[160];
    for (const TrainLogRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      r.iteration, r.lr, r.task_loss, r.wloss[0], r.wloss[1], r.wloss[2],
                      r.phase);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

Tensor layer_weights_tensor(const ConvLayer& layer) {
    Tensor t;
    t.dims = {static_cast<uint64_t>(layer.out_ch), static_cast<uint64_t>(layer.in_ch),
              static_cast<uint64_t>(layer.ksize), static_cast<uint64_t>(layer.ksize)};
    t.data = layer.weights;
    return t;
}

Tensor layer_bias_tensor(const ConvLayer& layer) {
    Tensor t;
    t.dims = {static_cast<uint64_t>(layer.out_ch)};
    t.data = layer.bias;
    return t;
}

const char* kLayerNames[5] = {"block1", "block2", "block3", "head", "aux"};

}  // namespace

void write_checkpoint(const std::string& prefix, const TrainState& state,
                      const std::string& config_echo_json,
                      const std::vector<std::string>& mask_files) {
    nlohmann::json manifest;
    manifest["format"] = "swt-checkpoint";
    manifest["version"] = 1;
    manifest["phase"] = state.phase == Phase::phase1 ? 1 : 2;
    manifest["iteration"] = state.iteration;
    manifest["base_lr"] = state.base_lr;
    manifest["rng_seed"] = state.rng_seed;
    manifest["widths"] = state.arch.widths;
    manifest["num_classes"] = state.arch.num_classes;
    manifest["aux_head"] = state.arch.aux_head;
    manifest["mask_files"] = mask_files;
    if (!config_echo_json.empty()) {
        manifest["config"] = nlohmann::json::parse(config_echo_json);
    }

    std::ofstream weights(prefix + ".swt1", std::ios::binary);
    if (!weights) throw IoError("cannot open for writing: " + prefix + ".swt1");
    nlohmann::json layers = nlohmann::json::array();
    const std::vector<const ConvLayer*> param_layers = state.parameter_layers();
    for (size_t i = 0; i < param_layers.size(); ++i) {
        const ConvLayer* layer = param_layers[i];
        nlohmann::json entry;
        entry["name"] = kLayerNames[i];
        entry["in_ch"] = layer->in_ch;
        entry["out_ch"] = layer->out_ch;
        entry["ksize"] = layer->ksize;
        layers.push_back(entry);
        append_swt1(weights, layer_weights_tensor(*layer));
        append_swt1(weights, layer_bias_tensor(*layer));
    }
    manifest["layers"] = layers;
    write_text_file(prefix + ".json", manifest.dump(2) + "\n");
}

TrainState read_checkpoint(const std::string& prefix) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(prefix + ".json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint manifest parse error: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "swt-checkpoint") {
        throw IoError("not a checkpoint manifest: " + prefix + ".json");
    }

    NetworkConfig arch;
    const auto widths = manifest.at("widths");
    for (int i = 0; i < 3; ++i) arch.widths[i] = widths.at(i).get<int>();
    arch.num_classes = manifest.at("num_classes").get<int>();
    arch.aux_head = manifest.at("aux_head").get<bool>();

    TrainState state = init_state(arch, manifest.at("rng_seed").get<uint64_t>(),
                                  manifest.at("base_lr").get<double>());
    state.iteration = manifest.at("iteration").get<long>();
    state.phase = manifest.at("phase").get<int>() == 2 ? Phase::phase2 : Phase::phase1;

    std::ifstream weights(prefix + ".swt1", std::ios::binary);
    if (!weights) throw IoError("cannot open for reading: " + prefix + ".swt1");
    for (ConvLayer* layer : state.parameter_layers()) {
        const Tensor w = read_swt1_record(weights);
        if (w.data.size() != layer->weights.size()) {
            throw IoError("checkpoint weight tensor size mismatch");
        }
        layer->weights = w.data;
        const Tensor b = read_swt1_record(weights);
        if (b.data.size() != layer->bias.size()) {
            throw IoError("checkpoint bias tensor size mismatch");
        }
        layer->bias = b.data;
    }

    if (state.phase == Phase::phase2) {
        const std::filesystem::path base = std::filesystem::path(prefix).parent_path();
        for (const auto& f : manifest.at("mask_files")) {
            std::filesystem::path p(f.get<std::string>());
            if (p.is_relative()) p = base / p;
            state.layer_masks.push_back(read_mask_csv(p.string()));
        }
    }
    return state;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace swt
