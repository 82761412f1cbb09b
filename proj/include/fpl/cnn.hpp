#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fpl/gray_image.hpp"
#include "fpl/patch_sampler.hpp"

namespace fpl {

// Shallow CNN: per block conv(k x k, stride 1, same padding) -> ReLU ->
// batch norm -> dropout -> max pool, then flatten -> dense(2) -> softmax.
struct CnnConfig {
    int input_side = 82;
    std::vector<int> block_filters{64, 128, 256, 512};
    std::vector<double> block_dropout{0.20, 0.30, 0.40, 0.50};
    int kernel_size = 3;
    int pool = 2;
    int classes = 2;

    void validate() const;
    int side_after_block(int block) const;  // floor pooling chain
    int flat_dim() const;                   // dense layer input width
};

struct BlockWeights {
    std::vector<double> w;         // [filters, in_ch, k, k]
    std::vector<double> b;         // [filters]
    std::vector<double> gamma;     // batch-norm scale
    std::vector<double> beta;      // batch-norm shift
    std::vector<double> run_mean;  // running statistics (inference path)
    std::vector<double> run_var;
};

struct ModelWeights {
    CnnConfig config;
    std::vector<BlockWeights> blocks;
    std::vector<double> dense_w;  // [classes, flat_dim]
    std::vector<double> dense_b;  // [classes]
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    // Kernel-level parallelism. Reductions keep a fixed order either way,
    // so training stays bit-reproducible; defaults to off to match the
    // documented single-threaded training contract.
    bool parallel = false;

    void validate() const;
};

// Two-class softmax output; live + spoof == 1.
struct PatchScore {
    double live = 0;
    double spoof = 0;
};

// Class indices: 0 = live, 1 = spoof.
inline constexpr int kClassLive = 0;
inline constexpr int kClassSpoof = 1;

struct Sample {
    GrayImage image;
    int label = 0;
};

enum class RunMode { Train, Infer };

ModelWeights init_model(const CnnConfig& config, std::uint64_t seed);

// Train mode uses batch statistics and seeded dropout; Infer mode is a pure
// function of (weights, input). Pixels are scaled to [0,1] internally.
std::vector<PatchScore> forward(const ModelWeights& model,
                                std::span<const GrayImage> batch, RunMode mode,
                                std::uint64_t dropout_seed = 0,
                                bool parallel = true);

// Chunked Infer-mode convenience for large patch sets.
std::vector<PatchScore> classify_patches(const ModelWeights& model,
                                         std::span<const GrayImage> patches,
                                         bool parallel = true);

struct EpochStats {
    double loss = 0;
    double accuracy = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

// Adam on sparse categorical cross-entropy; per-epoch seeded shuffle.
// Non-finite loss is reported as divergence, never clipped.
TrainHistory train(ModelWeights& model, const std::vector<Sample>& train_set,
                   const TrainConfig& config);

// Analytic backprop vs central finite differences (step 1e-3, float-64)
// over every trainable parameter; batch norm runs on its inference
// statistics and dropout is off. Returns the max relative error.
double gradient_check(const ModelWeights& model, const Sample& sample);

void save_model(const ModelWeights& model, const std::filesystem::path& path);
ModelWeights load_model(const std::filesystem::path& path);

std::uint64_t model_checksum(const ModelWeights& model);

// Mean-intensity smoke-test classifier: live = sigmoid((threshold-mean)/16).
PatchScore baseline_classify(const Patch& patch, double threshold);

}  // namespace fpl
