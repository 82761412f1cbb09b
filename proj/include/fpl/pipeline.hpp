#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpl/cnn.hpp"
#include "fpl/dataset.hpp"
#include "fpl/metrics.hpp"
#include "fpl/patch_sampler.hpp"

namespace fpl {

struct RunPaths {
    std::filesystem::path dataset_root;
    std::filesystem::path patch_store;
    std::filesystem::path model_file;
    std::filesystem::path report_file;
};

struct RunConfig {
    PatchParams patch;
    CnnConfig cnn;
    TrainConfig train;
    RunPaths paths;
    std::uint64_t seed = 0;
    bool parallel = true;  // extraction/classification; training stays serial

    void validate() const;
};

// JSON config file; every key optional, defaults match the library
// defaults. Unknown keys are an error to catch typos.
RunConfig load_run_config(const std::filesystem::path& json_file);
RunConfig merge_config_json(const RunConfig& base, const std::string& json_text);

struct ExtractSummary {
    std::size_t images = 0;
    std::size_t patches_written = 0;
};

// Dense-samples every dataset image into patch_store/<split>/ with one
// manifest per split. field_dump_dir, when set, also writes a per-image
// orientation-field dump.
ExtractSummary run_extract(const RunConfig& config,
                           std::optional<Split> only_split = {},
                           const std::filesystem::path& field_dump_dir = {});

// Trains on patch_store/train, writes the model file and a
// "<model>.history.csv" next to it.
TrainHistory run_train(const RunConfig& config);

struct ClassifyOutcome {
    std::string source_id;
    std::optional<FingerprintResult> result;
    std::string error;  // e.g. "no patches"
};

// Classifies one image or every image directly in a directory; extraction
// happens in memory, nothing is persisted.
std::vector<ClassifyOutcome> run_classify(const RunConfig& config,
                                          const std::filesystem::path& input);

struct EvalPair {
    EvalReport patch_level;
    EvalReport fingerprint_level;
};

// Consumes the persisted test store (never re-extracts) and writes the
// report as JSON plus a CSV twin.
EvalPair run_evaluate(const RunConfig& config);

}  // namespace fpl
