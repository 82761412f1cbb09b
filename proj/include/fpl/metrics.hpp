#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpl/cnn.hpp"
#include "fpl/patch_sampler.hpp"

namespace fpl {

// Element-wise score sums; throws "no patches" on an empty list.
std::pair<double, double> aggregate(std::span<const PatchScore> scores);

// Live iff aggregate_live > aggregate_spoof; ties fail closed to Spoof.
Label decide(double aggregate_live, double aggregate_spoof);

struct PerPatchResult {
    int cell_row = 0;
    int cell_col = 0;
    PatchScore score;
    Label decision = Label::Spoof;
};

struct FingerprintResult {
    std::string source_id;
    double aggregate_live = 0;
    double aggregate_spoof = 0;
    Label decision = Label::Spoof;
    int patch_count = 0;
    std::vector<PerPatchResult> per_patch;
};

FingerprintResult classify_fingerprint(std::string source_id,
                                       std::span<const PerPatchResult> patches);

struct ConfusionCounts {
    std::int64_t tp = 0;  // Live is the positive class
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + tn + fp + fn; }
};

ConfusionCounts confusion(std::span<const Label> truth,
                          std::span<const Label> predicted);

// The denominators follow the source convention: FAR = FP/(FP+TP),
// FRR = FN/(FN+TN). Empty denominators are undefined, not zero.
std::optional<double> far_percent(const ConfusionCounts& c);
std::optional<double> frr_percent(const ConfusionCounts& c);
std::optional<double> ace_percent(std::optional<double> far_pct,
                                  std::optional<double> frr_pct);
double accuracy_percent(const ConfusionCounts& c);  // throws on empty

enum class EvalLevel { Patch, Fingerprint };

struct EvalReport {
    EvalLevel level = EvalLevel::Patch;
    ConfusionCounts counts;
    std::optional<double> far;
    std::optional<double> frr;
    std::optional<double> ace;
    double accuracy = 0;
};

EvalReport make_report(EvalLevel level, const ConfusionCounts& counts);

// Fixed keys: level, tp, tn, fp, fn, far, frr, ace, accuracy. Undefined
// rates serialize as JSON null / CSV "undefined".
std::string report_json(const EvalReport& report);
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);

}  // namespace fpl
