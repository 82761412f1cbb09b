#include "fpl/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <stdexcept>

namespace fpl {

std::pair<double, double> aggregate(std::span<const PatchScore> scores) {
    if (scores.empty()) throw std::invalid_argument("no patches");
    double live = 0, spoof = 0;
    for (const PatchScore& s : scores) {
        live += s.live;
        spoof += s.spoof;
    }
    return {live, spoof};
}

Label decide(double aggregate_live, double aggregate_spoof) {
    if (aggregate_live < 0 || aggregate_spoof < 0) {
        throw std::invalid_argument("aggregate scores must be non-negative");
    }
    return aggregate_live > aggregate_spoof ? Label::Live : Label::Spoof;
}

FingerprintResult classify_fingerprint(std::string source_id,
                                       std::span<const PerPatchResult> patches) {
    std::vector<PatchScore> scores;
    scores.reserve(patches.size());
    for (const auto& p : patches) scores.push_back(p.score);
    const auto [live, spoof] = aggregate(scores);

    FingerprintResult result;
    result.source_id = std::move(source_id);
    result.aggregate_live = live;
    result.aggregate_spoof = spoof;
    result.decision = decide(live, spoof);
    result.patch_count = static_cast<int>(patches.size());
    result.per_patch.assign(patches.begin(), patches.end());
    return result;
}

ConfusionCounts confusion(std::span<const Label> truth,
                          std::span<const Label> predicted) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("truth/prediction length mismatch");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Label::Live) {
            predicted[i] == Label::Live ? ++c.tp : ++c.fn;
        } else {
            predicted[i] == Label::Live ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

std::optional<double> far_percent(const ConfusionCounts& c) {
    if (c.fp + c.tp == 0) return std::nullopt;
    return 100.0 * static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tp);
}

std::optional<double> frr_percent(const ConfusionCounts& c) {
    if (c.fn + c.tn == 0) return std::nullopt;
    return 100.0 * static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tn);
}

std::optional<double> ace_percent(std::optional<double> far_pct,
                                  std::optional<double> frr_pct) {
    if (!far_pct || !frr_pct) return std::nullopt;
    return (*far_pct + *frr_pct) / 2.0;
}

double accuracy_percent(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("empty evaluation");
    return 100.0 * static_cast<double>(c.tp + c.tn) /
           static_cast<double>(c.total());
}

EvalReport make_report(EvalLevel level, const ConfusionCounts& counts) {
    EvalReport r;
    r.level = level;
    r.counts = counts;
    r.far = far_percent(counts);
    r.frr = frr_percent(counts);
    r.ace = ace_percent(r.far, r.frr);
    r.accuracy = accuracy_percent(counts);
    return r;
}

namespace {

const char* level_name(EvalLevel level) {
    return level == EvalLevel::Patch ? "patch" : "fingerprint";
}

}  // namespace

std::string report_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["level"] = level_name(report.level);
    j["tp"] = report.counts.tp;
    j["tn"] = report.counts.tn;
    j["fp"] = report.counts.fp;
    j["fn"] = report.counts.fn;
    j["far"] = report.far ? nlohmann::ordered_json(*report.far)
                          : nlohmann::ordered_json(nullptr);
    j["frr"] = report.frr ? nlohmann::ordered_json(*report.frr)
                          : nlohmann::ordered_json(nullptr);
    j["ace"] = report.ace ? nlohmann::ordered_json(*report.ace)
                          : nlohmann::ordered_json(nullptr);
    j["accuracy"] = report.accuracy;
    return j.dump(2);
}

std::string report_csv_header() {
    return "level,tp,tn,fp,fn,far,frr,ace,accuracy";
}

std::string report_csv_row(const EvalReport& report) {
    auto fmt = [](std::optional<double> v) -> std::string {
        if (!v) return "undefined";
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.10g", *v);
        return buf;
    };
    std::string row = level_name(report.level);
    row += "," + std::to_string(report.counts.tp);
    row += "," + std::to_string(report.counts.tn);
    row += "," + std::to_string(report.counts.fp);
    row += "," + std::to_string(report.counts.fn);
    row += "," + fmt(report.far);
    row += "," + fmt(report.frr);
    row += "," + fmt(report.ace);
    row += "," + fmt(report.accuracy);
    return row;
}

}  // namespace fpl
