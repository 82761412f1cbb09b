#include "fpl/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fpl/image_io.hpp"
#include "fpl/orientation_field.hpp"

namespace fpl {

void RunConfig::validate() const {
    patch.validate();
    cnn.validate();
    train.validate();
    std::vector<std::string> set;
    for (const auto* p : {&paths.dataset_root, &paths.patch_store,
                          &paths.model_file, &paths.report_file}) {
        if (p->empty()) continue;
        set.push_back(p->generic_string());
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            if (set[i] == set[j]) {
                throw std::invalid_argument("config paths must be distinct: " + set[i]);
            }
        }
    }
}

RunConfig merge_config_json(const RunConfig& base, const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

    RunConfig cfg = base;
    for (const auto& [key, value] : j.items()) {
        if (key == "sigma") cfg.patch.sigma = value.get<int>();
        else if (key == "patch_multiplier") cfg.patch.patch_multiplier = value.get<int>();
        else if (key == "padding_multiplier") cfg.patch.padding_multiplier = value.get<int>();
        else if (key == "noise_factor") cfg.patch.noise_factor = value.get<double>();
        else if (key == "input_side") cfg.cnn.input_side = value.get<int>();
        else if (key == "block_filters") cfg.cnn.block_filters = value.get<std::vector<int>>();
        else if (key == "block_dropout") cfg.cnn.block_dropout = value.get<std::vector<double>>();
        else if (key == "kernel_size") cfg.cnn.kernel_size = value.get<int>();
        else if (key == "pool") cfg.cnn.pool = value.get<int>();
        else if (key == "epochs") cfg.train.epochs = value.get<int>();
        else if (key == "batch_size") cfg.train.batch_size = value.get<int>();
        else if (key == "learning_rate") cfg.train.learning_rate = value.get<double>();
        else if (key == "beta1") cfg.train.beta1 = value.get<double>();
        else if (key == "beta2") cfg.train.beta2 = value.get<double>();
        else if (key == "epsilon") cfg.train.epsilon = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "parallel") cfg.parallel = value.get<bool>();
        else if (key == "dataset_root") cfg.paths.dataset_root = value.get<std::string>();
        else if (key == "patch_store") cfg.paths.patch_store = value.get<std::string>();
        else if (key == "model_file") cfg.paths.model_file = value.get<std::string>();
        else if (key == "report_file") cfg.paths.report_file = value.get<std::string>();
        else throw std::invalid_argument("unknown config key: " + key);
    }
    cfg.train.seed = cfg.seed;
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& json_file) {
    std::ifstream in(json_file);
    if (!in) throw std::runtime_error("unreadable file: " + json_file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return merge_config_json(RunConfig{}, ss.str());
}

ExtractSummary run_extract(const RunConfig& config,
                           std::optional<Split> only_split,
                           const std::filesystem::path& field_dump_dir) {
    config.validate();
    if (config.paths.dataset_root.empty() || config.paths.patch_store.empty()) {
        throw std::invalid_argument("extract needs dataset_root and patch_store");
    }
    const DatasetManifest manifest = ingest_dataset(config.paths.dataset_root);
    if (!field_dump_dir.empty()) {
        std::filesystem::create_directories(field_dump_dir);
    }

    ExtractSummary summary;
    for (const DatasetEntry& entry : manifest.entries) {
        if (only_split && entry.split != *only_split) continue;
        const GrayImage img = load_image(entry.path);
        const std::string source_id = source_id_for(manifest.root, entry.path);
        std::vector<Patch> patches = dense_sample(img, config.patch, source_id,
                                                  entry.label, config.parallel);
        const auto out_dir =
            config.paths.patch_store / std::string(split_name(entry.split));
        summary.patches_written += persist_patches(patches, out_dir);
        ++summary.images;

        if (!field_dump_dir.empty()) {
            const OrientationField field = build_orientation_field(
                img, GridParams{config.patch.sigma}, config.parallel);
            std::ofstream dump(field_dump_dir / (source_id + ".field.txt"));
            write_field_dump(field, dump);
        }
    }
    return summary;
}

namespace {

std::vector<Sample> samples_from_store(const std::filesystem::path& dir,
                                       int expect_side) {
    std::vector<Patch> patches = load_patch_store(dir);
    std::vector<Sample> samples;
    samples.reserve(patches.size());
    for (Patch& p : patches) {
        if (!p.label) {
            throw std::runtime_error("patch without label in store: " + p.source_id);
        }
        if (p.pixels.width != expect_side || p.pixels.height != expect_side) {
            throw std::runtime_error(
                "config/model shape mismatch: stored patches are " +
                std::to_string(p.pixels.width) + "px, model expects " +
                std::to_string(expect_side) + "px");
        }
        samples.push_back(
            {std::move(p.pixels), *p.label == Label::Live ? kClassLive : kClassSpoof});
    }
    return samples;
}

}  // namespace

TrainHistory run_train(const RunConfig& config) {
    config.validate();
    if (config.paths.patch_store.empty() || config.paths.model_file.empty()) {
        throw std::invalid_argument("train needs patch_store and model_file");
    }
    const auto train_dir = config.paths.patch_store / "train";
    std::vector<Sample> samples =
        samples_from_store(train_dir, config.cnn.input_side);

    ModelWeights model = init_model(config.cnn, config.seed);
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    const TrainHistory history = train(model, samples, tc);

    if (config.paths.model_file.has_parent_path()) {
        std::filesystem::create_directories(config.paths.model_file.parent_path());
    }
    save_model(model, config.paths.model_file);

    const auto history_path = config.paths.model_file.string() + ".history.csv";
    std::ofstream hist(history_path);
    hist << "epoch,loss,accuracy\n";
    char buf[96];
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g\n", e + 1,
                      history.epochs[e].loss, history.epochs[e].accuracy);
        hist << buf;
    }
    return history;
}

namespace {

PerPatchResult per_patch_result(const Patch& patch, const PatchScore& score) {
    PerPatchResult r;
    r.cell_row = patch.cell_row;
    r.cell_col = patch.cell_col;
    r.score = score;
    r.decision = score.live > score.spoof ? Label::Live : Label::Spoof;
    return r;
}

ClassifyOutcome classify_one(const ModelWeights& model, const RunConfig& config,
                             const std::filesystem::path& path,
                             std::string source_id) {
    ClassifyOutcome outcome;
    outcome.source_id = std::move(source_id);
    const GrayImage img = load_image(path);
    std::vector<Patch> patches =
        dense_sample(img, config.patch, outcome.source_id, {}, config.parallel);
    if (patches.empty()) {
        outcome.error = "no patches";
        return outcome;
    }
    std::vector<GrayImage> pixels;
    pixels.reserve(patches.size());
    for (const Patch& p : patches) pixels.push_back(p.pixels);
    const std::vector<PatchScore> scores =
        classify_patches(model, pixels, config.parallel);

    std::vector<PerPatchResult> per_patch;
    per_patch.reserve(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        per_patch.push_back(per_patch_result(patches[i], scores[i]));
    }
    outcome.result = classify_fingerprint(outcome.source_id, per_patch);
    return outcome;
}

}  // namespace

std::vector<ClassifyOutcome> run_classify(const RunConfig& config,
                                          const std::filesystem::path& input) {
    config.validate();
    if (config.paths.model_file.empty()) {
        throw std::invalid_argument("classify needs model_file");
    }
    const ModelWeights model = load_model(config.paths.model_file);
    if (model.config.input_side != config.patch.final_side()) {
        throw std::invalid_argument(
            "config/model shape mismatch: patch params produce " +
            std::to_string(config.patch.final_side()) + "px, model expects " +
            std::to_string(model.config.input_side) + "px");
    }

    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(input)) {
        for (const auto& e : std::filesystem::directory_iterator(input)) {
            if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(input);
    }
    if (files.empty()) throw std::runtime_error("zero images under " + input.string());

    std::vector<ClassifyOutcome> outcomes;
    for (const auto& f : files) {
        outcomes.push_back(
            classify_one(model, config, f, f.stem().string()));
    }
    return outcomes;
}

EvalPair run_evaluate(const RunConfig& config) {
    config.validate();
    if (config.paths.patch_store.empty() || config.paths.model_file.empty()) {
        throw std::invalid_argument("evaluate needs patch_store and model_file");
    }
    const ModelWeights model = load_model(config.paths.model_file);
    const auto test_dir = config.paths.patch_store / "test";
    std::vector<Patch> patches = load_patch_store(test_dir);
    if (patches.empty()) {
        throw std::runtime_error("no patches in test store: " + test_dir.string());
    }
    for (const Patch& p : patches) {
        if (!p.label) {
            throw std::runtime_error("patch without label in store: " + p.source_id);
        }
        if (p.pixels.width != model.config.input_side) {
            throw std::runtime_error(
                "config/model shape mismatch: stored patches are " +
                std::to_string(p.pixels.width) + "px, model expects " +
                std::to_string(model.config.input_side) + "px");
        }
    }

    std::vector<GrayImage> pixels;
    pixels.reserve(patches.size());
    for (const Patch& p : patches) pixels.push_back(p.pixels);
    const std::vector<PatchScore> scores =
        classify_patches(model, pixels, config.parallel);

    // patch level
    std::vector<Label> patch_truth, patch_pred;
    patch_truth.reserve(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        patch_truth.push_back(*patches[i].label);
        patch_pred.push_back(scores[i].live > scores[i].spoof ? Label::Live
                                                              : Label::Spoof);
    }

    // fingerprint level, grouped by source in first-seen order
    std::vector<std::string> group_order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        auto [it, fresh] = groups.try_emplace(patches[i].source_id);
        if (fresh) group_order.push_back(patches[i].source_id);
        it->second.push_back(i);
    }
    std::vector<Label> fp_truth, fp_pred;
    for (const std::string& id : group_order) {
        const auto& idxs = groups[id];
        const Label truth = *patches[idxs.front()].label;
        double live = 0, spoof = 0;
        for (std::size_t i : idxs) {
            if (*patches[i].label != truth) {
                throw std::runtime_error("inconsistent labels for source: " + id);
            }
            live += scores[i].live;
            spoof += scores[i].spoof;
        }
        fp_truth.push_back(truth);
        fp_pred.push_back(decide(live, spoof));
    }

    EvalPair pair;
    pair.patch_level = make_report(EvalLevel::Patch, confusion(patch_truth, patch_pred));
    pair.fingerprint_level =
        make_report(EvalLevel::Fingerprint, confusion(fp_truth, fp_pred));

    if (!config.paths.report_file.empty()) {
        if (config.paths.report_file.has_parent_path()) {
            std::filesystem::create_directories(config.paths.report_file.parent_path());
        }
        std::ofstream json_out(config.paths.report_file);
        json_out << "[\n"
                 << report_json(pair.patch_level) << ",\n"
                 << report_json(pair.fingerprint_level) << "\n]\n";

        auto csv_path = config.paths.report_file;
        csv_path.replace_extension(".csv");
        std::ofstream csv_out(csv_path);
        csv_out << report_csv_header() << "\n"
                << report_csv_row(pair.patch_level) << "\n"
                << report_csv_row(pair.fingerprint_level) << "\n";
    }
    return pair;
}

}  // namespace fpl
