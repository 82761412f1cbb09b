#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "fpl/image_io.hpp"
#include "fpl/overlay.hpp"
#include "fpl/pipeline.hpp"
#include "fpl/rng.hpp"
#include "fpl/synthetic.hpp"

namespace {

struct CommonFlags {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<int> sigma;
    std::optional<int> patch_mult;
    std::optional<int> pad_mult;
    std::optional<double> noise_factor;
    std::optional<int> epochs;
    std::optional<int> batch_size;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON config file (flags override)");
    cmd->add_option("--seed", f.seed, "master seed for extraction/training");
    cmd->add_option("--sigma", f.sigma, "grid cell side in pixels");
    cmd->add_option("--patch-mult", f.patch_mult, "central grid cells per patch side");
    cmd->add_option("--pad-mult", f.pad_mult, "padding grid cells per patch side");
    cmd->add_option("--noise-factor", f.noise_factor, "whitespace rejection margin t");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--batch-size", f.batch_size, "training batch size");
    cmd->add_flag("--serial", f.serial, "disable parallel extraction/classification");
}

fpl::RunConfig resolve_config(const CommonFlags& f) {
    fpl::RunConfig cfg;
    if (!f.config_file.empty()) cfg = fpl::load_run_config(f.config_file);
    if (f.seed) {
        cfg.seed = *f.seed;
        cfg.train.seed = *f.seed;
    }
    if (f.sigma) cfg.patch.sigma = *f.sigma;
    if (f.patch_mult) cfg.patch.patch_multiplier = *f.patch_mult;
    if (f.pad_mult) cfg.patch.padding_multiplier = *f.pad_mult;
    if (f.noise_factor) cfg.patch.noise_factor = *f.noise_factor;
    if (f.epochs) cfg.train.epochs = *f.epochs;
    if (f.batch_size) cfg.train.batch_size = *f.batch_size;
    if (f.serial) cfg.parallel = false;
    return cfg;
}

nlohmann::ordered_json outcome_json(const fpl::ClassifyOutcome& o) {
    nlohmann::ordered_json j;
    j["source_id"] = o.source_id;
    if (!o.error.empty()) {
        j["error"] = o.error;
        return j;
    }
    const fpl::FingerprintResult& r = *o.result;
    j["decision"] = r.decision == fpl::Label::Live ? "live" : "spoof";
    j["aggregate_live"] = r.aggregate_live;
    j["aggregate_spoof"] = r.aggregate_spoof;
    j["patch_count"] = r.patch_count;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "fpl - minutiae-independent dense-patch fingerprint liveness pipeline.\n"
        "Reports: JSON keys level,tp,tn,fp,fn,far,frr,ace,accuracy (null when\n"
        "undefined); CSV twin uses the same columns with 'undefined'."};
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "dense-sample a dataset into a patch store");
    CommonFlags ef;
    add_common(extract, ef);
    std::string ex_data, ex_out, ex_split = "all", ex_field_dump;
    extract->add_option("--data", ex_data, "dataset root (train|test / live|spoof)");
    extract->add_option("--out", ex_out, "patch store directory");
    extract->add_option("--split", ex_split, "train, test or all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    extract->add_option("--field-dump", ex_field_dump,
                        "directory for per-image orientation field dumps");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the patch classifier on a patch store");
    CommonFlags tf;
    add_common(train_cmd, tf);
    std::string tr_patches, tr_out;
    train_cmd->add_option("--patches", tr_patches, "patch store directory");
    train_cmd->add_option("--out,--model", tr_out, "output model file");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "classify a fingerprint image or directory");
    CommonFlags cf;
    add_common(classify_cmd, cf);
    std::string cl_model, cl_input, cl_out;
    classify_cmd->add_option("--model", cl_model, "model file");
    classify_cmd->add_option("--input", cl_input, "image file or directory")->required();
    classify_cmd->add_option("--out", cl_out, "optional JSON output file");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a persisted test store against a model");
    CommonFlags vf;
    add_common(eval_cmd, vf);
    std::string ev_patches, ev_model, ev_out;
    eval_cmd->add_option("--patches", ev_patches, "patch store directory");
    eval_cmd->add_option("--model", ev_model, "model file");
    eval_cmd->add_option("--out,--report", ev_out, "report JSON path (CSV twin beside it)");

    // render
    auto* render_cmd = app.add_subcommand("render", "overlay per-patch decisions on an image");
    CommonFlags rf;
    add_common(render_cmd, rf);
    std::string rd_model, rd_image, rd_out;
    render_cmd->add_option("--model", rd_model, "model file");
    render_cmd->add_option("--image", rd_image, "input fingerprint image")->required();
    render_cmd->add_option("--out", rd_out, "output PNG")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic stripe dataset");
    CommonFlags sf;
    add_common(synth_cmd, sf);
    std::string sy_out;
    int sy_images = 4, sy_width = 420, sy_height = 420;
    double sy_live_period = 10, sy_spoof_period = 6, sy_contrast = 160,
           sy_noise = 2.0, sy_spread = 60;
    synth_cmd->add_option("--out", sy_out, "output dataset root")->required();
    synth_cmd->add_option("--images", sy_images, "images per class per split");
    synth_cmd->add_option("--width", sy_width, "image width");
    synth_cmd->add_option("--height", sy_height, "image height");
    synth_cmd->add_option("--live-period", sy_live_period, "stripe period for the live class");
    synth_cmd->add_option("--spoof-period", sy_spoof_period, "stripe period for the spoof class");
    synth_cmd->add_option("--contrast", sy_contrast, "stripe contrast");
    synth_cmd->add_option("--noise", sy_noise, "noise amplitude");
    synth_cmd->add_option("--angle-spread", sy_spread, "stripe angles drawn from [-spread, spread]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            fpl::RunConfig cfg = resolve_config(ef);
            if (!ex_data.empty()) cfg.paths.dataset_root = ex_data;
            if (!ex_out.empty()) cfg.paths.patch_store = ex_out;
            std::optional<fpl::Split> only;
            if (ex_split == "train") only = fpl::Split::Train;
            if (ex_split == "test") only = fpl::Split::Test;
            const auto summary = fpl::run_extract(cfg, only, ex_field_dump);
            std::printf("extracted %zu patches from %zu images into %s\n",
                        summary.patches_written, summary.images,
                        cfg.paths.patch_store.string().c_str());
        } else if (*train_cmd) {
            fpl::RunConfig cfg = resolve_config(tf);
            if (!tr_patches.empty()) cfg.paths.patch_store = tr_patches;
            if (!tr_out.empty()) cfg.paths.model_file = tr_out;
            const auto history = fpl::run_train(cfg);
            for (std::size_t e = 0; e < history.epochs.size(); ++e) {
                std::printf("epoch %zu  loss %.6f  accuracy %.4f\n", e + 1,
                            history.epochs[e].loss, history.epochs[e].accuracy);
            }
            std::printf("model written to %s\n", cfg.paths.model_file.string().c_str());
        } else if (*classify_cmd) {
            fpl::RunConfig cfg = resolve_config(cf);
            if (!cl_model.empty()) cfg.paths.model_file = cl_model;
            const auto outcomes = fpl::run_classify(cfg, cl_input);
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& o : outcomes) arr.push_back(outcome_json(o));
            const std::string text = arr.dump(2);
            if (!cl_out.empty()) {
                std::ofstream out(cl_out);
                out << text << "\n";
            }
            std::printf("%s\n", text.c_str());
        } else if (*eval_cmd) {
            fpl::RunConfig cfg = resolve_config(vf);
            if (!ev_patches.empty()) cfg.paths.patch_store = ev_patches;
            if (!ev_model.empty()) cfg.paths.model_file = ev_model;
            if (!ev_out.empty()) cfg.paths.report_file = ev_out;
            const auto pair = fpl::run_evaluate(cfg);
            std::printf("%s\n%s\n%s\n", fpl::report_csv_header().c_str(),
                        fpl::report_csv_row(pair.patch_level).c_str(),
                        fpl::report_csv_row(pair.fingerprint_level).c_str());
        } else if (*render_cmd) {
            fpl::RunConfig cfg = resolve_config(rf);
            if (!rd_model.empty()) cfg.paths.model_file = rd_model;
            const auto outcomes = fpl::run_classify(cfg, rd_image);
            if (!outcomes.front().result) {
                std::fprintf(stderr, "error: data: %s (%s)\n",
                             outcomes.front().error.c_str(), rd_image.c_str());
                return 3;
            }
            const fpl::GrayImage img = fpl::load_image(rd_image);
            const fpl::RgbImage overlay =
                fpl::render_overlay(img, *outcomes.front().result, cfg.patch);
            fpl::save_png(overlay, rd_out);
            std::printf("overlay written to %s\n", rd_out.c_str());
        } else if (*synth_cmd) {
            fpl::RunConfig cfg = resolve_config(sf);
            fpl::Rng rng(cfg.seed);
            std::size_t written = 0;
            for (const char* split : {"train", "test"}) {
                for (const char* cls : {"live", "spoof"}) {
                    const auto dir = std::filesystem::path(sy_out) / split / cls;
                    std::filesystem::create_directories(dir);
                    const double period =
                        std::string_view(cls) == "live" ? sy_live_period : sy_spoof_period;
                    for (int i = 0; i < sy_images; ++i) {
                        const double angle = rng.uniform(-sy_spread, sy_spread);
                        const auto img = fpl::generate_synthetic_ridge(
                            sy_width, sy_height, angle, period, sy_contrast,
                            rng.next(), sy_noise);
                        char name[32];
                        std::snprintf(name, sizeof(name), "img%03d.png", i);
                        fpl::save_png(img, dir / name);
                        ++written;
                    }
                }
            }
            std::printf("wrote %zu images under %s\n", written, sy_out.c_str());
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: data: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 4;
    }
    return 0;
}
