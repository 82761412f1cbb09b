#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fpl/dataset.hpp"
#include "fpl/image_io.hpp"
#include "fpl/overlay.hpp"
#include "fpl/pipeline.hpp"
#include "fpl/synthetic.hpp"
#include "test_util.hpp"

using namespace fpl;
using fpl::test::TempDir;

namespace {

// stripes with per-class period; angles drawn per image
void write_stripe_dataset(const std::filesystem::path& root, int per_class,
                          int side, double live_period, double spoof_period,
                          std::uint64_t seed) {
    Rng rng(seed);
    for (const char* split : {"train", "test"}) {
        for (const char* cls : {"live", "spoof"}) {
            const auto dir = root / split / cls;
            std::filesystem::create_directories(dir);
            const double period =
                std::string_view(cls) == "live" ? live_period : spoof_period;
            for (int i = 0; i < per_class; ++i) {
                const double angle = rng.uniform(-40.0, 40.0);
                const GrayImage img = generate_synthetic_ridge(
                    side, side, angle, period, 160.0, rng.next(), 2.0);
                char name[16];
                std::snprintf(name, sizeof(name), "f%02d.png", i);
                save_png(img, dir / name);
            }
        }
    }
}

RunConfig small_config(const std::filesystem::path& work) {
    RunConfig cfg;
    cfg.patch.sigma = 6;
    cfg.patch.patch_multiplier = 10;
    cfg.patch.padding_multiplier = 2;
    cfg.patch.noise_factor = 0.0;
    cfg.cnn.input_side = cfg.patch.final_side();  // 40
    cfg.cnn.block_filters = {6, 12};
    cfg.cnn.block_dropout = {0.2, 0.3};
    cfg.train.epochs = 3;
    cfg.train.batch_size = 32;
    cfg.seed = 2024;
    cfg.train.seed = 2024;
    cfg.paths.dataset_root = work / "data";
    cfg.paths.patch_store = work / "patches";
    cfg.paths.model_file = work / "model.bin";
    cfg.paths.report_file = work / "report.json";
    return cfg;
}

}  // namespace

TEST_CASE("dataset ingestion") {
    TempDir tmp("ingest");
    write_stripe_dataset(tmp.path / "scannerA", 2, 60, 10, 6, 1);

    const DatasetManifest m = ingest_dataset(tmp.path / "scannerA");
    CHECK(m.entries.size() == 8);  // 2 per class per split
    CHECK(std::all_of(m.entries.begin(), m.entries.end(),
                      [](const DatasetEntry& e) { return e.scanner == "scannerA"; }));
    CHECK(std::is_sorted(m.entries.begin(), m.entries.end(),
                         [](const DatasetEntry& a, const DatasetEntry& b) {
                             return a.path.generic_string() < b.path.generic_string();
                         }));
    for (const auto& e : m.entries) CHECK(std::filesystem::exists(e.path));

    const DatasetManifest again = ingest_dataset(tmp.path / "scannerA");
    REQUIRE(again.entries.size() == m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(again.entries[i].path == m.entries[i].path);
        CHECK(again.entries[i].label == m.entries[i].label);
        CHECK(again.entries[i].split == m.entries[i].split);
    }

    SUBCASE("empty tree") {
        const auto empty_root = tmp.path / "empty";
        for (const char* s : {"train", "test"}) {
            for (const char* c : {"live", "spoof"}) {
                std::filesystem::create_directories(empty_root / s / c);
            }
        }
        CHECK_THROWS_WITH_AS(ingest_dataset(empty_root),
                             doctest::Contains("zero images"), std::runtime_error);
    }
    SUBCASE("missing subdirectory") {
        const auto partial = tmp.path / "partial";
        std::filesystem::create_directories(partial / "train" / "live");
        std::filesystem::create_directories(partial / "train" / "spoof");
        std::filesystem::create_directories(partial / "test" / "live");
        CHECK_THROWS_WITH_AS(ingest_dataset(partial),
                             doctest::Contains("missing subdirectory: test/spoof"),
                             std::runtime_error);
    }
}

TEST_CASE("source ids flatten the relative path") {
    CHECK(source_id_for("/data/scanner", "/data/scanner/train/live/img7.png") ==
          "train_live_img7");
}

TEST_CASE("synthetic ridge generator") {
    SUBCASE("axis-aligned, noise-free") {
        const GrayImage h = generate_synthetic_ridge(40, 20, 0.0, 8.0, 150.0, 0, 0.0);
        // intensity depends only on x: all rows identical, gradient horizontal
        for (int y = 1; y < h.height; ++y) {
            for (int x = 0; x < h.width; ++x) CHECK(h.at(y, x) == h.at(0, x));
        }
        for (int x = 0; x < h.width; ++x) {
            const double expect = 128.0 + 75.0 * std::sin(2.0 * M_PI * x / 8.0);
            CHECK(h.at(0, x) == static_cast<std::uint8_t>(std::lround(expect)));
        }

        const GrayImage v = generate_synthetic_ridge(20, 40, 90.0, 8.0, 150.0, 0, 0.0);
        for (int y = 0; y < v.height; ++y) {
            for (int x = 1; x < v.width; ++x) CHECK(v.at(y, x) == v.at(y, 0));
        }
    }

    SUBCASE("oriented stripes produce the analytic gradient direction") {
        const GrayImage img = generate_synthetic_ridge(200, 200, 30.0, 10.0, 160.0, 3, 0.0);
        const OrientationField f = build_orientation_field(img, GridParams{12});
        for (int r = 0; r < f.cells_y; ++r) {
            for (int c = 0; c < f.cells_x; ++c) {
                const auto i = f.idx(r, c);
                REQUIRE(f.magnitude[i] > 0);
                const double deg =
                    std::atan2(f.unit_y[i], f.unit_x[i]) * 180.0 / M_PI;
                CHECK(std::abs(deg - 30.0) < 2.0);
                CHECK(f.sign_y[i] == 1);  // positive slope axis
            }
        }
    }

    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(generate_synthetic_ridge(10, 10, 0, 3.0, 100, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS(generate_synthetic_ridge(10, 10, 0, 8.0, 0, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS(generate_synthetic_ridge(10, 10, 0, 8.0, 300, 0),
                        std::invalid_argument);
    }

    SUBCASE("seeded noise is deterministic") {
        const GrayImage a = generate_synthetic_ridge(30, 30, 15, 8, 120, 5, 2.0);
        const GrayImage b = generate_synthetic_ridge(30, 30, 15, 8, 120, 5, 2.0);
        const GrayImage c = generate_synthetic_ridge(30, 30, 15, 8, 120, 6, 2.0);
        CHECK(a.data == b.data);
        CHECK(a.data != c.data);
    }
}

TEST_CASE("config file loading and overrides") {
    TempDir tmp("cfg");
    const auto file = tmp.path / "run.json";
    {
        std::ofstream out(file);
        out << R"({"sigma": 6, "patch_multiplier": 8, "noise_factor": 0.05,
                   "block_filters": [4, 8], "block_dropout": [0.1, 0.2],
                   "input_side": 20, "epochs": 2, "seed": 99,
                   "dataset_root": "d", "patch_store": "p"})";
    }
    const RunConfig cfg = load_run_config(file);
    CHECK(cfg.patch.sigma == 6);
    CHECK(cfg.patch.patch_multiplier == 8);
    CHECK(cfg.patch.noise_factor == 0.05);
    CHECK(cfg.cnn.block_filters == std::vector<int>{4, 8});
    CHECK(cfg.train.epochs == 2);
    CHECK(cfg.seed == 99);
    CHECK(cfg.train.seed == 99);
    CHECK(cfg.paths.dataset_root == "d");

    CHECK_THROWS_WITH_AS(merge_config_json(RunConfig{}, R"({"sgima": 6})"),
                         doctest::Contains("unknown config key"),
                         std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(RunConfig{}, "not json"),
                    std::invalid_argument);

    RunConfig clash;
    clash.paths.patch_store = "same";
    clash.paths.model_file = "same";
    CHECK_THROWS_WITH_AS(clash.validate(), doctest::Contains("distinct"),
                         std::invalid_argument);
}

TEST_CASE("pipeline stages end to end on a small synthetic dataset") {
    TempDir tmp("pipe");
    RunConfig cfg = small_config(tmp.path);
    write_stripe_dataset(cfg.paths.dataset_root, 2, 160, 12, 6, 7);

    // extract: manifest row count equals files written
    const ExtractSummary summary = run_extract(cfg);
    CHECK(summary.images == 8);
    CHECK(summary.patches_written > 100);
    for (const char* split : {"train", "test"}) {
        const auto dir = cfg.paths.patch_store / split;
        std::ifstream manifest(dir / "manifest.csv");
        REQUIRE(manifest.good());
        std::string line;
        std::getline(manifest, line);  // header
        std::size_t rows = 0, pngs = 0;
        while (std::getline(manifest, line)) {
            if (!line.empty()) ++rows;
        }
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() == ".png") ++pngs;
        }
        CHECK(rows == pngs);
    }

    // train
    const TrainHistory history = run_train(cfg);
    CHECK(history.epochs.size() == 3);
    CHECK(std::filesystem::exists(cfg.paths.model_file));
    CHECK(std::filesystem::exists(cfg.paths.model_file.string() + ".history.csv"));

    // classify one raw test image
    const auto some_image =
        cfg.paths.dataset_root / "test" / "live" / "f00.png";
    const auto outcomes = run_classify(cfg, some_image);
    REQUIRE(outcomes.size() == 1);
    REQUIRE(outcomes[0].result.has_value());
    const FingerprintResult& r = *outcomes[0].result;
    CHECK(r.patch_count > 0);
    CHECK(r.aggregate_live + r.aggregate_spoof ==
          doctest::Approx(r.patch_count).epsilon(1e-6));
    CHECK(static_cast<int>(r.per_patch.size()) == r.patch_count);

    // a flat image yields the explicit no-patches outcome
    const auto flat_path = tmp.path / "flat.png";
    save_png(GrayImage(160, 160, 128), flat_path);
    const auto flat_outcome = run_classify(cfg, flat_path);
    REQUIRE(flat_outcome.size() == 1);
    CHECK_FALSE(flat_outcome[0].result.has_value());
    CHECK(flat_outcome[0].error == "no patches");

    // evaluate consumes only the persisted store: drop the raw dataset first
    std::filesystem::remove_all(cfg.paths.dataset_root);
    const EvalPair reports = run_evaluate(cfg);
    CHECK(std::filesystem::exists(cfg.paths.report_file));
    CHECK(std::filesystem::exists(tmp.path / "report.csv"));
    CHECK(reports.patch_level.counts.total() > 100);
    CHECK(reports.fingerprint_level.counts.total() == 4);

    // aggregation should not hurt: fingerprint accuracy >= patch accuracy
    CHECK(reports.fingerprint_level.accuracy >= reports.patch_level.accuracy);
}

TEST_CASE("overlay rendering") {
    PatchParams params;  // sigma 12, m 10
    const GrayImage img(200, 200, 100);

    SUBCASE("no patches: plain color conversion") {
        FingerprintResult empty;
        const RgbImage out = render_overlay(img, empty, params);
        CHECK(out.data == to_rgb(img).data);
    }

    SUBCASE("one live patch paints one green square at the computed center") {
        FingerprintResult one;
        PerPatchResult p;
        p.cell_row = 0;
        p.cell_col = 0;
        p.decision = Label::Live;
        one.per_patch.push_back(p);
        one.patch_count = 1;

        const int cx = patch_center_px(0, params);
        CHECK(cx == 61);  // 1 + 10*12/2
        const RgbImage out = render_overlay(img, one, params);

        const std::uint8_t* center = out.px(cx, cx);
        CHECK(center[1] > center[0]);  // green dominates
        CHECK(center[1] > 150);

        // square spans sigma pixels; just outside is untouched gray
        const std::uint8_t* outside = out.px(cx, cx + params.sigma);
        CHECK(outside[0] == 100);
        CHECK(outside[1] == 100);
        CHECK(outside[2] == 100);

        std::size_t painted = 0;
        for (std::size_t i = 0; i < out.data.size(); i += 3) {
            if (out.data[i + 1] != out.data[i]) ++painted;
        }
        CHECK(painted == static_cast<std::size_t>(params.sigma) * params.sigma);
    }

    SUBCASE("marker colors follow the patch decisions") {
        FingerprintResult mixed;
        for (int i = 0; i < 3; ++i) {
            PerPatchResult p;
            p.cell_row = i;
            p.cell_col = i;
            p.decision = i == 1 ? Label::Spoof : Label::Live;
            mixed.per_patch.push_back(p);
        }
        mixed.patch_count = 3;
        const RgbImage out = render_overlay(img, mixed, params);
        for (int i = 0; i < 3; ++i) {
            const int c = patch_center_px(i, params);
            const std::uint8_t* px = out.px(c, c);
            if (i == 1) {
                CHECK(px[0] > px[1]);  // red
            } else {
                CHECK(px[1] > px[0]);  // green
            }
        }
    }

    SUBCASE("geometry mismatch is an error") {
        FingerprintResult bad;
        PerPatchResult p;
        p.cell_row = 50;  // center far outside a 200px image
        p.cell_col = 50;
        bad.per_patch.push_back(p);
        CHECK_THROWS_WITH_AS(render_overlay(img, bad, params),
                             doctest::Contains("inconsistent geometry"),
                             std::invalid_argument);
    }
}
