#include <benchmark/benchmark.h>

#include "fpl/nn_kernels.hpp"
#include "fpl/orientation_field.hpp"
#include "fpl/patch_sampler.hpp"
#include "fpl/rng.hpp"
#include "fpl/synthetic.hpp"

namespace {

using namespace fpl;

const GrayImage& bench_image() {
    static const GrayImage img =
        generate_synthetic_ridge(600, 600, 35.0, 10.0, 160.0, 1, 2.0);
    return img;
}

void BM_field_serial(benchmark::State& state) {
    for (auto _ : state) {
        auto field = build_orientation_field_serial(bench_image(), GridParams{12});
        benchmark::DoNotOptimize(field.magnitude.data());
    }
}
BENCHMARK(BM_field_serial)->Unit(benchmark::kMillisecond);

void BM_field_parallel(benchmark::State& state) {
    for (auto _ : state) {
        auto field = build_orientation_field(bench_image(), GridParams{12}, true);
        benchmark::DoNotOptimize(field.magnitude.data());
    }
}
BENCHMARK(BM_field_parallel)->Unit(benchmark::kMillisecond);

void BM_dense_sample_serial(benchmark::State& state) {
    PatchParams params;
    params.noise_factor = 0.1;
    for (auto _ : state) {
        auto patches = dense_sample_serial(bench_image(), params);
        benchmark::DoNotOptimize(patches.data());
    }
}
BENCHMARK(BM_dense_sample_serial)->Unit(benchmark::kMillisecond);

void BM_dense_sample_parallel(benchmark::State& state) {
    PatchParams params;
    params.noise_factor = 0.1;
    for (auto _ : state) {
        auto patches = dense_sample(bench_image(), params, {}, {}, true);
        benchmark::DoNotOptimize(patches.data());
    }
}
BENCHMARK(BM_dense_sample_parallel)->Unit(benchmark::kMillisecond);

struct ConvFixture {
    int n = 8, c = 8, h = 41, w = 41, f = 16, k = 3;
    std::vector<double> x, wt, b, y;

    ConvFixture() {
        Rng rng(3);
        x.resize(static_cast<std::size_t>(n) * c * h * w);
        wt.resize(static_cast<std::size_t>(f) * c * k * k);
        b.resize(f);
        y.resize(static_cast<std::size_t>(n) * f * h * w);
        for (auto& v : x) v = rng.uniform(-1, 1);
        for (auto& v : wt) v = rng.uniform(-1, 1);
        for (auto& v : b) v = rng.uniform(-1, 1);
    }
};

void BM_conv_forward_serial(benchmark::State& state) {
    ConvFixture fx;
    for (auto _ : state) {
        nn::conv2d_forward(fx.x.data(), fx.n, fx.c, fx.h, fx.w, fx.wt.data(),
                           fx.b.data(), fx.f, fx.k, fx.y.data(), false);
        benchmark::DoNotOptimize(fx.y.data());
    }
}
BENCHMARK(BM_conv_forward_serial)->Unit(benchmark::kMillisecond);

void BM_conv_forward_parallel(benchmark::State& state) {
    ConvFixture fx;
    for (auto _ : state) {
        nn::conv2d_forward(fx.x.data(), fx.n, fx.c, fx.h, fx.w, fx.wt.data(),
                           fx.b.data(), fx.f, fx.k, fx.y.data(), true);
        benchmark::DoNotOptimize(fx.y.data());
    }
}
BENCHMARK(BM_conv_forward_parallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
