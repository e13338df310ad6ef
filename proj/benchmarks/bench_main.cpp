#include <benchmark/benchmark.h>

#include <random>

#include "plumeseg/dataset.hpp"
#include "plumeseg/enhance.hpp"
#include "plumeseg/models.hpp"
#include "plumeseg/pipeline.hpp"
#include "plumeseg/sector.hpp"
#include "plumeseg/synth.hpp"

namespace {

using namespace plumeseg;

GridImage random_image(int n) {
    GridImage img(GridSpec{0.0, 0.0, kDefaultCellSize, n, n});
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            img.set(r, c, d(rng));
        }
    }
    return img;
}

void BM_MoranEnhance(benchmark::State& state) {
    const auto img = random_image(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(moran_enhance(img));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_MoranEnhance)->Arg(18)->Arg(60)->Arg(240);

void BM_PixelsInSector(benchmark::State& state) {
    SceneConfig cfg;
    cfg.n_ships = 1;
    cfg.seed = 3;
    const auto scene = generate_scene(cfg);
    const auto images = build_ship_images(to_scene_inputs(scene), PipelineParams{});
    if (images.empty()) {
        state.SkipWithError("no ship image");
        return;
    }
    const auto& img = images.front();
    for (auto _ : state) {
        benchmark::DoNotOptimize(pixels_in_sector(img.sector, img.no2));
    }
}
BENCHMARK(BM_PixelsInSector);

void BM_SceneToDataset(benchmark::State& state) {
    SceneConfig cfg;
    cfg.seed = 5;
    const auto scene = generate_scene(cfg);
    const auto inputs = to_scene_inputs(scene);
    for (auto _ : state) {
        const auto images = build_ship_images(inputs, PipelineParams{});
        benchmark::DoNotOptimize(assemble(images, nullptr));
    }
}
BENCHMARK(BM_SceneToDataset)->Unit(benchmark::kMillisecond);

void BM_GbtFit(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Matrix x(static_cast<std::size_t>(n), 17);
    std::vector<int> y(x.rows);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d(0.0, 1.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            x(i, j) = d(rng);
            s += j < 3 ? x(i, j) : 0.0;
        }
        y[i] = s + 0.5 * d(rng) > 1.0 ? 1 : 0;
    }
    GBTParams p;
    p.n_trees = 50;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_gbt(x, y, p));
    }
}
BENCHMARK(BM_GbtFit)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
