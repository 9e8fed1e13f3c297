#include <benchmark/benchmark.h>

#include "slslr/augmentation.hpp"
#include "slslr/evaluation.hpp"
#include "slslr/loss.hpp"
#include "slslr/model.hpp"
#include "slslr/synthetic.hpp"

using namespace slslr;

namespace {

SkeletonSequence bench_sequence(int n = 64, int l = 75, int d = 2) {
    Rng rng(1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SkeletonSequence seq(n, l, d);
    for (auto& v : seq.values) v = static_cast<float>(gauss(rng));
    return seq;
}

EncoderConfig bench_encoder(int blocks, int dim) {
    EncoderConfig cfg;
    cfg.blocks = blocks;
    cfg.embed_dim = dim;
    cfg.heads = 8;
    cfg.max_len = 64;
    cfg.input_dim = 150;
    cfg.dropout = 0.0;
    return cfg;
}

std::vector<Mat> bench_batch(int b, int n, int f) {
    Rng rng(2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Mat> batch;
    for (int i = 0; i < b; ++i) {
        Mat x(n, f);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < f; ++c) x(r, c) = gauss(rng);
        batch.push_back(std::move(x));
    }
    return batch;
}

void BM_PartPermutationPair(benchmark::State& state) {
    const SkeletonSequence seq = bench_sequence();
    PartPermutationConfig cfg;
    Rng rng(3);
    for (auto _ : state) {
        auto pair = part_permutation_pair(seq, cfg, rng);
        benchmark::DoNotOptimize(pair.first.values.data());
    }
}
BENCHMARK(BM_PartPermutationPair);

void BM_ClassicalAugment(benchmark::State& state) {
    const SkeletonSequence seq = bench_sequence();
    ClassicalAugmentSpec spec;
    Rng rng(4);
    for (auto _ : state) {
        SkeletonSequence out = classical_augment(seq, spec, rng);
        benchmark::DoNotOptimize(out.values.data());
    }
}
BENCHMARK(BM_ClassicalAugment);

void BM_EncodeTiny(benchmark::State& state) {
    const EncoderConfig cfg = bench_encoder(2, 64);
    const ModelParams params = init_params(cfg, HeadConfig{}, 5);
    const auto batch = bench_batch(static_cast<int>(state.range(0)), 64, 150);
    for (auto _ : state) {
        Mat y = encode(params, cfg, batch, Mode::Eval);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_EncodeTiny)->Arg(1)->Arg(8)->Arg(32);

void BM_EncodeDefault(benchmark::State& state) {
    const EncoderConfig cfg = bench_encoder(12, 512);
    const ModelParams params = init_params(cfg, HeadConfig{}, 6);
    const auto batch = bench_batch(1, 64, 150);
    for (auto _ : state) {
        Mat y = encode(params, cfg, batch, Mode::Eval);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_EncodeDefault);

void BM_ThreeTermLoss(benchmark::State& state) {
    Rng rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto b = state.range(0);
    Mat z(b, 128), z1(b, 128), z2(b, 128), p(b, 128);
    for (Mat* m : {&z, &z1, &z2, &p})
        for (Eigen::Index r = 0; r < b; ++r)
            for (int c = 0; c < 128; ++c) (*m)(r, c) = gauss(rng);
    for (auto _ : state) {
        LossGrads grads;
        LossBreakdown out = sl_fpn_loss(z, z1, z2, p, &grads);
        benchmark::DoNotOptimize(out.total);
        benchmark::DoNotOptimize(grads.dz.data());
    }
}
BENCHMARK(BM_ThreeTermLoss)->Arg(32)->Arg(512);

void BM_GenerateSynthetic(benchmark::State& state) {
    SyntheticConfig cfg;
    cfg.class_count = 10;
    cfg.samples_per_class = 20;
    cfg.n = 24;
    cfg.l = 5;
    cfg.d = 2;
    for (auto _ : state) {
        cfg.seed += 1;
        Dataset data = generate_synthetic(cfg);
        benchmark::DoNotOptimize(data.samples.size());
    }
}
BENCHMARK(BM_GenerateSynthetic);

} // namespace

BENCHMARK_MAIN();
