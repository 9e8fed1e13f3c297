#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "slslr/errors.hpp"
#include "slslr/synthetic.hpp"
#include "slslr/trainer.hpp"

#include "helpers.hpp"

using namespace slslr;

namespace {

SyntheticConfig tiny_synth(std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.class_count = 4;
    cfg.samples_per_class = 16;
    cfg.n = 12;
    cfg.l = 3;
    cfg.d = 2;
    cfg.noise_scale = 0.8;
    cfg.seed = seed;
    return cfg;
}

PretrainConfig tiny_pretrain(std::uint64_t seed) {
    PretrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.01;
    cfg.seed = seed;
    cfg.encoder = testutil::tiny_encoder(6, 12);
    cfg.head = testutil::tiny_head();
    cfg.augmentation.mode = AugmentationMode::PartPermutation;
    return cfg;
}

} // namespace

TEST_CASE("embedding_std definition") {
    SUBCASE("identical rows collapse to zero") {
        Mat z(3, 4);
        z << 1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4;
        CHECK(embedding_std(z) == 0.0);
    }
    SUBCASE("analytic two-row case") {
        Mat z(2, 2);
        z << 1, 0, 0, 1;
        CHECK(embedding_std(z) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("matches the textbook two-pass formula") {
        Rng rng(1);
        std::normal_distribution<double> gauss(0.0, 2.0);
        Mat z(17, 9);
        for (Eigen::Index r = 0; r < z.rows(); ++r)
            for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = gauss(rng);

        double expect = 0.0;
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            double mean = 0.0;
            for (Eigen::Index r = 0; r < z.rows(); ++r) mean += z(r, c);
            mean /= static_cast<double>(z.rows());
            double var = 0.0;
            for (Eigen::Index r = 0; r < z.rows(); ++r) var += (z(r, c) - mean) * (z(r, c) - mean);
            var /= static_cast<double>(z.rows());
            expect += std::sqrt(var);
        }
        expect /= static_cast<double>(z.cols());
        CHECK(std::abs(embedding_std(z) - expect) < 1e-12);
    }
    SUBCASE("single row is rejected") {
        CHECK_THROWS_AS(embedding_std(Mat::Zero(1, 4)), ArgumentError);
    }
}

TEST_CASE("sgd_step with zero learning rate leaves parameters bit-identical") {
    const EncoderConfig enc = testutil::tiny_encoder();
    const HeadConfig head = testutil::tiny_head();
    ModelParams params = init_params(enc, head, 2);
    const Eigen::VectorXd before = testutil::flatten_params(params);

    ModelParams grads = init_params(enc, head, 3); // arbitrary nonzero gradients
    ModelParams momentum = zeros_like(params);
    sgd_step(params, grads, momentum, 0.0, 0.9);
    const Eigen::VectorXd after = testutil::flatten_params(params);
    CHECK(before == after);
}

TEST_CASE("one small SGD step decreases the loss on a frozen batch") {
    const EncoderConfig enc = testutil::tiny_encoder(6, 8);
    const HeadConfig head = testutil::tiny_head();

    int improved = 0;
    Rng data_rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ModelParams params = init_params(enc, head, 100 + static_cast<std::uint64_t>(trial));
        auto batch = [&]() {
            std::vector<Mat> b;
            for (int i = 0; i < 3; ++i) {
                Mat x(8, 6);
                for (int r = 0; r < 8; ++r)
                    for (int c = 0; c < 6; ++c) x(r, c) = gauss(data_rng);
                b.push_back(std::move(x));
            }
            return b;
        };
        const std::vector<Mat> x = batch(), x1 = batch(), x2 = batch();

        ModelParams grads = zeros_like(params);
        const double before = testutil::loss_and_grads(params, enc, x, x1, x2, {}, &grads).total;
        ModelParams momentum = zeros_like(params);
        sgd_step(params, grads, momentum, 1e-5, 0.0);
        const double after = testutil::loss_and_grads(params, enc, x, x1, x2, {}, nullptr).total;
        if (after < before) ++improved;
    }
    CHECK(improved >= 18);
}

TEST_CASE("pretrain is deterministic and validates its inputs") {
    Dataset data = generate_synthetic(tiny_synth(5));
    const PretrainConfig cfg = tiny_pretrain(6);

    SUBCASE("bit-identical checkpoints and logs for one seed") {
        const PretrainResult a = pretrain(data, cfg);
        const PretrainResult b = pretrain(data, cfg);
        CHECK(testutil::flatten_params(a.checkpoint.params) ==
              testutil::flatten_params(b.checkpoint.params));
        CHECK(a.checkpoint.rng_state == b.checkpoint.rng_state);
        REQUIRE(a.log.steps.size() == b.log.steps.size());
        for (std::size_t i = 0; i < a.log.steps.size(); ++i) {
            CHECK(a.log.steps[i].total == b.log.steps[i].total);
            CHECK(a.log.steps[i].embedding_std == b.log.steps[i].embedding_std);
        }

        PretrainConfig other = cfg;
        other.seed = 7;
        const PretrainResult c = pretrain(data, other);
        CHECK(testutil::flatten_params(a.checkpoint.params) !=
              testutil::flatten_params(c.checkpoint.params));
    }
    SUBCASE("argument errors") {
        PretrainConfig bad = cfg;
        bad.epochs = 0;
        CHECK_THROWS_AS(pretrain(data, bad), ArgumentError);

        bad = cfg;
        bad.batch_size = 1;
        CHECK_THROWS_AS(pretrain(data, bad), ArgumentError);

        bad = cfg;
        bad.batch_size = 1000;
        CHECK_THROWS_AS(pretrain(data, bad), ArgumentError);

        bad = cfg;
        bad.learning_rate = 0.0;
        CHECK_THROWS_AS(pretrain(data, bad), ArgumentError);

        CHECK_THROWS_AS(pretrain(Dataset{}, cfg), ArgumentError);

        // sequences must be normalized to max_len up front
        PretrainConfig wide = cfg;
        wide.encoder.max_len = 16;
        CHECK_THROWS_AS(pretrain(data, wide), ArgumentError);
    }
}

TEST_CASE("pretraining reduces the loss on planted synthetic data") {
    int passed = 0;
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        SyntheticConfig synth = tiny_synth(seed);
        synth.samples_per_class = 20;
        const Dataset data = generate_synthetic(synth);

        PretrainConfig cfg = tiny_pretrain(seed);
        cfg.epochs = 40; // 5 batches/epoch -> 200 steps
        cfg.batch_size = 16;
        const PretrainResult result = pretrain(data, cfg);
        REQUIRE(result.log.steps.size() == 200);

        double first = 0, last = 0;
        for (int i = 0; i < 10; ++i) {
            first += result.log.steps[static_cast<std::size_t>(i)].total;
            last += result.log.steps[result.log.steps.size() - 10 + i].total;
        }
        if (last < first) ++passed;
    }
    CHECK(passed == 3);
}

TEST_CASE("train log CSV format and collapse logging cadence") {
    const Dataset data = generate_synthetic(tiny_synth(21));
    PretrainConfig cfg = tiny_pretrain(22);
    cfg.epochs = 3;
    cfg.collapse_log_every = 4;
    const PretrainResult result = pretrain(data, cfg);

    // std re-measured on steps 0, 4, 8, ... and carried forward between
    const auto& steps = result.log.steps;
    REQUIRE(steps.size() == 12);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        CHECK(std::isfinite(steps[i].embedding_std));
        if (i % 4 != 0) CHECK(steps[i].embedding_std == steps[i - 1].embedding_std);
    }

    testutil::TempDir dir("trainlog");
    save_train_log_csv(result.log, dir.path / "log.csv");
    std::ifstream in(dir.path / "log.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,l1,l2,l3,total,embedding_std");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 12);
}

TEST_CASE("ablation suite orchestrates the five variants transparently") {
    const Dataset data = generate_synthetic(tiny_synth(31));
    PretrainConfig base = tiny_pretrain(32);
    base.epochs = 2;

    const auto suite = run_ablation_suite(data, base);
    REQUIRE(suite.size() == 5);
    for (const char* name :
         {"full", "without_p_and_LN", "without_p_with_LN", "without_o", "perm"})
        CHECK(suite.count(name) == 1);

    const PretrainResult standalone = pretrain(data, base);
    const PretrainResult& full = suite.at("full");
    REQUIRE(full.log.steps.size() == standalone.log.steps.size());
    for (std::size_t i = 0; i < full.log.steps.size(); ++i)
        CHECK(full.log.steps[i].total == standalone.log.steps[i].total);
    CHECK(testutil::flatten_params(full.checkpoint.params) ==
          testutil::flatten_params(standalone.checkpoint.params));

    // the ablated variants genuinely differ from the full run
    CHECK(suite.at("without_p_and_LN").log.steps.back().total !=
          full.log.steps.back().total);
    CHECK(suite.at("perm").log.steps.back().total != full.log.steps.back().total);
}

TEST_CASE("diverging training aborts with a numeric diagnostic") {
    const Dataset data = generate_synthetic(tiny_synth(41));
    PretrainConfig cfg = tiny_pretrain(42);
    cfg.epochs = 50;
    cfg.learning_rate = 1e14;
    try {
        pretrain(data, cfg);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}
