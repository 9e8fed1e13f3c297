#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "slslr/checkpoint.hpp"
#include "slslr/errors.hpp"
#include "slslr/loss.hpp"
#include "slslr/model.hpp"

#include "helpers.hpp"

using namespace slslr;

namespace {

std::vector<Mat> random_batch(int b, int n, int f, Rng& rng) {
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

} // namespace

TEST_CASE("default config shape contracts") {
    EncoderConfig enc; // 12 blocks, 8 heads, 512 dim
    HeadConfig head;
    const ModelParams params = init_params(enc, head, 1);

    Rng rng(2);
    const std::vector<Mat> batch = random_batch(2, 8, enc.input_dim, rng);
    const Mat y = encode(params, enc, batch, Mode::Eval);
    CHECK(y.rows() == 2);
    CHECK(y.cols() == 512);

    const Mat z = project(params, y);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 128);

    const Mat p = predict(params, z);
    CHECK(p.rows() == 2);
    CHECK(p.cols() == 128);
}

TEST_CASE("eval-mode forward is deterministic") {
    const EncoderConfig enc = testutil::tiny_encoder();
    const ModelParams params = init_params(enc, testutil::tiny_head(), 3);
    Rng rng(4);
    const std::vector<Mat> batch = random_batch(3, 8, enc.input_dim, rng);
    const Mat a = encode(params, enc, batch, Mode::Eval);
    const Mat b = encode(params, enc, batch, Mode::Eval);
    CHECK(a == b);
}

TEST_CASE("train-mode dropout is driven by the random source") {
    EncoderConfig enc = testutil::tiny_encoder();
    enc.dropout = 0.2;
    const ModelParams params = init_params(enc, testutil::tiny_head(), 3);
    Rng data_rng(5);
    const std::vector<Mat> batch = random_batch(2, 8, enc.input_dim, data_rng);
    Rng r1(6), r2(6), r3(7);
    const Mat a = encode(params, enc, batch, Mode::Train, &r1);
    const Mat b = encode(params, enc, batch, Mode::Train, &r2);
    const Mat c = encode(params, enc, batch, Mode::Train, &r3);
    CHECK(a == b);
    CHECK(a != c);
    CHECK_THROWS_AS(encode(params, enc, batch, Mode::Train), ArgumentError);
}

TEST_CASE("frame permutation changes the representation (100 seeds)") {
    // Positional information must flow into the pooled output: permuting
    // frames of a random input moves at least one coordinate by > 1e-6.
    EncoderConfig enc; // default model per the contract
    HeadConfig head;
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const ModelParams params = init_params(enc, head, seed);
        Rng rng(seed + 1000);
        std::vector<Mat> batch = random_batch(1, 6, enc.input_dim, rng);
        std::vector<Mat> permuted = batch;
        Mat& x = permuted.front();
        x.row(0).swap(x.row(5));
        x.row(1).swap(x.row(3));
        const Mat a = encode(params, enc, batch, Mode::Eval);
        const Mat b = encode(params, enc, permuted, Mode::Eval);
        if ((a - b).cwiseAbs().maxCoeff() <= 1e-6) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("projection first-layer pre-activation is linear") {
    const EncoderConfig enc = testutil::tiny_encoder();
    const HeadConfig head = testutil::tiny_head();
    const ModelParams params = init_params(enc, head, 11); // zero biases at init

    Rng rng(12);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat y(3, enc.embed_dim);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < enc.embed_dim; ++c) y(r, c) = gauss(rng);

    MlpCache c1, c2;
    project(params, y, &c1);
    project(params, 2.0 * y, &c2);
    CHECK((c2.pre - 2.0 * c1.pre).cwiseAbs().maxCoeff() < 1e-12);

    // direct matrix-product oracle
    const Mat expected = y * params.projection.fc1.w;
    CHECK((c1.pre - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero input with zero weights gives zero projection") {
    const EncoderConfig enc = testutil::tiny_encoder();
    const HeadConfig head = testutil::tiny_head();
    ModelParams params = init_params(enc, head, 13);
    params.projection.fc1.w.setZero();
    params.projection.fc2.w.setZero();
    const Mat z = project(params, Mat::Zero(2, enc.embed_dim));
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("predictor ReLU zeroes negative pre-activations") {
    const EncoderConfig enc = testutil::tiny_encoder();
    HeadConfig head = testutil::tiny_head(); // projection_out 8, predictor_hidden 8
    ModelParams params = init_params(enc, head, 14);
    params.predictor.fc1.w = Mat::Identity(8, 8);
    params.predictor.fc1.b.setZero();
    params.predictor.fc2.b.setConstant(0.25);

    Mat z = Mat::Constant(2, 8, -1.0); // all-negative input
    MlpCache cache;
    const Mat p = predict(params, z, &cache);
    CHECK(cache.hidden.cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index r = 0; r < p.rows(); ++r)
        for (Eigen::Index c = 0; c < p.cols(); ++c)
            CHECK(p(r, c) == doctest::Approx(0.25).epsilon(1e-15));

    const Mat p2 = predict(params, z);
    CHECK(p == p2); // deterministic under fixed params
}

TEST_CASE("forward_three_branch shares weights across branches") {
    const EncoderConfig enc = testutil::tiny_encoder();
    const HeadConfig head = testutil::tiny_head();
    ModelParams params = init_params(enc, head, 15);
    Rng rng(16);
    const std::vector<Mat> x = random_batch(2, 8, enc.input_dim, rng);

    SUBCASE("identical inputs produce identical projections") {
        const ThreeBranchOutput out = forward_three_branch(params, enc, x, x, x, Mode::Eval);
        CHECK(out.z == out.z1);
        CHECK(out.z == out.z2);
        CHECK(out.z.rows() == 2);
        CHECK(out.z.cols() == head.projection_out);
        CHECK(out.p.rows() == 2);
        CHECK(out.p.cols() == head.projection_out);
    }
    SUBCASE("perturbing encoder weights moves all three branches") {
        const std::vector<Mat> x1 = random_batch(2, 8, enc.input_dim, rng);
        const std::vector<Mat> x2 = random_batch(2, 8, enc.input_dim, rng);
        const ThreeBranchOutput before = forward_three_branch(params, enc, x, x1, x2, Mode::Eval);
        params.encoder.blocks[0].attn.q.w(0, 0) += 0.05;
        const ThreeBranchOutput after = forward_three_branch(params, enc, x, x1, x2, Mode::Eval);
        CHECK((before.z - after.z).cwiseAbs().maxCoeff() > 0.0);
        CHECK((before.z1 - after.z1).cwiseAbs().maxCoeff() > 0.0);
        CHECK((before.z2 - after.z2).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("shape mismatch between branches throws") {
        const std::vector<Mat> shorter = random_batch(2, 7, enc.input_dim, rng);
        CHECK_THROWS_AS(forward_three_branch(params, enc, x, shorter, x, Mode::Eval),
                        ArgumentError);
    }
}

TEST_CASE("parameter count follows the closed form") {
    auto expected_count = [](const EncoderConfig& e, const HeadConfig& h) -> std::size_t {
        std::size_t n = 0;
        n += static_cast<std::size_t>(e.input_dim) * e.embed_dim + e.embed_dim; // embed
        n += static_cast<std::size_t>(e.input_layernorm_count) * 2 * e.embed_dim;
        n += static_cast<std::size_t>(e.max_len) * e.embed_dim; // learned positions
        const std::size_t attn = 4ull * (static_cast<std::size_t>(e.embed_dim) * e.embed_dim +
                                         e.embed_dim);
        const std::size_t mlp = static_cast<std::size_t>(e.embed_dim) * 4 * e.embed_dim +
                                4ull * e.embed_dim +
                                static_cast<std::size_t>(4) * e.embed_dim * e.embed_dim +
                                e.embed_dim;
        n += static_cast<std::size_t>(e.blocks) * (attn + mlp + 4ull * e.embed_dim);
        n += static_cast<std::size_t>(e.embed_dim) * h.projection_hidden + h.projection_hidden;
        n += static_cast<std::size_t>(h.projection_hidden) * h.projection_out + h.projection_out;
        n += static_cast<std::size_t>(h.projection_out) * h.predictor_hidden + h.predictor_hidden;
        n += static_cast<std::size_t>(h.predictor_hidden) * h.projection_out + h.projection_out;
        return n;
    };

    const EncoderConfig enc;
    const HeadConfig head;
    const ModelParams params = init_params(enc, head, 17);
    CHECK(parameter_count(params) == expected_count(enc, head));
    CHECK(parameter_count(params) == 38302080u); // documented default-config constant

    EncoderConfig small = testutil::tiny_encoder();
    const ModelParams small_params = init_params(small, testutil::tiny_head(), 18);
    CHECK(parameter_count(small_params) == expected_count(small, testutil::tiny_head()));
}

TEST_CASE("analytic gradients match central finite differences") {
    const EncoderConfig enc = testutil::tiny_encoder(); // 2 blocks, dim 16
    const HeadConfig head = testutil::tiny_head();
    ModelParams params = init_params(enc, head, 19);

    Rng rng(20);
    const std::vector<Mat> x = random_batch(2, 5, enc.input_dim, rng);
    const std::vector<Mat> x1 = random_batch(2, 5, enc.input_dim, rng);
    const std::vector<Mat> x2 = random_batch(2, 5, enc.input_dim, rng);

    ModelParams grads = zeros_like(params);
    testutil::loss_and_grads(params, enc, x, x1, x2, {}, &grads);
    const Eigen::VectorXd flat = testutil::flatten_params(params);
    const Eigen::VectorXd grad_flat = testutil::flatten_params(grads);

    std::normal_distribution<double> gauss(0.0, 1.0);
    const double h = 1e-5;
    for (int dir = 0; dir < 8; ++dir) {
        Eigen::VectorXd d(flat.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = gauss(rng);
        d /= d.norm();

        auto eval = [&](double t) {
            ModelParams shifted = params;
            testutil::unflatten_params(shifted, flat + t * d);
            return testutil::loss_and_grads(shifted, enc, x, x1, x2, {}, nullptr).total;
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        const double analytic = grad_flat.dot(d);
        CHECK(std::abs(fd - analytic) / std::max(1.0, std::abs(fd)) < 1e-4);
    }
}

TEST_CASE("encode validates its inputs") {
    const EncoderConfig enc = testutil::tiny_encoder(6, 8);
    const ModelParams params = init_params(enc, testutil::tiny_head(), 21);
    Rng rng(22);
    CHECK_THROWS_AS(encode(params, enc, {}, Mode::Eval), ArgumentError);
    CHECK_THROWS_AS(encode(params, enc, random_batch(1, 9, 6, rng), Mode::Eval), ArgumentError);
    CHECK_THROWS_AS(encode(params, enc, random_batch(1, 8, 5, rng), Mode::Eval), ArgumentError);
    std::vector<Mat> ragged = random_batch(1, 8, 6, rng);
    ragged.push_back(random_batch(1, 7, 6, rng).front());
    CHECK_THROWS_AS(encode(params, enc, ragged, Mode::Eval), ArgumentError);
}

TEST_CASE("padding mask reproduces the truncated forward") {
    EncoderConfig enc = testutil::tiny_encoder(6, 10);
    enc.use_padding_mask = true;
    const ModelParams params = init_params(enc, testutil::tiny_head(), 23);

    Rng rng(24);
    const std::vector<Mat> full = random_batch(1, 6, 6, rng);
    std::vector<Mat> padded;
    Mat x = Mat::Zero(10, 6);
    x.topRows(6) = full.front();
    padded.push_back(x);
    const std::vector<int> lengths{6};

    EncoderConfig no_mask = enc;
    no_mask.use_padding_mask = false;
    no_mask.max_len = 10;
    const Mat masked = encode(params, enc, padded, Mode::Eval, nullptr, nullptr, &lengths);
    const Mat direct = encode(params, no_mask, full, Mode::Eval);
    CHECK((masked - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sinusoidal positional encoding works and differs from learned") {
    EncoderConfig enc = testutil::tiny_encoder();
    enc.positional_encoding = PositionalEncoding::Sinusoidal;
    const ModelParams params = init_params(enc, testutil::tiny_head(), 25);
    CHECK(params.encoder.pos.size() == 0);

    Rng rng(26);
    const std::vector<Mat> batch = random_batch(2, 8, enc.input_dim, rng);
    const Mat y = encode(params, enc, batch, Mode::Eval);
    CHECK(y.allFinite());

    const Mat table = sinusoidal_table(4, 6);
    CHECK(table(0, 0) == doctest::Approx(0.0));
    CHECK(table(0, 1) == doctest::Approx(1.0));
    CHECK(table(1, 0) == doctest::Approx(std::sin(1.0)));
}

TEST_CASE("checkpoint round-trip is byte-exact") {
    const EncoderConfig enc = testutil::tiny_encoder();
    const HeadConfig head = testutil::tiny_head();
    Checkpoint ckpt;
    ckpt.encoder = enc;
    ckpt.head = head;
    ckpt.params = init_params(enc, head, 27);
    ckpt.step = 42;
    ckpt.seed = 27;
    ckpt.rng_state = "12345 67890";

    testutil::TempDir dir("ckpt");
    save_checkpoint(ckpt, dir.path / "a");
    const Checkpoint loaded = load_checkpoint(dir.path / "a");
    CHECK(loaded.step == 42);
    CHECK(loaded.seed == 27);
    CHECK(loaded.rng_state == "12345 67890");
    CHECK(loaded.encoder == enc);
    save_checkpoint(loaded, dir.path / "b");

    for (const auto& entry : std::filesystem::directory_iterator(dir.path / "a")) {
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(dir.path / "b" / entry.path().filename(), std::ios::binary);
        const std::string ca((std::istreambuf_iterator<char>(fa)), {});
        const std::string cb((std::istreambuf_iterator<char>(fb)), {});
        CHECK(ca == cb);
    }

    // parameters survive the float32 cast on reload
    ModelParams expected = ckpt.params;
    visit_params(expected, [](const std::string&, Mat& m) {
        m = m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
    });
    bool equal = true;
    visit_params(loaded.params, [&](const std::string& name, const Mat& m) {
        const Mat* want = nullptr;
        visit_params(expected, [&](const std::string& n2, const Mat& m2) {
            if (n2 == name) want = &m2;
        });
        if (!want || *want != m) equal = false;
    });
    CHECK(equal);

    // a missing tensor file is an integrity error
    std::filesystem::remove(dir.path / "a" / "projection_fc1_w.bin");
    CHECK_THROWS(load_checkpoint(dir.path / "a"));
}
