#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "slslr/loss.hpp"
#include "slslr/model.hpp"
#include "slslr/rng.hpp"
#include "slslr/types.hpp"

namespace testutil {

using slslr::Dataset;
using slslr::Mat;
using slslr::ModelParams;
using slslr::Sample;
using slslr::SkeletonSequence;

inline SkeletonSequence random_sequence(int n, int l, int d, slslr::Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    SkeletonSequence seq(n, l, d);
    for (auto& v : seq.values) v = static_cast<float>(gauss(rng));
    return seq;
}

inline Dataset random_dataset(int samples, int classes, int n, int l, int d, std::uint64_t seed) {
    slslr::Rng rng(seed);
    Dataset dataset;
    dataset.class_count = classes;
    dataset.landmark_count = l;
    dataset.coord_dim = d;
    dataset.max_len = n;
    for (int i = 0; i < samples; ++i) {
        Sample s;
        s.sample_id = "s" + std::to_string(i);
        s.label = i % classes;
        s.sequence = random_sequence(n, l, d, rng);
        dataset.samples.push_back(std::move(s));
    }
    return dataset;
}

inline slslr::EncoderConfig tiny_encoder(int input_dim = 6, int max_len = 8) {
    slslr::EncoderConfig cfg;
    cfg.blocks = 2;
    cfg.heads = 2;
    cfg.embed_dim = 16;
    cfg.dropout = 0.0;
    cfg.max_len = max_len;
    cfg.input_dim = input_dim;
    return cfg;
}

inline slslr::HeadConfig tiny_head() {
    slslr::HeadConfig cfg;
    cfg.projection_hidden = 16;
    cfg.projection_out = 8;
    cfg.predictor_hidden = 8;
    return cfg;
}

inline Eigen::VectorXd flatten_params(const ModelParams& params) {
    std::vector<double> values;
    slslr::visit_params(params, [&](const std::string&, const Mat& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
    });
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline void unflatten_params(ModelParams& params, const Eigen::VectorXd& flat) {
    Eigen::Index i = 0;
    slslr::visit_params(params, [&](const std::string&, Mat& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat(i++);
    });
}

/// The training step's forward/backward wiring, reproduced for gradient
/// checks: three shared-weight branches, optional ablation routing, batch-mean
/// loss. Dropout-free (eval-mode forward), so the loss is a deterministic
/// function of (params, inputs).
inline slslr::LossBreakdown loss_and_grads(const ModelParams& params,
                                           const slslr::EncoderConfig& enc,
                                           const std::vector<Mat>& x, const std::vector<Mat>& x1,
                                           const std::vector<Mat>& x2,
                                           const slslr::AblationFlags& flags, ModelParams* grads,
                                           bool normalize = false) {
    using namespace slslr;
    EncodeCache ec, ec1, ec2;
    MlpCache pc, pc1, pc2, predc;
    const Mat y = encode(params, enc, x, Mode::Eval, nullptr, grads ? &ec : nullptr);
    const Mat y1 = encode(params, enc, x1, Mode::Eval, nullptr, grads ? &ec1 : nullptr);
    const Mat y2 = encode(params, enc, x2, Mode::Eval, nullptr, grads ? &ec2 : nullptr);
    const Mat z = project(params, y, grads ? &pc : nullptr);
    const Mat z1 = project(params, y1, grads ? &pc1 : nullptr);
    const Mat z2 = project(params, y2, grads ? &pc2 : nullptr);
    const PredictorBranch branch = predictor_branch(flags);
    const Mat& pred_in = branch == PredictorBranch::Original ? z : z2;
    const Mat p = flags.no_predictor ? Mat() : predict(params, pred_in, grads ? &predc : nullptr);

    LossGrads lg;
    const LossBreakdown breakdown =
        ablation_loss(z, z1, z2, p, flags, grads ? &lg : nullptr, normalize);
    if (grads) {
        Mat dz = std::move(lg.dz);
        Mat dz2 = std::move(lg.dz2);
        if (!flags.no_predictor) {
            Mat d_pred_in = predict_backward(params, predc, lg.dp, *grads);
            (branch == PredictorBranch::Original ? dz : dz2) += d_pred_in;
        }
        encode_backward(params, enc, ec, project_backward(params, pc, dz, *grads), *grads);
        encode_backward(params, enc, ec1, project_backward(params, pc1, lg.dz1, *grads), *grads);
        encode_backward(params, enc, ec2, project_backward(params, pc2, dz2, *grads), *grads);
    }
    return breakdown;
}

/// Convex-solver reference for probe accuracy: full-batch gradient descent
/// on multinomial logistic regression, run long enough to approach the
/// optimum. Independent of the production probe path.
inline double oracle_probe_accuracy(const Mat& train_feats, const std::vector<int>& train_labels,
                                    const Mat& test_feats, const std::vector<int>& test_labels,
                                    int classes, int iterations = 3000, double lr = 0.5) {
    const auto d = train_feats.cols();
    Mat w = Mat::Zero(d, classes);
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
    const auto m = train_feats.rows();

    for (int it = 0; it < iterations; ++it) {
        Mat scores = train_feats * w;
        scores.rowwise() += b;
        for (Eigen::Index r = 0; r < m; ++r) {
            const double mx = scores.row(r).maxCoeff();
            Eigen::ArrayXd e = (scores.row(r).array() - mx).exp();
            scores.row(r) = (e / e.sum()).matrix();
            scores(r, train_labels[static_cast<std::size_t>(r)]) -= 1.0;
        }
        scores /= static_cast<double>(m);
        w -= lr * (train_feats.transpose() * scores);
        b -= lr * scores.colwise().sum();
    }

    Mat scores = test_feats * w;
    scores.rowwise() += b;
    std::size_t hits = 0;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        Eigen::Index best = 0;
        scores.row(r).maxCoeff(&best);
        if (best == test_labels[static_cast<std::size_t>(r)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

/// Temp directory that cleans up after itself.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("slslr_test_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

} // namespace testutil
