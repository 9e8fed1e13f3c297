#include "slslr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "slslr/errors.hpp"

namespace slslr {

void save_train_log_csv(const TrainLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "step,l1,l2,l3,total,embedding_std\n";
    out.precision(17);
    for (const TrainStep& s : log.steps)
        out << s.step << ',' << s.l1 << ',' << s.l2 << ',' << s.l3 << ',' << s.total << ','
            << s.embedding_std << '\n';
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

double embedding_std(const Mat& z) {
    if (z.rows() < 2) throw ArgumentError("embedding_std: need at least 2 rows");
    const double b = static_cast<double>(z.rows());
    double acc = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double mean = z.col(c).mean();
        acc += std::sqrt((z.col(c).array() - mean).square().sum() / b);
    }
    return acc / static_cast<double>(z.cols());
}

namespace {

std::vector<Mat*> collect(ModelParams& p) {
    std::vector<Mat*> out;
    visit_params(p, [&](const std::string&, Mat& m) { out.push_back(&m); });
    return out;
}

} // namespace

void sgd_step(ModelParams& params, const ModelParams& grads, ModelParams& momentum, double lr,
              double mu) {
    auto ps = collect(params);
    auto gs = collect(const_cast<ModelParams&>(grads));
    auto vs = collect(momentum);
    if (ps.size() != gs.size() || ps.size() != vs.size())
        throw ArgumentError("sgd_step: parameter/gradient structure mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        *vs[i] = mu * *vs[i] + *gs[i];
        *ps[i] -= lr * *vs[i];
    }
}

namespace {

void check_config(const Dataset& dataset, const PretrainConfig& cfg) {
    if (dataset.samples.empty()) throw ArgumentError("pretrain: empty dataset");
    if (cfg.epochs < 1) throw ArgumentError("pretrain: epochs must be >= 1");
    if (cfg.batch_size < 2) throw ArgumentError("pretrain: batch_size must be >= 2");
    if (!(cfg.learning_rate > 0.0)) throw ArgumentError("pretrain: learning_rate must be > 0");
    if (cfg.collapse_log_every < 1) throw ArgumentError("pretrain: collapse_log_every must be >= 1");
    if (static_cast<int>(dataset.samples.size()) < cfg.batch_size)
        throw ArgumentError("pretrain: batch_size exceeds dataset size");
    for (const Sample& s : dataset.samples)
        if (s.sequence.frame_count() != cfg.encoder.max_len)
            throw ArgumentError("pretrain: sample '" + s.sample_id + "' has " +
                                std::to_string(s.sequence.frame_count()) +
                                " frames, expected max_len=" + std::to_string(cfg.encoder.max_len) +
                                " (run pad_or_truncate first)");
}

} // namespace

PretrainResult pretrain(const Dataset& dataset, const PretrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    check_config(dataset, cfg);

    EncoderConfig enc = cfg.encoder;
    enc.input_dim = dataset.landmark_count * dataset.coord_dim;
    if (cfg.no_layernorm) enc.input_layernorm_count = 0;
    const HeadConfig head = cfg.head;

    ModelParams params = init_params(enc, head, cfg.seed);
    ModelParams grads = zeros_like(params);
    ModelParams momentum = zeros_like(params);

    // Dropout draws come from one sequentially-used stream; everything
    // sample-scoped derives from (seed, epoch, sample id).
    Rng run_rng(derive_seed(cfg.seed, 0xd09000ULL));

    const PredictorBranch pred_branch = predictor_branch(cfg.ablation);
    const std::size_t n_samples = dataset.samples.size();
    const std::size_t batches = n_samples / static_cast<std::size_t>(cfg.batch_size);

    TrainLog log;
    long step = 0;
    double last_std = 0.0;

    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(derive_seed(cfg.seed, 0xe90c4ULL, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), epoch_rng);

        for (std::size_t b = 0; b < batches; ++b) {
            std::vector<Mat> x, x1, x2;
            x.reserve(static_cast<std::size_t>(cfg.batch_size));
            x1.reserve(x.capacity());
            x2.reserve(x.capacity());
            for (int i = 0; i < cfg.batch_size; ++i) {
                const Sample& s = dataset.samples[order[b * cfg.batch_size + i]];
                Rng sample_rng(derive_seed(cfg.seed, 0xa76e2ULL,
                                           static_cast<std::uint64_t>(epoch),
                                           fnv1a(s.sample_id)));
                auto [v1, v2] = make_positive_pair(s.sequence, cfg.augmentation, sample_rng);
                x.push_back(to_matrix(s.sequence));
                x1.push_back(to_matrix(v1));
                x2.push_back(to_matrix(v2));
            }

            EncodeCache enc_c, enc_c1, enc_c2;
            MlpCache proj_c, proj_c1, proj_c2, pred_c;
            Mat z, z1, z2, p;
            LossGrads lg;
            LossBreakdown breakdown;
            try {
                const Mat y = encode(params, enc, x, Mode::Train, &run_rng, &enc_c);
                const Mat y1 = encode(params, enc, x1, Mode::Train, &run_rng, &enc_c1);
                const Mat y2 = encode(params, enc, x2, Mode::Train, &run_rng, &enc_c2);
                z = project(params, y, &proj_c);
                z1 = project(params, y1, &proj_c1);
                z2 = project(params, y2, &proj_c2);
                const Mat& pred_in = pred_branch == PredictorBranch::Original ? z : z2;
                if (!cfg.ablation.no_predictor) p = predict(params, pred_in, &pred_c);
                breakdown = ablation_loss(z, z1, z2, p, cfg.ablation, &lg,
                                          cfg.normalize_projections);
            } catch (const NumericError& e) {
                throw NumericError("pretrain: non-finite values at step " + std::to_string(step) +
                                   ": " + e.what());
            }
            if (!std::isfinite(breakdown.total))
                throw NumericError("pretrain: non-finite loss at step " + std::to_string(step) +
                                   " (l1=" + std::to_string(breakdown.l1) +
                                   ", l2=" + std::to_string(breakdown.l2) +
                                   ", l3=" + std::to_string(breakdown.l3) + ")");

            visit_params(grads, [](const std::string&, Mat& m) { m.setZero(); });
            Mat dz = std::move(lg.dz);
            Mat dz2 = std::move(lg.dz2);
            if (!cfg.ablation.no_predictor) {
                Mat d_pred_in = predict_backward(params, pred_c, lg.dp, grads);
                (pred_branch == PredictorBranch::Original ? dz : dz2) += d_pred_in;
            }
            encode_backward(params, enc, enc_c, project_backward(params, proj_c, dz, grads), grads);
            encode_backward(params, enc, enc_c1, project_backward(params, proj_c1, lg.dz1, grads),
                            grads);
            encode_backward(params, enc, enc_c2, project_backward(params, proj_c2, dz2, grads),
                            grads);

            sgd_step(params, grads, momentum, cfg.learning_rate, cfg.momentum);

            if (step % cfg.collapse_log_every == 0) last_std = embedding_std(z);
            log.steps.push_back({step, breakdown.l1, breakdown.l2, breakdown.l3, breakdown.total,
                                 last_std});
            ++step;
        }
    }

    Checkpoint ckpt;
    ckpt.encoder = enc;
    ckpt.head = head;
    ckpt.params = std::move(params);
    ckpt.step = step;
    ckpt.seed = cfg.seed;
    std::ostringstream rng_text;
    rng_text << run_rng;
    ckpt.rng_state = rng_text.str();

    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(ckpt), std::move(log)};
}

std::map<std::string, PretrainResult> run_ablation_suite(const Dataset& dataset,
                                                         const PretrainConfig& base) {
    std::map<std::string, PretrainResult> out;
    auto variant = [&](AblationFlags flags, bool no_ln) {
        PretrainConfig cfg = base;
        cfg.ablation = flags;
        cfg.no_layernorm = no_ln;
        return pretrain(dataset, cfg);
    };
    out.emplace("full", variant({}, false));
    out.emplace("without_p_and_LN", variant({.no_predictor = true}, true));
    out.emplace("without_p_with_LN", variant({.no_predictor = true}, false));
    out.emplace("without_o", variant({.no_original = true}, false));
    out.emplace("perm", variant({.permuted_branches = true}, false));
    return out;
}

} // namespace slslr
