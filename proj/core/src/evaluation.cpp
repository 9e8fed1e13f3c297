#include "slslr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "slslr/errors.hpp"
#include "slslr/rng.hpp"
#include "slslr/trainer.hpp"

namespace slslr {

using json = nlohmann::ordered_json;

std::string to_string(ProbeTarget t) {
    return t == ProbeTarget::Representation ? "representation" : "projection";
}

ProbeTarget probe_target_from_string(const std::string& s) {
    if (s == "representation") return ProbeTarget::Representation;
    if (s == "projection") return ProbeTarget::Projection;
    throw ArgumentError("unknown probe target '" + s + "'");
}

double student_t95(int dof) {
    // Two-sided 95% critical values; the normal quantile past the table.
    static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                       2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                       2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                       2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof < 1) throw ArgumentError("student_t95: dof must be >= 1");
    if (dof <= 30) return table[dof - 1];
    return 1.960;
}

void save_eval_report_json(const EvalReport& report, const std::filesystem::path& path) {
    json j;
    j["top1_mean"] = report.top1_mean;
    j["top1_ci95"] = report.top1_ci95;
    j["top5_mean"] = report.top5_mean ? json(*report.top5_mean) : json(nullptr);
    j["top5_ci95"] = report.top5_ci95 ? json(*report.top5_ci95) : json(nullptr);
    j["inertia"] = report.inertia;
    if (!report.source_tag.empty()) j["source_tag"] = report.source_tag;
    if (!report.target_tag.empty()) j["target_tag"] = report.target_tag;
    j["runs"] = json::array();
    for (const EvalRun& r : report.runs) {
        json run;
        run["top1"] = r.top1;
        run["top5"] = r.top5 ? json(*r.top5) : json(nullptr);
        j["runs"].push_back(std::move(run));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

Mat extract_embeddings(const Checkpoint& ckpt, const Dataset& dataset, ProbeTarget target,
                       int batch) {
    if (dataset.samples.empty()) throw ArgumentError("extract_embeddings: empty dataset");
    if (dataset.landmark_count * dataset.coord_dim != ckpt.encoder.input_dim)
        throw ArgumentError("extract_embeddings: dataset frame size " +
                            std::to_string(dataset.landmark_count * dataset.coord_dim) +
                            " does not match checkpoint input_dim " +
                            std::to_string(ckpt.encoder.input_dim));
    const int dim = target == ProbeTarget::Representation ? ckpt.encoder.embed_dim
                                                          : ckpt.head.projection_out;
    Mat out(static_cast<Eigen::Index>(dataset.samples.size()), dim);
    for (std::size_t begin = 0; begin < dataset.samples.size();
         begin += static_cast<std::size_t>(batch)) {
        const std::size_t end = std::min(dataset.samples.size(), begin + batch);
        std::vector<Mat> chunk;
        chunk.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i)
            chunk.push_back(
                to_matrix(pad_or_truncate(dataset.samples[i].sequence, ckpt.encoder.max_len)));
        Mat y = encode(ckpt.params, ckpt.encoder, chunk, Mode::Eval);
        if (target == ProbeTarget::Projection) y = project(ckpt.params, y);
        out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
            y;
    }
    return out;
}

LinearProbe train_linear_probe(const Mat& features, const std::vector<int>& labels, int classes,
                               int epochs, double lr, int batch, std::uint64_t seed) {
    if (features.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ArgumentError("train_linear_probe: feature/label count mismatch");
    if (classes < 2) throw ArgumentError("train_linear_probe: need at least 2 classes");
    if (epochs < 1 || batch < 1 || !(lr > 0.0))
        throw ArgumentError("train_linear_probe: invalid training settings");
    for (int label : labels)
        if (label < 0 || label >= classes)
            throw ArgumentError("train_linear_probe: label " + std::to_string(label) +
                                " outside [0, " + std::to_string(classes) + ")");

    const auto d = features.cols();
    LinearProbe probe{Mat::Zero(d, classes), Mat::Zero(1, classes)};
    Mat vw = Mat::Zero(d, classes), vb = Mat::Zero(1, classes);
    constexpr double kMomentum = 0.9;

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng rng(derive_seed(seed, 0x9c0beULL, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch)) {
            const std::size_t end = std::min(order.size(), begin + batch);
            const auto m = static_cast<Eigen::Index>(end - begin);
            Mat x(m, d);
            std::vector<int> y(static_cast<std::size_t>(m));
            for (Eigen::Index i = 0; i < m; ++i) {
                x.row(i) = features.row(static_cast<Eigen::Index>(order[begin + i]));
                y[static_cast<std::size_t>(i)] = labels[order[begin + i]];
            }
            Mat scores = probe_scores(probe, x);
            // softmax cross-entropy gradient
            for (Eigen::Index r = 0; r < m; ++r) {
                const double mx = scores.row(r).maxCoeff();
                Eigen::ArrayXd e = (scores.row(r).array() - mx).exp();
                scores.row(r) = (e / e.sum()).matrix();
                scores(r, y[static_cast<std::size_t>(r)]) -= 1.0;
            }
            scores /= static_cast<double>(m);
            vw *= kMomentum;
            vw.noalias() += x.transpose() * scores;
            vb = kMomentum * vb + scores.colwise().sum().matrix();
            probe.w -= lr * vw;
            probe.b -= lr * vb;
        }
    }
    return probe;
}

Mat probe_scores(const LinearProbe& probe, const Mat& features) {
    Mat s = features * probe.w;
    s.rowwise() += probe.b.row(0);
    return s;
}

double top_k_accuracy(const Mat& scores, const std::vector<int>& labels, int k) {
    if (scores.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ArgumentError("top_k_accuracy: row/label count mismatch");
    if (scores.rows() == 0) throw ArgumentError("top_k_accuracy: empty score matrix");
    if (k < 1 || k > scores.cols())
        throw ArgumentError("top_k_accuracy: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(scores.cols()) + "]");
    std::size_t hits = 0;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= scores.cols())
            throw ArgumentError("top_k_accuracy: label outside score columns");
        const double own = scores(r, label);
        int rank = 0; // classes ranked ahead of the true label
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            if (scores(r, c) > own || (scores(r, c) == own && c < label)) ++rank;
        }
        if (rank < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

double intra_class_inertia(const Mat& embeddings, const std::vector<int>& labels,
                           int class_count) {
    if (embeddings.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ArgumentError("intra_class_inertia: row/label count mismatch");
    if (embeddings.rows() < 1) throw ArgumentError("intra_class_inertia: empty embedding matrix");

    std::map<int, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0) throw ArgumentError("intra_class_inertia: negative label");
        by_class[label].push_back(i);
    }
    if (class_count >= 0)
        for (int c = 0; c < class_count; ++c)
            if (!by_class.count(c))
                throw ArgumentError("intra_class_inertia: class " + std::to_string(c) +
                                    " has no embeddings");

    double inertia = 0.0;
    for (const auto& [cls, rows] : by_class) {
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(embeddings.cols());
        for (Eigen::Index r : rows) centroid += embeddings.row(r);
        centroid /= static_cast<double>(rows.size());
        for (Eigen::Index r : rows) inertia += (embeddings.row(r) - centroid).squaredNorm();
    }
    return inertia;
}

double lr_at_step(long step, long total, long warmup, double peak) {
    if (total < 1 || warmup < 0 || warmup >= total)
        throw ArgumentError("lr_at_step: need 0 <= warmup < total");
    if (step <= warmup)
        return warmup == 0 ? peak : peak * static_cast<double>(step) / static_cast<double>(warmup);
    return peak * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

namespace {

std::vector<int> labels_of(const Dataset& dataset, const char* who) {
    std::vector<int> labels;
    labels.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) {
        if (!s.label) throw ArgumentError(std::string(who) + ": dataset must be fully labeled");
        labels.push_back(*s.label);
    }
    return labels;
}

void check_eval_inputs(const Checkpoint& ckpt, const Dataset& train, const Dataset& test,
                       const char* who) {
    if (train.class_count != test.class_count)
        throw ArgumentError(std::string(who) + ": train has " + std::to_string(train.class_count) +
                            " classes, test has " + std::to_string(test.class_count));
    if (train.landmark_count != test.landmark_count || train.coord_dim != test.coord_dim)
        throw ArgumentError(std::string(who) + ": train/test frame shapes differ");
    if (train.landmark_count * train.coord_dim != ckpt.encoder.input_dim)
        throw ArgumentError(std::string(who) + ": dataset frame size does not match checkpoint");
}

EvalReport summarize(std::vector<EvalRun> runs, std::vector<double> inertias) {
    EvalReport report;
    report.runs = std::move(runs);
    const auto n = static_cast<int>(report.runs.size());
    auto mean_ci = [n](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        if (n < 2) return std::pair<double, double>{mean, 0.0};
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / (n - 1));
        return std::pair<double, double>{mean, student_t95(n - 1) * sd / std::sqrt(n)};
    };

    std::vector<double> top1;
    for (const EvalRun& r : report.runs) top1.push_back(r.top1);
    std::tie(report.top1_mean, report.top1_ci95) = mean_ci(top1);

    if (!report.runs.empty() && report.runs.front().top5) {
        std::vector<double> top5;
        for (const EvalRun& r : report.runs) top5.push_back(r.top5.value());
        auto [m, ci] = mean_ci(top5);
        report.top5_mean = m;
        report.top5_ci95 = ci;
    }
    report.inertia = std::accumulate(inertias.begin(), inertias.end(), 0.0) /
                     static_cast<double>(inertias.size());
    return report;
}

EvalRun probe_run(const Mat& train_feats, const std::vector<int>& train_labels,
                  const Mat& test_feats, const std::vector<int>& test_labels, int classes,
                  const EvalConfig& cfg, std::uint64_t run_seed) {
    const LinearProbe probe = train_linear_probe(train_feats, train_labels, classes,
                                                 cfg.probe_epochs, cfg.probe_lr, cfg.probe_batch,
                                                 run_seed);
    const Mat scores = probe_scores(probe, test_feats);
    EvalRun run;
    run.top1 = top_k_accuracy(scores, test_labels, 1);
    if (classes >= 5) run.top5 = top_k_accuracy(scores, test_labels, 5);
    return run;
}

} // namespace

EvalReport linear_eval(const Checkpoint& ckpt, const Dataset& train, const Dataset& test,
                       const EvalConfig& cfg) {
    check_eval_inputs(ckpt, train, test, "linear_eval");
    if (cfg.repeats < 1) throw ArgumentError("linear_eval: repeats must be >= 1");
    const std::vector<int> train_labels = labels_of(train, "linear_eval");
    const std::vector<int> test_labels = labels_of(test, "linear_eval");

    const Mat train_feats = extract_embeddings(ckpt, train, cfg.probe_on);
    const Mat test_feats = extract_embeddings(ckpt, test, cfg.probe_on);
    const double inertia = intra_class_inertia(test_feats, test_labels);

    std::vector<EvalRun> runs;
    std::vector<double> inertias;
    for (int r = 0; r < cfg.repeats; ++r) {
        runs.push_back(probe_run(train_feats, train_labels, test_feats, test_labels,
                                 train.class_count, cfg,
                                 derive_seed(cfg.seed, 0x11eaULL, static_cast<std::uint64_t>(r))));
        inertias.push_back(inertia);
    }
    return summarize(std::move(runs), std::move(inertias));
}

EvalReport finetune(const Checkpoint& ckpt, const Dataset& train, const Dataset& test,
                    const EvalConfig& cfg) {
    check_eval_inputs(ckpt, train, test, "finetune");
    if (cfg.repeats < 1) throw ArgumentError("finetune: repeats must be >= 1");
    if (!(cfg.label_fraction > 0.0 && cfg.label_fraction <= 1.0))
        throw ArgumentError("finetune: label_fraction must be in (0, 1]");
    const std::vector<int> test_labels = labels_of(test, "finetune");
    const int classes = train.class_count;

    std::vector<EvalRun> runs;
    std::vector<double> inertias;
    for (int r = 0; r < cfg.repeats; ++r) {
        const std::uint64_t run_seed =
            derive_seed(cfg.seed, 0xf17eULL, static_cast<std::uint64_t>(r));
        const Dataset subset = cfg.label_fraction < 1.0
                                   ? stratified_subsample(train, cfg.label_fraction, run_seed)
                                   : train;
        const std::vector<int> sub_labels = labels_of(subset, "finetune");

        ModelParams params = ckpt.params;
        ModelParams grads = zeros_like(params);
        ModelParams momentum = zeros_like(params);
        LinearProbe head{Mat::Zero(ckpt.encoder.embed_dim, classes), Mat::Zero(1, classes)};
        Mat vw = Mat::Zero(ckpt.encoder.embed_dim, classes), vb = Mat::Zero(1, classes);

        std::vector<Mat> inputs;
        inputs.reserve(subset.samples.size());
        for (const Sample& s : subset.samples)
            inputs.push_back(to_matrix(pad_or_truncate(s.sequence, ckpt.encoder.max_len)));

        const int batch = std::min<int>(cfg.probe_batch, static_cast<int>(inputs.size()));
        const long steps_per_epoch =
            static_cast<long>((inputs.size() + static_cast<std::size_t>(batch) - 1) /
                              static_cast<std::size_t>(batch));
        const long total_steps = static_cast<long>(cfg.finetune_epochs) * steps_per_epoch;
        if (cfg.warmup_steps >= total_steps)
            throw ArgumentError("finetune: warmup_steps must be below total steps (" +
                                std::to_string(total_steps) + ")");

        std::vector<std::size_t> order(inputs.size());
        std::iota(order.begin(), order.end(), 0);
        Rng drop_rng(derive_seed(run_seed, 0xd1eULL));

        long step = 0;
        for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
            Rng rng(derive_seed(run_seed, 0x5e4fULL, static_cast<std::uint64_t>(epoch)));
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t begin = 0; begin < order.size();
                 begin += static_cast<std::size_t>(batch)) {
                const std::size_t end = std::min(order.size(), begin + batch);
                std::vector<Mat> x;
                std::vector<int> y;
                for (std::size_t i = begin; i < end; ++i) {
                    x.push_back(inputs[order[i]]);
                    y.push_back(sub_labels[order[i]]);
                }
                const double lr = lr_at_step(step, total_steps, cfg.warmup_steps, cfg.finetune_lr);

                EncodeCache cache;
                const Mat feats = encode(params, ckpt.encoder, x, Mode::Train, &drop_rng, &cache);
                Mat probs = probe_scores(head, feats);
                const auto m = probs.rows();
                for (Eigen::Index i = 0; i < m; ++i) {
                    const double mx = probs.row(i).maxCoeff();
                    Eigen::ArrayXd e = (probs.row(i).array() - mx).exp();
                    probs.row(i) = (e / e.sum()).matrix();
                    probs(i, y[static_cast<std::size_t>(i)]) -= 1.0;
                }
                probs /= static_cast<double>(m);

                const Mat d_feats = probs * head.w.transpose();
                vw = 0.9 * vw + (feats.transpose() * probs).eval();
                vb = 0.9 * vb + probs.colwise().sum().matrix().eval();
                head.w -= lr * vw;
                head.b -= lr * vb;

                visit_params(grads, [](const std::string&, Mat& g) { g.setZero(); });
                encode_backward(params, ckpt.encoder, cache, d_feats, grads);
                sgd_step(params, grads, momentum, lr, 0.9);
                ++step;
            }
        }

        Checkpoint tuned = ckpt;
        tuned.params = std::move(params);
        const Mat test_feats = extract_embeddings(tuned, test, ProbeTarget::Representation);
        const Mat scores = probe_scores(head, test_feats);
        EvalRun run;
        run.top1 = top_k_accuracy(scores, test_labels, 1);
        if (classes >= 5) run.top5 = top_k_accuracy(scores, test_labels, 5);
        runs.push_back(run);
        inertias.push_back(intra_class_inertia(test_feats, test_labels));
    }
    return summarize(std::move(runs), std::move(inertias));
}

EvalReport transfer_eval(const Checkpoint& ckpt_from_a, const Dataset& train_b,
                         const Dataset& test_b, const EvalConfig& cfg,
                         const std::string& source_tag, const std::string& target_tag) {
    EvalReport report = linear_eval(ckpt_from_a, train_b, test_b, cfg);
    report.source_tag = source_tag;
    report.target_tag = target_tag;
    return report;
}

std::vector<EmbeddingPoint> export_embeddings_2d(const Checkpoint& ckpt, const Dataset& dataset) {
    if (dataset.samples.size() < 2)
        throw ArgumentError("export_embeddings_2d: need at least 2 samples");
    const Mat embeds = extract_embeddings(ckpt, dataset, ProbeTarget::Representation);

    const Eigen::RowVectorXd mean = embeds.colwise().mean();
    Mat centered = embeds.rowwise() - mean;
    const Mat cov = centered.transpose() * centered / static_cast<double>(embeds.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
    if (solver.info() != Eigen::Success)
        throw NumericError("export_embeddings_2d: eigendecomposition failed");

    // Eigen reports ascending eigenvalues; take the last two columns.
    const auto d = cov.cols();
    Eigen::VectorXd pc1 = solver.eigenvectors().col(d - 1);
    Eigen::VectorXd pc2 = solver.eigenvectors().col(d - 2);
    // Deterministic sign: largest-magnitude component positive.
    auto fix_sign = [](Eigen::VectorXd& v) {
        Eigen::Index at = 0;
        v.cwiseAbs().maxCoeff(&at);
        if (v(at) < 0) v = -v;
    };
    fix_sign(pc1);
    fix_sign(pc2);

    std::vector<EmbeddingPoint> points;
    points.reserve(dataset.samples.size());
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        points.push_back({dataset.samples[i].sample_id,
                          dataset.samples[i].label.value_or(-1), centered.row(r).dot(pc1),
                          centered.row(r).dot(pc2)});
    }
    return points;
}

void save_embeddings_csv(const std::vector<EmbeddingPoint>& points,
                         const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "sample_id,label,u,v\n";
    out.precision(17);
    for (const EmbeddingPoint& p : points)
        out << p.sample_id << ',' << p.label << ',' << p.u << ',' << p.v << '\n';
}

} // namespace slslr
