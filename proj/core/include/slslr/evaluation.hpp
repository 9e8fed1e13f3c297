#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slslr/checkpoint.hpp"
#include "slslr/types.hpp"

namespace slslr {

enum class ProbeTarget { Representation, Projection };

std::string to_string(ProbeTarget t);
ProbeTarget probe_target_from_string(const std::string& s);

struct EvalConfig {
    int probe_epochs = 100;
    double probe_lr = 0.01;
    int probe_batch = 64;
    int finetune_epochs = 1000;
    double finetune_lr = 0.01;
    int warmup_steps = 600;
    double label_fraction = 0.3;
    int repeats = 8;
    std::uint64_t seed = 0;
    ProbeTarget probe_on = ProbeTarget::Representation;
};

struct EvalRun {
    double top1 = 0.0;
    std::optional<double> top5; // reported only when class_count >= 5
};

struct EvalReport {
    double top1_mean = 0.0;
    double top1_ci95 = 0.0; // Student-t over the repeated runs
    std::optional<double> top5_mean;
    std::optional<double> top5_ci95;
    double inertia = 0.0;
    std::vector<EvalRun> runs;
    std::string source_tag, target_tag; // set by transfer_eval
};

void save_eval_report_json(const EvalReport& report, const std::filesystem::path& path);

/// Frozen eval-mode features for every sample, in dataset order. Sequences
/// are pad_or_truncate'd to the checkpoint's max_len first.
Mat extract_embeddings(const Checkpoint& ckpt, const Dataset& dataset,
                       ProbeTarget target = ProbeTarget::Representation, int batch = 64);

struct LinearProbe {
    Mat w; // features x classes
    Mat b; // 1 x classes
};

/// Multinomial logistic regression by minibatch SGD with momentum,
/// zero-initialized, deterministic for a given seed.
LinearProbe train_linear_probe(const Mat& features, const std::vector<int>& labels, int classes,
                               int epochs, double lr, int batch, std::uint64_t seed);

Mat probe_scores(const LinearProbe& probe, const Mat& features);

/// Fraction of rows whose true label ranks among the k best scores; ties
/// break toward the lower class index.
double top_k_accuracy(const Mat& scores, const std::vector<int>& labels, int k);

/// Sum over classes of squared distances to the class centroid.
/// When class_count >= 0 every class in [0, class_count) must be populated.
double intra_class_inertia(const Mat& embeddings, const std::vector<int>& labels,
                           int class_count = -1);

/// Piecewise-linear warmup/decay: 0 -> peak over [0, warmup], then linearly
/// back to 0 at step == total.
double lr_at_step(long step, long total, long warmup, double peak);

/// Classifier on the frozen backbone; cfg.repeats runs with derived seeds.
EvalReport linear_eval(const Checkpoint& ckpt, const Dataset& train, const Dataset& test,
                       const EvalConfig& cfg);

/// Stratified label_fraction subsample, then end-to-end training of encoder
/// plus a fresh linear head under the warmup/decay schedule.
EvalReport finetune(const Checkpoint& ckpt, const Dataset& train, const Dataset& test,
                    const EvalConfig& cfg);

/// linear_eval with a backbone pretrained elsewhere; tags recorded verbatim.
EvalReport transfer_eval(const Checkpoint& ckpt_from_a, const Dataset& train_b,
                         const Dataset& test_b, const EvalConfig& cfg,
                         const std::string& source_tag, const std::string& target_tag);

struct EmbeddingPoint {
    std::string sample_id;
    int label = -1; // -1 for unlabeled samples
    double u = 0.0, v = 0.0;
};

/// Mean-centered projection onto the top-2 principal components (exact
/// eigendecomposition of the embedding covariance).
std::vector<EmbeddingPoint> export_embeddings_2d(const Checkpoint& ckpt, const Dataset& dataset);

/// CSV with header sample_id,label,u,v.
void save_embeddings_csv(const std::vector<EmbeddingPoint>& points,
                         const std::filesystem::path& path);

/// Two-sided 95% Student-t critical value.
double student_t95(int dof);

} // namespace slslr
