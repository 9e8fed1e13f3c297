#pragma once

#include <filesystem>
#include <map>

#include "slslr/augmentation.hpp"
#include "slslr/checkpoint.hpp"
#include "slslr/loss.hpp"
#include "slslr/types.hpp"

namespace slslr {

struct PretrainConfig {
    int epochs = 200;
    int batch_size = 512;
    double learning_rate = 0.001;
    double momentum = 0.9;
    int collapse_log_every = 1;
    bool normalize_projections = false;
    AblationFlags ablation;
    bool no_layernorm = false; // drops the input-stage layer norms
    std::uint64_t seed = 0;
    EncoderConfig encoder;
    HeadConfig head;
    AugmentationConfig augmentation;
};

struct TrainStep {
    long step = 0;
    double l1 = 0, l2 = 0, l3 = 0, total = 0;
    double embedding_std = 0; // re-measured every collapse_log_every steps
};

struct TrainLog {
    std::vector<TrainStep> steps;
    double wall_seconds = 0.0;
};

/// CSV with header step,l1,l2,l3,total,embedding_std.
void save_train_log_csv(const TrainLog& log, const std::filesystem::path& path);

/// Per-dimension population standard deviation across the batch, averaged
/// over dimensions. Zero iff all rows are equal.
double embedding_std(const Mat& z);

/// v <- momentum * v + g;  p <- p - lr * v, over every named tensor.
void sgd_step(ModelParams& params, const ModelParams& grads, ModelParams& momentum, double lr,
              double mu);

struct PretrainResult {
    Checkpoint checkpoint;
    TrainLog log;
};

/// Self-supervised pretraining: per batch, draw a positive pair per sample,
/// run the three shared-weight branches, apply the three-term loss (or its
/// ablation) and take an SGD step. Fully deterministic given cfg.seed: the
/// epoch order and every augmentation draw derive from
/// (seed, epoch, sample id). The last incomplete batch of each epoch is
/// dropped. Sequences must already be normalized to encoder.max_len frames;
/// encoder.input_dim is derived from the dataset.
PretrainResult pretrain(const Dataset& dataset, const PretrainConfig& cfg);

/// The four ablation settings next to the full model, sharing cfg.seed:
/// full, without_p_and_LN, without_p_with_LN, without_o, perm.
std::map<std::string, PretrainResult> run_ablation_suite(const Dataset& dataset,
                                                         const PretrainConfig& base);

} // namespace slslr
