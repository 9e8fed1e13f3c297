#pragma once

#include <filesystem>
#include <string>

#include "slslr/boundary.hpp"
#include "slslr/evaluation.hpp"
#include "slslr/trainer.hpp"

namespace slslr {

struct DataPaths {
    std::string train, test, unlabeled;
};

struct PretrainSettings {
    int epochs = 200;
    int batch_size = 512;
    double learning_rate = 0.001;
    double momentum = 0.9;
    int collapse_log_every = 1;
    bool normalize_projections = false;
    AblationFlags ablation;
    bool no_layernorm = false;
};

struct BoundarySettings {
    StopRule stop_rule = StopRule::PaperLiteral;
    int eval_epochs = 20;
    double split_test_fraction = 0.3;
};

/// One config file drives every subcommand; absent keys fall back to the
/// documented defaults and unknown keys are rejected by name.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    DataPaths data;
    EncoderConfig encoder;
    HeadConfig head;
    PretrainSettings pretrain;
    AugmentationConfig augmentation;
    EvalConfig eval;
    BoundarySettings boundary;
};

/// Parses JSON over the defaults; referenced dataset paths must exist.
RunConfig load_config(const std::filesystem::path& path);

/// Same parse from an in-memory document (no path-existence checks are
/// skipped: the same validation applies).
RunConfig config_from_json_text(const std::string& text);

/// Fully-resolved config as pretty JSON; load(config_to_json_text(c))
/// round-trips every field.
std::string config_to_json_text(const RunConfig& cfg);

/// "tiny" (2 blocks, 64-dim, batch 32, 20 epochs) or "paper" (the published
/// training parameters).
void apply_profile(RunConfig& cfg, const std::string& profile);

PretrainConfig make_pretrain_config(const RunConfig& cfg);
BoundarySearchConfig make_boundary_config(const RunConfig& cfg);
EvalConfig make_eval_config(const RunConfig& cfg);

} // namespace slslr
