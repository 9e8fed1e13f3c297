#include "slslr/run_config.hpp"

#include <fstream>

#include "json_util.hpp"

namespace slslr {

using detail::check_keys;
using detail::json;
using detail::read_field;

namespace {

json augmentation_to_json(const AugmentationConfig& c) {
    json j;
    j["mode"] = to_string(c.mode);
    json part;
    part["ks_fraction"] = c.part.ks_fraction;
    part["ke_fraction"] = c.part.ke_fraction;
    part["ks"] = c.part.ks ? json(*c.part.ks) : json(nullptr);
    part["ke"] = c.part.ke ? json(*c.part.ke) : json(nullptr);
    j["part_permutation"] = std::move(part);
    json classical;
    classical["rotation_max_deg"] = c.classical.rotation_max_deg;
    classical["noise_sigma"] = c.classical.noise_sigma;
    classical["flip_prob"] = c.classical.flip_prob;
    classical["translation_max"] = c.classical.translation_max;
    j["classical"] = std::move(classical);
    return j;
}

AugmentationConfig augmentation_from_json(const json& j, AugmentationConfig c) {
    check_keys(j, {"mode", "part_permutation", "classical"}, "augmentation");
    if (j.contains("mode")) c.mode = augmentation_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("part_permutation")) {
        const json& part = j.at("part_permutation");
        check_keys(part, {"ks_fraction", "ke_fraction", "ks", "ke"},
                   "augmentation.part_permutation");
        read_field(part, "ks_fraction", c.part.ks_fraction);
        read_field(part, "ke_fraction", c.part.ke_fraction);
        if (part.contains("ks") && !part.at("ks").is_null()) c.part.ks = part.at("ks").get<int>();
        if (part.contains("ke") && !part.at("ke").is_null()) c.part.ke = part.at("ke").get<int>();
    }
    if (j.contains("classical")) {
        const json& cl = j.at("classical");
        check_keys(cl, {"rotation_max_deg", "noise_sigma", "flip_prob", "translation_max"},
                   "augmentation.classical");
        read_field(cl, "rotation_max_deg", c.classical.rotation_max_deg);
        read_field(cl, "noise_sigma", c.classical.noise_sigma);
        read_field(cl, "flip_prob", c.classical.flip_prob);
        read_field(cl, "translation_max", c.classical.translation_max);
    }
    return c;
}

json pretrain_to_json(const PretrainSettings& c) {
    json j;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["momentum"] = c.momentum;
    j["collapse_log_every"] = c.collapse_log_every;
    j["normalize_projections"] = c.normalize_projections;
    json ab;
    ab["no_predictor"] = c.ablation.no_predictor;
    ab["no_layernorm"] = c.no_layernorm;
    ab["no_original"] = c.ablation.no_original;
    ab["permuted_branches"] = c.ablation.permuted_branches;
    j["ablation"] = std::move(ab);
    return j;
}

PretrainSettings pretrain_from_json(const json& j, PretrainSettings c) {
    check_keys(j,
               {"epochs", "batch_size", "learning_rate", "momentum", "collapse_log_every",
                "normalize_projections", "ablation"},
               "pretrain");
    read_field(j, "epochs", c.epochs);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "momentum", c.momentum);
    read_field(j, "collapse_log_every", c.collapse_log_every);
    read_field(j, "normalize_projections", c.normalize_projections);
    if (j.contains("ablation")) {
        const json& ab = j.at("ablation");
        check_keys(ab, {"no_predictor", "no_layernorm", "no_original", "permuted_branches"},
                   "pretrain.ablation");
        read_field(ab, "no_predictor", c.ablation.no_predictor);
        read_field(ab, "no_layernorm", c.no_layernorm);
        read_field(ab, "no_original", c.ablation.no_original);
        read_field(ab, "permuted_branches", c.ablation.permuted_branches);
    }
    return c;
}

json eval_to_json(const EvalConfig& c) {
    json j;
    j["probe_epochs"] = c.probe_epochs;
    j["probe_lr"] = c.probe_lr;
    j["probe_batch"] = c.probe_batch;
    j["finetune_epochs"] = c.finetune_epochs;
    j["finetune_lr"] = c.finetune_lr;
    j["warmup_steps"] = c.warmup_steps;
    j["label_fraction"] = c.label_fraction;
    j["repeats"] = c.repeats;
    j["probe_on"] = to_string(c.probe_on);
    return j;
}

EvalConfig eval_from_json(const json& j, EvalConfig c) {
    check_keys(j,
               {"probe_epochs", "probe_lr", "probe_batch", "finetune_epochs", "finetune_lr",
                "warmup_steps", "label_fraction", "repeats", "probe_on"},
               "eval");
    read_field(j, "probe_epochs", c.probe_epochs);
    read_field(j, "probe_lr", c.probe_lr);
    read_field(j, "probe_batch", c.probe_batch);
    read_field(j, "finetune_epochs", c.finetune_epochs);
    read_field(j, "finetune_lr", c.finetune_lr);
    read_field(j, "warmup_steps", c.warmup_steps);
    read_field(j, "label_fraction", c.label_fraction);
    read_field(j, "repeats", c.repeats);
    if (j.contains("probe_on"))
        c.probe_on = probe_target_from_string(j.at("probe_on").get<std::string>());
    return c;
}

json boundary_to_json(const BoundarySettings& c) {
    json j;
    j["stop_rule"] = to_string(c.stop_rule);
    j["eval_epochs"] = c.eval_epochs;
    j["split_test_fraction"] = c.split_test_fraction;
    return j;
}

BoundarySettings boundary_from_json(const json& j, BoundarySettings c) {
    check_keys(j, {"stop_rule", "eval_epochs", "split_test_fraction"}, "boundary");
    if (j.contains("stop_rule"))
        c.stop_rule = stop_rule_from_string(j.at("stop_rule").get<std::string>());
    read_field(j, "eval_epochs", c.eval_epochs);
    read_field(j, "split_test_fraction", c.split_test_fraction);
    return c;
}

RunConfig config_from_json(const json& j) {
    check_keys(j,
               {"seed", "output_dir", "data", "encoder", "head", "pretrain", "augmentation",
                "eval", "boundary"},
               "");
    RunConfig cfg;
    read_field(j, "seed", cfg.seed);
    read_field(j, "output_dir", cfg.output_dir);
    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, {"train", "test", "unlabeled"}, "data");
        read_field(d, "train", cfg.data.train);
        read_field(d, "test", cfg.data.test);
        read_field(d, "unlabeled", cfg.data.unlabeled);
    }
    if (j.contains("encoder"))
        cfg.encoder = detail::encoder_from_json(j.at("encoder"), cfg.encoder, "encoder");
    if (j.contains("head")) cfg.head = detail::head_from_json(j.at("head"), cfg.head, "head");
    if (j.contains("pretrain")) cfg.pretrain = pretrain_from_json(j.at("pretrain"), cfg.pretrain);
    if (j.contains("augmentation"))
        cfg.augmentation = augmentation_from_json(j.at("augmentation"), cfg.augmentation);
    if (j.contains("eval")) cfg.eval = eval_from_json(j.at("eval"), cfg.eval);
    if (j.contains("boundary")) cfg.boundary = boundary_from_json(j.at("boundary"), cfg.boundary);

    for (const std::string& path : {cfg.data.train, cfg.data.test, cfg.data.unlabeled})
        if (!path.empty() && !std::filesystem::exists(path))
            throw ArgumentError("config references missing dataset path '" + path + "'");
    return cfg;
}

} // namespace

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError("malformed config JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_to_json_text(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    json data;
    data["train"] = cfg.data.train;
    data["test"] = cfg.data.test;
    data["unlabeled"] = cfg.data.unlabeled;
    j["data"] = std::move(data);
    j["encoder"] = detail::encoder_to_json(cfg.encoder);
    j["head"] = detail::head_to_json(cfg.head);
    j["pretrain"] = pretrain_to_json(cfg.pretrain);
    j["augmentation"] = augmentation_to_json(cfg.augmentation);
    j["eval"] = eval_to_json(cfg.eval);
    j["boundary"] = boundary_to_json(cfg.boundary);
    return j.dump(2) + "\n";
}

void apply_profile(RunConfig& cfg, const std::string& profile) {
    if (profile == "paper") {
        cfg.encoder.blocks = 12;
        cfg.encoder.heads = 8;
        cfg.encoder.embed_dim = 512;
        cfg.encoder.dropout = 0.1;
        cfg.pretrain.epochs = 200;
        cfg.pretrain.batch_size = 512;
        cfg.pretrain.learning_rate = 0.001;
        cfg.head = HeadConfig{};
        return;
    }
    if (profile == "tiny") {
        cfg.encoder.blocks = 2;
        cfg.encoder.embed_dim = 64;
        cfg.pretrain.batch_size = 32;
        cfg.pretrain.epochs = 20;
        return;
    }
    throw ArgumentError("unknown profile '" + profile + "' (expected tiny or paper)");
}

PretrainConfig make_pretrain_config(const RunConfig& cfg) {
    PretrainConfig out;
    out.epochs = cfg.pretrain.epochs;
    out.batch_size = cfg.pretrain.batch_size;
    out.learning_rate = cfg.pretrain.learning_rate;
    out.momentum = cfg.pretrain.momentum;
    out.collapse_log_every = cfg.pretrain.collapse_log_every;
    out.normalize_projections = cfg.pretrain.normalize_projections;
    out.ablation = cfg.pretrain.ablation;
    out.no_layernorm = cfg.pretrain.no_layernorm;
    out.seed = cfg.seed;
    out.encoder = cfg.encoder;
    out.head = cfg.head;
    out.augmentation = cfg.augmentation;
    return out;
}

BoundarySearchConfig make_boundary_config(const RunConfig& cfg) {
    BoundarySearchConfig out;
    out.stop_rule = cfg.boundary.stop_rule;
    out.train = make_pretrain_config(cfg);
    out.train.epochs = cfg.boundary.eval_epochs;
    out.eval = make_eval_config(cfg);
    out.split_test_fraction = cfg.boundary.split_test_fraction;
    out.seed = cfg.seed;
    return out;
}

EvalConfig make_eval_config(const RunConfig& cfg) {
    EvalConfig out = cfg.eval;
    out.seed = cfg.seed;
    return out;
}

} // namespace slslr
