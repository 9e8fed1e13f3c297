// Command-line entry point: synthetic data generation, self-supervised
// pretraining, boundary search, the downstream evaluation protocols and
// embedding export. Every run writes <out>/run.json with the resolved
// configuration and fingerprints of the artifacts it produced.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "slslr/boundary.hpp"
#include "slslr/dataset_io.hpp"
#include "slslr/errors.hpp"
#include "slslr/evaluation.hpp"
#include "slslr/run_config.hpp"
#include "slslr/synthetic.hpp"
#include "slslr/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string file_fingerprint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw slslr::IoError("cannot fingerprint '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), {});
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                  static_cast<unsigned long long>(slslr::fnv1a(bytes)));
    return buf;
}

/// Fingerprints every artifact below out_dir (run.json itself excluded).
void write_run_json(const std::string& subcommand, const slslr::RunConfig& cfg,
                    const fs::path& out_dir) {
    json run;
    run["subcommand"] = subcommand;
    run["resolved_config"] = json::parse(slslr::config_to_json_text(cfg));
    json artifacts = json::object();
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(out_dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
        const fs::path rel = fs::relative(file, out_dir);
        if (rel == "run.json") continue;
        artifacts[rel.generic_string()] = file_fingerprint(file);
    }
    run["artifacts"] = std::move(artifacts);
    std::ofstream out(out_dir / "run.json", std::ios::trunc);
    if (!out) throw slslr::IoError("cannot write '" + (out_dir / "run.json").string() + "'");
    out << run.dump(2) << '\n';
}

struct CommonOpts {
    std::string config_path;
    std::string profile;
    std::string out_dir;
    std::int64_t seed = -1;

    slslr::RunConfig resolve() const {
        slslr::RunConfig cfg;
        if (!config_path.empty()) cfg = slslr::load_config(config_path);
        if (!profile.empty()) slslr::apply_profile(cfg, profile);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--profile", opts.profile, "Config profile: tiny or paper");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--seed", opts.seed, "Override the config seed");
}

slslr::Dataset load_required_dataset(const std::string& path, const std::string& what) {
    if (path.empty())
        throw slslr::ArgumentError("missing " + what + " dataset path (use --" + what +
                                   " or the config data section)");
    if (!fs::exists(path))
        throw slslr::ArgumentError(what + " dataset path '" + path + "' does not exist");
    return slslr::load_dataset(path);
}

slslr::Dataset normalized(const slslr::Dataset& dataset, int max_len) {
    slslr::Dataset out = dataset;
    for (slslr::Sample& s : out.samples) s.sequence = pad_or_truncate(s.sequence, max_len);
    out.max_len = max_len;
    return out;
}

struct SyntheticOpts {
    int classes = 10;
    int per_class = 20;
    int n = 64;
    int landmarks = 75;
    int coord_dim = 2;
    double signal_start = 1.0 / 3.0;
    double signal_end = 0.25;
    double noise_scale = 1.0;
    std::uint64_t seed = 0;
    std::string out;
    double split = -1.0;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised skeleton-sequence representation learning"};
    app.require_subcommand(1);

    SyntheticOpts synth;
    CLI::App* synth_cmd =
        app.add_subcommand("synth-data", "Generate synthetic sequences with a planted "
                                         "informative window");
    synth_cmd->add_option("--classes", synth.classes, "Number of classes");
    synth_cmd->add_option("--per-class", synth.per_class, "Samples per class");
    synth_cmd->add_option("--n", synth.n, "Frames per sequence");
    synth_cmd->add_option("--landmarks", synth.landmarks, "Landmarks per frame");
    synth_cmd->add_option("--coord-dim", synth.coord_dim, "Coordinates per landmark (2 or 3)");
    synth_cmd->add_option("--signal-start", synth.signal_start,
                          "Leading noise fraction of each sequence");
    synth_cmd->add_option("--signal-end", synth.signal_end,
                          "Trailing noise fraction of each sequence");
    synth_cmd->add_option("--noise-scale", synth.noise_scale, "Noise standard deviation");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");
    synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();
    synth_cmd->add_option("--split", synth.split,
                          "Also write train/test subdirectories at this test fraction");

    CommonOpts pre_opts;
    std::string pre_data;
    CLI::App* pre_cmd = app.add_subcommand("pretrain", "Self-supervised pretraining");
    add_common(pre_cmd, pre_opts);
    pre_cmd->add_option("--data", pre_data, "Training dataset directory");

    CommonOpts bnd_opts;
    std::string bnd_data, bnd_stop_rule;
    CLI::App* bnd_cmd =
        app.add_subcommand("boundary-search", "Locate the boundary importance (k_s*, k_e*)");
    add_common(bnd_cmd, bnd_opts);
    bnd_cmd->add_option("--data", bnd_data, "Labeled dataset directory");
    bnd_cmd->add_option("--stop-rule", bnd_stop_rule, "paper_literal or peak");

    CommonOpts lin_opts;
    std::string lin_ckpt, lin_train, lin_test;
    CLI::App* lin_cmd =
        app.add_subcommand("linear-eval", "Linear evaluation on a frozen backbone");
    add_common(lin_cmd, lin_opts);
    lin_cmd->add_option("--checkpoint", lin_ckpt, "Checkpoint directory")->required();
    lin_cmd->add_option("--train", lin_train, "Labeled training dataset");
    lin_cmd->add_option("--test", lin_test, "Labeled test dataset");

    CommonOpts fin_opts;
    std::string fin_ckpt, fin_train, fin_test;
    double fin_fraction = -1.0;
    CLI::App* fin_cmd =
        app.add_subcommand("finetune", "Semi-supervised fine-tuning on a label fraction");
    add_common(fin_cmd, fin_opts);
    fin_cmd->add_option("--checkpoint", fin_ckpt, "Checkpoint directory")->required();
    fin_cmd->add_option("--train", fin_train, "Labeled training dataset");
    fin_cmd->add_option("--test", fin_test, "Labeled test dataset");
    fin_cmd->add_option("--label-fraction", fin_fraction, "Fraction of labels to keep");

    CommonOpts tra_opts;
    std::string tra_ckpt, tra_train, tra_test, tra_source, tra_target;
    CLI::App* tra_cmd = app.add_subcommand(
        "transfer", "Linear evaluation of a backbone pretrained on another dataset");
    add_common(tra_cmd, tra_opts);
    tra_cmd->add_option("--checkpoint", tra_ckpt, "Checkpoint directory")->required();
    tra_cmd->add_option("--train", tra_train, "Target training dataset");
    tra_cmd->add_option("--test", tra_test, "Target test dataset");
    tra_cmd->add_option("--source-tag", tra_source, "Source dataset tag")->required();
    tra_cmd->add_option("--target-tag", tra_target, "Target dataset tag")->required();

    CommonOpts abl_opts;
    std::string abl_data;
    CLI::App* abl_cmd = app.add_subcommand("ablate", "Run the five-variant ablation suite");
    add_common(abl_cmd, abl_opts);
    abl_cmd->add_option("--data", abl_data, "Training dataset directory");

    CommonOpts exp_opts;
    std::string exp_ckpt, exp_data;
    CLI::App* exp_cmd = app.add_subcommand(
        "export-embeddings", "2-D principal-component projection of dataset embeddings");
    add_common(exp_cmd, exp_opts);
    exp_cmd->add_option("--checkpoint", exp_ckpt, "Checkpoint directory")->required();
    exp_cmd->add_option("--data", exp_data, "Dataset directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\nerror: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*synth_cmd) {
            slslr::SyntheticConfig cfg;
            cfg.class_count = synth.classes;
            cfg.samples_per_class = synth.per_class;
            cfg.n = synth.n;
            cfg.l = synth.landmarks;
            cfg.d = synth.coord_dim;
            cfg.signal_start_fraction = synth.signal_start;
            cfg.signal_end_fraction = synth.signal_end;
            cfg.noise_scale = synth.noise_scale;
            cfg.seed = synth.seed;
            const slslr::Dataset data = generate_synthetic(cfg);
            if (synth.split <= 0.0) {
                save_dataset(data, synth.out);
                std::cout << "wrote " << data.samples.size() << " samples to " << synth.out
                          << '\n';
            } else {
                auto [train, test] =
                    stratified_split(data, synth.split, slslr::derive_seed(cfg.seed, 1));
                save_dataset(data, fs::path(synth.out) / "all");
                save_dataset(train, fs::path(synth.out) / "train");
                save_dataset(test, fs::path(synth.out) / "test");
                std::cout << "wrote " << train.samples.size() << " train / "
                          << test.samples.size() << " test samples to " << synth.out << '\n';
            }
            return kExitOk;
        }

        if (*pre_cmd) {
            slslr::RunConfig cfg = pre_opts.resolve();
            if (!pre_data.empty()) cfg.data.train = pre_data;
            const slslr::Dataset raw = load_required_dataset(cfg.data.train, "data");
            const slslr::Dataset data = normalized(raw, cfg.encoder.max_len);
            const fs::path out = cfg.output_dir;
            fs::create_directories(out);
            const slslr::PretrainResult result = pretrain(data, make_pretrain_config(cfg));
            save_checkpoint(result.checkpoint, out / "checkpoint");
            save_train_log_csv(result.log, out / "train_log.csv");
            write_run_json("pretrain", cfg, out);
            std::cout << "pretrained " << result.log.steps.size() << " steps; final loss "
                      << result.log.steps.back().total << '\n';
            return kExitOk;
        }

        if (*bnd_cmd) {
            slslr::RunConfig cfg = bnd_opts.resolve();
            if (!bnd_data.empty()) cfg.data.train = bnd_data;
            if (!bnd_stop_rule.empty())
                cfg.boundary.stop_rule = slslr::stop_rule_from_string(bnd_stop_rule);
            const slslr::Dataset data = load_required_dataset(cfg.data.train, "data");
            const fs::path out = cfg.output_dir;
            fs::create_directories(out);
            const slslr::BoundaryResult result = search_boundary(data, make_boundary_config(cfg));
            save_boundary_json(result, out / "boundary.json");
            slslr::save_trace_csv(result.trace_first, out / "trace_first.csv");
            slslr::save_trace_csv(result.trace_last, out / "trace_last.csv");
            write_run_json("boundary-search", cfg, out);
            std::cout << "ks_star=" << result.ks_star << " ke_star=" << result.ke_star << '\n';
            return kExitOk;
        }

        auto run_eval = [&](const CommonOpts& opts, const std::string& ckpt_path,
                            const std::string& train_path, const std::string& test_path,
                            const std::string& subcommand, const std::string& source,
                            const std::string& target, double label_fraction) {
            slslr::RunConfig cfg = opts.resolve();
            if (!train_path.empty()) cfg.data.train = train_path;
            if (!test_path.empty()) cfg.data.test = test_path;
            if (label_fraction > 0.0) cfg.eval.label_fraction = label_fraction;
            const slslr::Checkpoint ckpt = slslr::load_checkpoint(ckpt_path);
            const slslr::Dataset train = load_required_dataset(cfg.data.train, "train");
            const slslr::Dataset test = load_required_dataset(cfg.data.test, "test");
            const fs::path out = cfg.output_dir;
            fs::create_directories(out);
            slslr::EvalReport report;
            if (subcommand == "linear-eval")
                report = linear_eval(ckpt, train, test, make_eval_config(cfg));
            else if (subcommand == "finetune")
                report = finetune(ckpt, train, test, make_eval_config(cfg));
            else
                report = transfer_eval(ckpt, train, test, make_eval_config(cfg), source, target);
            save_eval_report_json(report, out / "eval_report.json");
            write_run_json(subcommand, cfg, out);
            std::cout << "top1 " << report.top1_mean << " +- " << report.top1_ci95 << '\n';
            return kExitOk;
        };

        if (*lin_cmd)
            return run_eval(lin_opts, lin_ckpt, lin_train, lin_test, "linear-eval", "", "", -1.0);
        if (*fin_cmd)
            return run_eval(fin_opts, fin_ckpt, fin_train, fin_test, "finetune", "", "",
                            fin_fraction);
        if (*tra_cmd)
            return run_eval(tra_opts, tra_ckpt, tra_train, tra_test, "transfer", tra_source,
                            tra_target, -1.0);

        if (*abl_cmd) {
            slslr::RunConfig cfg = abl_opts.resolve();
            if (!abl_data.empty()) cfg.data.train = abl_data;
            const slslr::Dataset raw = load_required_dataset(cfg.data.train, "data");
            const slslr::Dataset data = normalized(raw, cfg.encoder.max_len);
            const fs::path out = cfg.output_dir;
            fs::create_directories(out);
            const auto suite = run_ablation_suite(data, make_pretrain_config(cfg));
            for (const auto& [name, result] : suite) {
                save_checkpoint(result.checkpoint, out / name / "checkpoint");
                save_train_log_csv(result.log, out / name / "train_log.csv");
                std::cout << name << ": final std " << result.log.steps.back().embedding_std
                          << '\n';
            }
            write_run_json("ablate", cfg, out);
            return kExitOk;
        }

        if (*exp_cmd) {
            slslr::RunConfig cfg = exp_opts.resolve();
            if (!exp_data.empty()) cfg.data.train = exp_data;
            const slslr::Checkpoint ckpt = slslr::load_checkpoint(exp_ckpt);
            const slslr::Dataset data = load_required_dataset(cfg.data.train, "data");
            const fs::path out = cfg.output_dir;
            fs::create_directories(out);
            const auto points = export_embeddings_2d(ckpt, data);
            save_embeddings_csv(points, out / "embeddings_2d.csv");
            write_run_json("export-embeddings", cfg, out);
            std::cout << "exported " << points.size() << " points\n";
            return kExitOk;
        }
    } catch (const slslr::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const slslr::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
