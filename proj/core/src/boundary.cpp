#include "slslr/boundary.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "slslr/errors.hpp"

namespace slslr {

using json = nlohmann::ordered_json;

std::string to_string(StopRule rule) {
    return rule == StopRule::PaperLiteral ? "paper_literal" : "peak";
}

StopRule stop_rule_from_string(const std::string& s) {
    if (s == "paper_literal") return StopRule::PaperLiteral;
    if (s == "peak") return StopRule::Peak;
    throw ArgumentError("unknown stop rule '" + s + "'");
}

std::pair<int, int> default_boundaries(int n) {
    if (n < 3) throw ArgumentError("default_boundaries: need n >= 3");
    return {static_cast<int>(std::ceil(n / 3.0)), static_cast<int>(std::ceil(n / 4.0))};
}

double segment_eval(int k, const Dataset& dataset, SegmentPosition position,
                    const PretrainConfig& train_cfg, const EvalConfig& eval_cfg,
                    std::uint64_t seed, double split_test_fraction) {
    if (dataset.samples.empty()) throw ArgumentError("segment_eval: empty dataset");
    const int n = dataset.samples.front().sequence.frame_count();
    for (const Sample& s : dataset.samples) {
        if (!s.label) throw ArgumentError("segment_eval: dataset must be labeled");
        if (s.sequence.frame_count() != n)
            throw ArgumentError("segment_eval: sequences must share one length");
    }
    if (k < 1 || k > n)
        throw ArgumentError("segment_eval: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(n) + "]");

    auto [train_split, test_split] =
        stratified_split(dataset, split_test_fraction, derive_seed(seed, 0x5b17ULL));

    PretrainConfig cfg = train_cfg;
    cfg.seed = seed;
    cfg.encoder.max_len = n;
    cfg.augmentation.mode = AugmentationMode::SegmentPermutation;
    cfg.augmentation.segment_position = position;
    cfg.augmentation.segment_k = k;
    const PretrainResult result = pretrain(train_split, cfg);

    EvalConfig probe_cfg = eval_cfg;
    probe_cfg.seed = derive_seed(seed, 0xea17ULL);
    return linear_eval(result.checkpoint, train_split, test_split, probe_cfg).top1_mean;
}

int find_optimal_k(const std::function<double(int)>& evaluate, int n, StopRule rule,
                   std::vector<std::pair<int, double>>* trace) {
    if (n < 2) throw ArgumentError("find_optimal_k: need n >= 2");
    if (trace) trace->clear();
    auto eval_at = [&](int k) {
        const double a = evaluate(k);
        if (trace) trace->emplace_back(k, a);
        return a;
    };

    int k = 1;
    double a_prev = eval_at(k);
    k = 2;
    double a_curr = eval_at(k);
    while (k < n && a_curr > a_prev) {
        a_prev = a_curr;
        k += 1;
        a_curr = eval_at(k);
    }
    return rule == StopRule::PaperLiteral ? k : k - 1;
}

int find_optimal_k(const Dataset& dataset, SegmentPosition position,
                   const BoundarySearchConfig& cfg,
                   std::vector<std::pair<int, double>>* trace) {
    if (dataset.samples.empty()) throw ArgumentError("find_optimal_k: empty dataset");
    const int n = dataset.samples.front().sequence.frame_count();
    const std::uint64_t seed =
        derive_seed(cfg.seed, position == SegmentPosition::First ? 0x0f1257ULL : 0x1a57ULL);
    return find_optimal_k(
        [&](int k) {
            return segment_eval(k, dataset, position, cfg.train, cfg.eval, seed,
                                cfg.split_test_fraction);
        },
        n, cfg.stop_rule, trace);
}

BoundaryResult search_boundary(const Dataset& dataset, const BoundarySearchConfig& cfg) {
    BoundaryResult result;
    result.stop_rule = cfg.stop_rule;
    result.ks_star = find_optimal_k(dataset, SegmentPosition::First, cfg, &result.trace_first);
    result.ke_star = find_optimal_k(dataset, SegmentPosition::Last, cfg, &result.trace_last);
    return result;
}

void save_boundary_json(const BoundaryResult& result, const std::filesystem::path& path) {
    json j;
    j["ks_star"] = result.ks_star;
    j["ke_star"] = result.ke_star;
    j["stop_rule"] = to_string(result.stop_rule);
    for (const char* key : {"trace_first", "trace_last"}) {
        const auto& trace =
            std::string(key) == "trace_first" ? result.trace_first : result.trace_last;
        j[key] = json::array();
        for (const auto& [k, acc] : trace) {
            json point;
            point["k"] = k;
            point["accuracy"] = acc;
            j[key].push_back(std::move(point));
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void save_trace_csv(const std::vector<std::pair<int, double>>& trace,
                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "k,accuracy\n";
    out.precision(17);
    for (const auto& [k, acc] : trace) out << k << ',' << acc << '\n';
}

} // namespace slslr
