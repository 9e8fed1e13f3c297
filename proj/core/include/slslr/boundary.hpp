#pragma once

#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "slslr/augmentation.hpp"
#include "slslr/evaluation.hpp"
#include "slslr/trainer.hpp"
#include "slslr/types.hpp"

namespace slslr {

/// PaperLiteral stops at (and returns) the first k whose accuracy does not
/// improve on its predecessor, i.e. one past the last improvement. Peak
/// returns the last improving k instead.
enum class StopRule { PaperLiteral, Peak };

std::string to_string(StopRule rule);
StopRule stop_rule_from_string(const std::string& s);

struct BoundarySearchConfig {
    StopRule stop_rule = StopRule::PaperLiteral;
    PretrainConfig train; // reduced budget: every evaluation retrains from scratch
    EvalConfig eval;
    double split_test_fraction = 0.3;
    std::uint64_t seed = 0;

    BoundarySearchConfig() {
        train.epochs = 20;
        eval.repeats = 4;
    }
};

struct BoundaryResult {
    int ks_star = 0;
    int ke_star = 0;
    std::vector<std::pair<int, double>> trace_first; // (k, accuracy), increasing k
    std::vector<std::pair<int, double>> trace_last;
    StopRule stop_rule = StopRule::PaperLiteral;
};

/// Default prefix/suffix lengths (ceil(n/3), ceil(n/4)).
std::pair<int, int> default_boundaries(int n);

/// One evaluation of the boundary-search inner loop: every sequence's first
/// (or last) k frames are permuted by two independent draws to form the
/// positive pair, the model is pretrained with reduced budget on a
/// stratified train split, and the frozen backbone's linear accuracy on the
/// held-out split is returned. The same seed across k values keeps the
/// accuracy curve comparable point to point.
double segment_eval(int k, const Dataset& dataset, SegmentPosition position,
                    const PretrainConfig& train_cfg, const EvalConfig& eval_cfg,
                    std::uint64_t seed, double split_test_fraction = 0.3);

/// The search loop over a black-box accuracy function: evaluate k = 1, 2, ...
/// while accuracy strictly improves (ties stop). Exactly the returned k
/// evaluations are performed under PaperLiteral.
int find_optimal_k(const std::function<double(int)>& evaluate, int n, StopRule rule,
                   std::vector<std::pair<int, double>>* trace = nullptr);

int find_optimal_k(const Dataset& dataset, SegmentPosition position,
                   const BoundarySearchConfig& cfg,
                   std::vector<std::pair<int, double>>* trace = nullptr);

/// Runs the search for both positions and assembles the traces.
BoundaryResult search_boundary(const Dataset& dataset, const BoundarySearchConfig& cfg);

void save_boundary_json(const BoundaryResult& result, const std::filesystem::path& path);

/// CSV with header k,accuracy.
void save_trace_csv(const std::vector<std::pair<int, double>>& trace,
                    const std::filesystem::path& path);

} // namespace slslr
