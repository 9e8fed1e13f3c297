#pragma once

#include <Eigen/Core>

#include "slslr/nn.hpp"

namespace slslr {

using nn::Mat;

struct LossBreakdown {
    double l1 = 0.0; // view-to-view term
    double l2 = 0.0; // original-to-view term
    double l3 = 0.0; // predictor term against a stop-gradient target
    double total = 0.0;
};

/// (1/n) * ||a - b||^2.
double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Identity in the forward pass. The backward-blocking behaviour lives in the
/// loss gradients: the target of the predictor term receives no gradient.
Mat stop_gradient(const Mat& z);

struct AblationFlags {
    bool no_predictor = false;     // predictor replaced by the identity
    bool no_original = false;      // original branch dropped, two-view loss
    bool permuted_branches = false; // original sample and second view swap roles

    bool operator==(const AblationFlags&) const = default;
};

/// Gradients of the batch-mean total with respect to the four inputs.
/// dz1 carries only the view-to-view term: the predictor target is behind
/// stop-gradient. dp is zero under no_predictor.
struct LossGrads {
    Mat dz, dz1, dz2, dp;
};

/// Batch-mean three-term objective. Rows are samples.
/// p must be the predictor output for the original branch.
/// normalize applies row-wise unit normalization to every input before the
/// MSE terms (off by default; the printed objective uses raw embeddings).
LossBreakdown sl_fpn_loss(const Mat& z, const Mat& z1, const Mat& z2, const Mat& p,
                          LossGrads* grads = nullptr, bool normalize = false);

/// Ablation variants. p must be the predictor output evaluated on the branch
/// the variant routes through it: z normally, z2 under no_original or
/// permuted_branches (it is ignored under no_predictor).
/// no_original + permuted_branches is contradictory (nothing left to swap).
LossBreakdown ablation_loss(const Mat& z, const Mat& z1, const Mat& z2, const Mat& p,
                            const AblationFlags& flags, LossGrads* grads = nullptr,
                            bool normalize = false);

/// Which branch the predictor consumes for the given flags.
enum class PredictorBranch { Original, SecondView };
PredictorBranch predictor_branch(const AblationFlags& flags);

} // namespace slslr
