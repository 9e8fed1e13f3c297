#pragma once

#include <vector>

#include <Eigen/Core>

#include "slslr/rng.hpp"

namespace slslr::nn {

using Mat = Eigen::MatrixXd;

// All parameters are matrices; biases and layer-norm affines are 1 x n rows.
// Backward functions accumulate into the gradient structs so that batched
// samples and shared-weight branches sum naturally.

struct LinearParams {
    Mat w; // in x out
    Mat b; // 1 x out
};

Mat linear_forward(const Mat& x, const LinearParams& p);
Mat linear_backward(const Mat& x, const LinearParams& p, const Mat& dy, LinearParams& grad);

struct LayerNormParams {
    Mat gamma; // 1 x n
    Mat beta;  // 1 x n
};

struct LayerNormCache {
    Mat xhat;
    Eigen::VectorXd inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

Mat layernorm_forward(const Mat& x, const LayerNormParams& p, LayerNormCache& cache);
Mat layernorm_backward(const LayerNormParams& p, const LayerNormCache& cache, const Mat& dy,
                       LayerNormParams& grad);

Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& x, const Mat& dy);

Mat relu(const Mat& x);
Mat relu_backward(const Mat& x, const Mat& dy);

Mat softmax_rows(const Mat& x);

struct DropoutCache {
    Mat keep_scale; // elementwise multiplier, empty when inactive
};

/// Inverted dropout; identity when rate == 0 or train == false.
Mat dropout_forward(const Mat& x, double rate, bool train, Rng* rng, DropoutCache& cache);
Mat dropout_backward(const DropoutCache& cache, const Mat& dy);

struct AttentionParams {
    LinearParams q, k, v, o;
};

struct AttentionCache {
    Mat x, q, k, v;
    std::vector<Mat> probs; // per head, rows = queries
    Mat concat;
    int valid_len = -1; // -1: no padding mask
};

/// Multi-head scaled dot-product self-attention over rows of x (N x E).
/// When valid_len >= 0, keys/values at positions >= valid_len are masked out.
Mat attention_forward(const Mat& x, const AttentionParams& p, int heads, int valid_len,
                      AttentionCache& cache);
Mat attention_backward(const AttentionParams& p, int heads, const AttentionCache& cache,
                       const Mat& dy, AttentionParams& grad);

} // namespace slslr::nn
