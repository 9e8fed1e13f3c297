#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slslr/nn.hpp"
#include "slslr/rng.hpp"

namespace slslr {

using nn::Mat;

enum class PositionalEncoding { Learned, Sinusoidal };

std::string to_string(PositionalEncoding pe);
PositionalEncoding positional_encoding_from_string(const std::string& s);

struct EncoderConfig {
    int blocks = 12;
    int heads = 8;
    int embed_dim = 512;
    double dropout = 0.1;
    int input_layernorm_count = 2; // layer norms applied at the embedding stage
    int max_len = 64;
    PositionalEncoding positional_encoding = PositionalEncoding::Learned;
    int input_dim = 150; // landmarks * coords per frame
    bool use_padding_mask = false;

    void check() const;
    bool operator==(const EncoderConfig&) const = default;
};

struct HeadConfig {
    int projection_hidden = 512;
    int projection_out = 128; // also the predictor's input and output width
    int predictor_hidden = 128;

    void check() const;
    bool operator==(const HeadConfig&) const = default;
};

struct BlockParams {
    nn::LayerNormParams ln1;
    nn::AttentionParams attn;
    nn::LayerNormParams ln2;
    nn::LinearParams fc1, fc2;
};

struct EncoderParams {
    nn::LinearParams embed;
    std::vector<nn::LayerNormParams> input_ln;
    Mat pos; // max_len x embed_dim, empty for sinusoidal encoding
    std::vector<BlockParams> blocks;
};

struct MlpParams {
    nn::LinearParams fc1, fc2;
};

struct ModelParams {
    EncoderParams encoder;
    MlpParams projection;
    MlpParams predictor;
};

/// Canonical enumeration of named parameter tensors, in a fixed order shared
/// by the optimizer and the checkpoint format.
void visit_params(ModelParams& params, const std::function<void(const std::string&, Mat&)>& fn);
void visit_params(const ModelParams& params,
                  const std::function<void(const std::string&, const Mat&)>& fn);

std::size_t parameter_count(const ModelParams& params);

/// Fan-in-scaled truncated-normal weights (std sqrt(1/fan_in), clipped at
/// two standard deviations), zero biases, unit layer-norm gains,
/// truncated-normal(0.02) positional embeddings.
ModelParams init_params(const EncoderConfig& enc, const HeadConfig& head, std::uint64_t seed);

/// Tensors with the shapes the configs imply, for checkpoint loading.
ModelParams allocate_params(const EncoderConfig& enc, const HeadConfig& head);

ModelParams zeros_like(const ModelParams& params);

enum class Mode { Train, Eval };

struct BlockCache {
    nn::LayerNormCache ln1;
    nn::AttentionCache attn;
    nn::DropoutCache attn_drop;
    nn::LayerNormCache ln2;
    Mat ln2_out;
    Mat fc1_pre;
    Mat gelu_out;
    nn::DropoutCache mlp_drop;
};

struct SequenceCache {
    Mat x;
    std::vector<nn::LayerNormCache> input_ln;
    nn::DropoutCache embed_drop;
    std::vector<BlockCache> blocks;
    int valid_len = 0; // frames contributing to the mean pool
};

struct EncodeCache {
    std::vector<SequenceCache> seqs;
};

/// Per-frame embedding -> input layer norms -> positional encoding ->
/// transformer blocks (pre-norm, GELU MLP) -> mean pool over frames.
/// Returns B x embed_dim. Dropout draws from rng in train mode only.
Mat encode(const ModelParams& params, const EncoderConfig& cfg, const std::vector<Mat>& batch,
           Mode mode, Rng* rng = nullptr, EncodeCache* cache = nullptr,
           const std::vector<int>* lengths = nullptr);

void encode_backward(const ModelParams& params, const EncoderConfig& cfg,
                     const EncodeCache& cache, const Mat& dy, ModelParams& grads);

struct MlpCache {
    Mat x, pre, hidden;
};

Mat project(const ModelParams& params, const Mat& y, MlpCache* cache = nullptr);
Mat project_backward(const ModelParams& params, const MlpCache& cache, const Mat& dz,
                     ModelParams& grads);

Mat predict(const ModelParams& params, const Mat& z, MlpCache* cache = nullptr);
Mat predict_backward(const ModelParams& params, const MlpCache& cache, const Mat& dp,
                     ModelParams& grads);

struct ThreeBranchOutput {
    Mat z, z1, z2, p;
};

/// Shared-weight forward of the original sample and its two views;
/// p = predictor(z). Inputs must share shape.
ThreeBranchOutput forward_three_branch(const ModelParams& params, const EncoderConfig& cfg,
                                       const std::vector<Mat>& x, const std::vector<Mat>& x1,
                                       const std::vector<Mat>& x2, Mode mode, Rng* rng = nullptr);

/// Fixed sin/cos table, used when positional_encoding == Sinusoidal.
Mat sinusoidal_table(int rows, int dim);

} // namespace slslr
