#include "slslr/model.hpp"

#include <cmath>

#include "slslr/errors.hpp"

namespace slslr {

std::string to_string(PositionalEncoding pe) {
    return pe == PositionalEncoding::Learned ? "learned" : "sinusoidal";
}

PositionalEncoding positional_encoding_from_string(const std::string& s) {
    if (s == "learned") return PositionalEncoding::Learned;
    if (s == "sinusoidal") return PositionalEncoding::Sinusoidal;
    throw ArgumentError("unknown positional encoding '" + s + "'");
}

void EncoderConfig::check() const {
    if (blocks < 1) throw ArgumentError("encoder: blocks must be >= 1");
    if (heads < 1 || embed_dim < 1 || embed_dim % heads != 0)
        throw ArgumentError("encoder: embed_dim must be a positive multiple of heads");
    if (dropout < 0.0 || dropout >= 1.0) throw ArgumentError("encoder: dropout must be in [0,1)");
    if (input_layernorm_count < 0 || input_layernorm_count > 2)
        throw ArgumentError("encoder: input_layernorm_count must be 0, 1 or 2");
    if (max_len < 1) throw ArgumentError("encoder: max_len must be >= 1");
    if (input_dim < 1) throw ArgumentError("encoder: input_dim must be >= 1");
}

void HeadConfig::check() const {
    if (projection_hidden < 1 || projection_out < 1 || predictor_hidden < 1)
        throw ArgumentError("head: all widths must be >= 1");
}

namespace {

template <typename Params, typename Fn>
void visit_impl(Params& p, Fn&& fn) {
    fn("encoder.embed.w", p.encoder.embed.w);
    fn("encoder.embed.b", p.encoder.embed.b);
    for (std::size_t i = 0; i < p.encoder.input_ln.size(); ++i) {
        const std::string base = "encoder.input_ln" + std::to_string(i);
        fn(base + ".gamma", p.encoder.input_ln[i].gamma);
        fn(base + ".beta", p.encoder.input_ln[i].beta);
    }
    if (p.encoder.pos.size() > 0) fn("encoder.pos", p.encoder.pos);
    for (std::size_t i = 0; i < p.encoder.blocks.size(); ++i) {
        auto& blk = p.encoder.blocks[i];
        const std::string base = "encoder.block" + std::to_string(i);
        fn(base + ".ln1.gamma", blk.ln1.gamma);
        fn(base + ".ln1.beta", blk.ln1.beta);
        fn(base + ".attn.q.w", blk.attn.q.w);
        fn(base + ".attn.q.b", blk.attn.q.b);
        fn(base + ".attn.k.w", blk.attn.k.w);
        fn(base + ".attn.k.b", blk.attn.k.b);
        fn(base + ".attn.v.w", blk.attn.v.w);
        fn(base + ".attn.v.b", blk.attn.v.b);
        fn(base + ".attn.o.w", blk.attn.o.w);
        fn(base + ".attn.o.b", blk.attn.o.b);
        fn(base + ".ln2.gamma", blk.ln2.gamma);
        fn(base + ".ln2.beta", blk.ln2.beta);
        fn(base + ".fc1.w", blk.fc1.w);
        fn(base + ".fc1.b", blk.fc1.b);
        fn(base + ".fc2.w", blk.fc2.w);
        fn(base + ".fc2.b", blk.fc2.b);
    }
    fn("projection.fc1.w", p.projection.fc1.w);
    fn("projection.fc1.b", p.projection.fc1.b);
    fn("projection.fc2.w", p.projection.fc2.w);
    fn("projection.fc2.b", p.projection.fc2.b);
    fn("predictor.fc1.w", p.predictor.fc1.w);
    fn("predictor.fc1.b", p.predictor.fc1.b);
    fn("predictor.fc2.w", p.predictor.fc2.w);
    fn("predictor.fc2.b", p.predictor.fc2.b);
}

Mat trunc_normal(Eigen::Index rows, Eigen::Index cols, double std_dev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, std_dev);
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double v = dist(rng);
            while (std::abs(v) > 2.0 * std_dev) v = dist(rng);
            m(r, c) = v;
        }
    return m;
}

nn::LinearParams init_linear(int in, int out, Rng& rng) {
    // Fan-in-scaled truncated normal keeps activation variance width-independent.
    return {trunc_normal(in, out, std::sqrt(1.0 / in), rng), Mat::Zero(1, out)};
}

nn::LayerNormParams init_layernorm(int n) { return {Mat::Ones(1, n), Mat::Zero(1, n)}; }

} // namespace

void visit_params(ModelParams& params, const std::function<void(const std::string&, Mat&)>& fn) {
    visit_impl(params, fn);
}

void visit_params(const ModelParams& params,
                  const std::function<void(const std::string&, const Mat&)>& fn) {
    visit_impl(params, fn);
}

std::size_t parameter_count(const ModelParams& params) {
    std::size_t n = 0;
    visit_params(params, [&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

ModelParams init_params(const EncoderConfig& enc, const HeadConfig& head, std::uint64_t seed) {
    enc.check();
    head.check();
    Rng rng(derive_seed(seed, 0x1d17ULL));

    ModelParams p;
    p.encoder.embed = init_linear(enc.input_dim, enc.embed_dim, rng);
    p.encoder.input_ln.resize(static_cast<std::size_t>(enc.input_layernorm_count));
    for (auto& ln : p.encoder.input_ln) ln = init_layernorm(enc.embed_dim);
    if (enc.positional_encoding == PositionalEncoding::Learned)
        p.encoder.pos = trunc_normal(enc.max_len, enc.embed_dim, 0.02, rng);
    p.encoder.blocks.resize(static_cast<std::size_t>(enc.blocks));
    for (auto& blk : p.encoder.blocks) {
        blk.ln1 = init_layernorm(enc.embed_dim);
        blk.attn.q = init_linear(enc.embed_dim, enc.embed_dim, rng);
        blk.attn.k = init_linear(enc.embed_dim, enc.embed_dim, rng);
        blk.attn.v = init_linear(enc.embed_dim, enc.embed_dim, rng);
        blk.attn.o = init_linear(enc.embed_dim, enc.embed_dim, rng);
        blk.ln2 = init_layernorm(enc.embed_dim);
        blk.fc1 = init_linear(enc.embed_dim, 4 * enc.embed_dim, rng);
        blk.fc2 = init_linear(4 * enc.embed_dim, enc.embed_dim, rng);
    }
    p.projection.fc1 = init_linear(enc.embed_dim, head.projection_hidden, rng);
    p.projection.fc2 = init_linear(head.projection_hidden, head.projection_out, rng);
    p.predictor.fc1 = init_linear(head.projection_out, head.predictor_hidden, rng);
    p.predictor.fc2 = init_linear(head.predictor_hidden, head.projection_out, rng);
    return p;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z = params;
    visit_params(z, [](const std::string&, Mat& m) { m.setZero(); });
    return z;
}

ModelParams allocate_params(const EncoderConfig& enc, const HeadConfig& head) {
    enc.check();
    head.check();
    ModelParams p;
    auto lin = [](int in, int out) {
        return nn::LinearParams{Mat::Zero(in, out), Mat::Zero(1, out)};
    };
    p.encoder.embed = lin(enc.input_dim, enc.embed_dim);
    p.encoder.input_ln.resize(static_cast<std::size_t>(enc.input_layernorm_count));
    for (auto& ln : p.encoder.input_ln) ln = init_layernorm(enc.embed_dim);
    if (enc.positional_encoding == PositionalEncoding::Learned)
        p.encoder.pos = Mat::Zero(enc.max_len, enc.embed_dim);
    p.encoder.blocks.resize(static_cast<std::size_t>(enc.blocks));
    for (auto& blk : p.encoder.blocks) {
        blk.ln1 = init_layernorm(enc.embed_dim);
        blk.attn.q = lin(enc.embed_dim, enc.embed_dim);
        blk.attn.k = lin(enc.embed_dim, enc.embed_dim);
        blk.attn.v = lin(enc.embed_dim, enc.embed_dim);
        blk.attn.o = lin(enc.embed_dim, enc.embed_dim);
        blk.ln2 = init_layernorm(enc.embed_dim);
        blk.fc1 = lin(enc.embed_dim, 4 * enc.embed_dim);
        blk.fc2 = lin(4 * enc.embed_dim, enc.embed_dim);
    }
    p.projection.fc1 = lin(enc.embed_dim, head.projection_hidden);
    p.projection.fc2 = lin(head.projection_hidden, head.projection_out);
    p.predictor.fc1 = lin(head.projection_out, head.predictor_hidden);
    p.predictor.fc2 = lin(head.predictor_hidden, head.projection_out);
    return p;
}

Mat sinusoidal_table(int rows, int dim) {
    Mat table(rows, dim);
    for (int pos = 0; pos < rows; ++pos)
        for (int i = 0; i < dim; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / dim;
            const double rate = std::pow(10000.0, exponent);
            const double v = pos / rate;
            table(pos, i) = (i % 2 == 0) ? std::sin(v) : std::cos(v);
        }
    return table;
}

Mat encode(const ModelParams& params, const EncoderConfig& cfg, const std::vector<Mat>& batch,
           Mode mode, Rng* rng, EncodeCache* cache, const std::vector<int>* lengths) {
    cfg.check();
    if (batch.empty()) throw ArgumentError("encode: empty batch");
    const auto n = batch.front().rows();
    const auto f = batch.front().cols();
    if (f != cfg.input_dim)
        throw ArgumentError("encode: frame size " + std::to_string(f) + " != configured input_dim " +
                            std::to_string(cfg.input_dim));
    if (n > cfg.max_len)
        throw ArgumentError("encode: sequence length " + std::to_string(n) + " exceeds max_len " +
                            std::to_string(cfg.max_len));
    for (const Mat& x : batch)
        if (x.rows() != n || x.cols() != f)
            throw ArgumentError("encode: batch shapes are not homogeneous");
    if (lengths && lengths->size() != batch.size())
        throw ArgumentError("encode: lengths size mismatch");

    const bool train = mode == Mode::Train;
    const Mat pos = cfg.positional_encoding == PositionalEncoding::Learned
                        ? Mat(params.encoder.pos.topRows(n))
                        : sinusoidal_table(static_cast<int>(n), cfg.embed_dim);

    if (cache) cache->seqs.assign(batch.size(), SequenceCache{});
    Mat y(static_cast<Eigen::Index>(batch.size()), cfg.embed_dim);

    for (std::size_t b = 0; b < batch.size(); ++b) {
        SequenceCache local;
        SequenceCache& sc = cache ? cache->seqs[b] : local;
        sc.x = batch[b];
        int valid = static_cast<int>(n);
        if (cfg.use_padding_mask && lengths) valid = std::min<int>((*lengths)[b], valid);
        if (valid < 1) throw ArgumentError("encode: sample with no valid frames");
        sc.valid_len = valid;

        Mat h = nn::linear_forward(sc.x, params.encoder.embed);
        sc.input_ln.resize(params.encoder.input_ln.size());
        for (std::size_t i = 0; i < params.encoder.input_ln.size(); ++i)
            h = nn::layernorm_forward(h, params.encoder.input_ln[i], sc.input_ln[i]);
        h += pos;
        h = nn::dropout_forward(h, cfg.dropout, train, rng, sc.embed_drop);

        sc.blocks.resize(params.encoder.blocks.size());
        const int mask_len = cfg.use_padding_mask ? valid : -1;
        for (std::size_t i = 0; i < params.encoder.blocks.size(); ++i) {
            const BlockParams& blk = params.encoder.blocks[i];
            BlockCache& bc = sc.blocks[i];
            Mat a_in = nn::layernorm_forward(h, blk.ln1, bc.ln1);
            Mat attn_out = nn::attention_forward(a_in, blk.attn, cfg.heads, mask_len, bc.attn);
            h += nn::dropout_forward(attn_out, cfg.dropout, train, rng, bc.attn_drop);

            bc.ln2_out = nn::layernorm_forward(h, blk.ln2, bc.ln2);
            bc.fc1_pre = nn::linear_forward(bc.ln2_out, blk.fc1);
            bc.gelu_out = nn::gelu(bc.fc1_pre);
            Mat m_out = nn::linear_forward(bc.gelu_out, blk.fc2);
            h += nn::dropout_forward(m_out, cfg.dropout, train, rng, bc.mlp_drop);
        }

        y.row(static_cast<Eigen::Index>(b)) = h.topRows(valid).colwise().mean();
    }

    if (!y.allFinite())
        throw NumericError("encode: non-finite activations in pooled representation");
    return y;
}

void encode_backward(const ModelParams& params, const EncoderConfig& cfg,
                     const EncodeCache& cache, const Mat& dy, ModelParams& grads) {
    if (static_cast<std::size_t>(dy.rows()) != cache.seqs.size())
        throw ArgumentError("encode_backward: dy rows do not match cached batch");

    for (std::size_t b = 0; b < cache.seqs.size(); ++b) {
        const SequenceCache& sc = cache.seqs[b];
        const auto n = sc.x.rows();
        const int valid = sc.valid_len;

        Mat dh = Mat::Zero(n, cfg.embed_dim);
        dh.topRows(valid).rowwise() = dy.row(static_cast<Eigen::Index>(b)) / valid;

        for (std::size_t i = params.encoder.blocks.size(); i-- > 0;) {
            const BlockParams& blk = params.encoder.blocks[i];
            const BlockCache& bc = sc.blocks[i];
            BlockParams& g = grads.encoder.blocks[i];

            Mat d_branch = nn::dropout_backward(bc.mlp_drop, dh);
            Mat d_gelu_out = nn::linear_backward(bc.gelu_out, blk.fc2, d_branch, g.fc2);
            Mat d_fc1_pre = nn::gelu_backward(bc.fc1_pre, d_gelu_out);
            Mat d_m_in = nn::linear_backward(bc.ln2_out, blk.fc1, d_fc1_pre, g.fc1);
            dh += nn::layernorm_backward(blk.ln2, bc.ln2, d_m_in, g.ln2);

            Mat d_attn = nn::dropout_backward(bc.attn_drop, dh);
            Mat d_a_in = nn::attention_backward(blk.attn, cfg.heads, bc.attn, d_attn, g.attn);
            dh += nn::layernorm_backward(blk.ln1, bc.ln1, d_a_in, g.ln1);
        }

        dh = nn::dropout_backward(sc.embed_drop, dh);
        if (cfg.positional_encoding == PositionalEncoding::Learned)
            grads.encoder.pos.topRows(n) += dh;
        for (std::size_t i = params.encoder.input_ln.size(); i-- > 0;)
            dh = nn::layernorm_backward(params.encoder.input_ln[i], sc.input_ln[i], dh,
                                        grads.encoder.input_ln[i]);
        nn::linear_backward(sc.x, params.encoder.embed, dh, grads.encoder.embed);
    }
}

namespace {

Mat mlp_forward(const MlpParams& p, const Mat& x, MlpCache* cache) {
    MlpCache local;
    MlpCache& c = cache ? *cache : local;
    c.x = x;
    c.pre = nn::linear_forward(x, p.fc1);
    c.hidden = nn::relu(c.pre);
    return nn::linear_forward(c.hidden, p.fc2);
}

Mat mlp_backward(const MlpParams& p, const MlpCache& c, const Mat& dout, MlpParams& g) {
    Mat d_hidden = nn::linear_backward(c.hidden, p.fc2, dout, g.fc2);
    Mat d_pre = nn::relu_backward(c.pre, d_hidden);
    return nn::linear_backward(c.x, p.fc1, d_pre, g.fc1);
}

} // namespace

Mat project(const ModelParams& params, const Mat& y, MlpCache* cache) {
    return mlp_forward(params.projection, y, cache);
}

Mat project_backward(const ModelParams& params, const MlpCache& cache, const Mat& dz,
                     ModelParams& grads) {
    return mlp_backward(params.projection, cache, dz, grads.projection);
}

Mat predict(const ModelParams& params, const Mat& z, MlpCache* cache) {
    return mlp_forward(params.predictor, z, cache);
}

Mat predict_backward(const ModelParams& params, const MlpCache& cache, const Mat& dp,
                     ModelParams& grads) {
    return mlp_backward(params.predictor, cache, dp, grads.predictor);
}

ThreeBranchOutput forward_three_branch(const ModelParams& params, const EncoderConfig& cfg,
                                       const std::vector<Mat>& x, const std::vector<Mat>& x1,
                                       const std::vector<Mat>& x2, Mode mode, Rng* rng) {
    if (x.size() != x1.size() || x.size() != x2.size())
        throw ArgumentError("forward_three_branch: branch batch sizes differ");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].rows() != x1[i].rows() || x[i].rows() != x2[i].rows() ||
            x[i].cols() != x1[i].cols() || x[i].cols() != x2[i].cols())
            throw ArgumentError("forward_three_branch: branch shapes differ");

    ThreeBranchOutput out;
    out.z = project(params, encode(params, cfg, x, mode, rng));
    out.z1 = project(params, encode(params, cfg, x1, mode, rng));
    out.z2 = project(params, encode(params, cfg, x2, mode, rng));
    out.p = predict(params, out.z);
    return out;
}

} // namespace slslr
