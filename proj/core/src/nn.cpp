#include "slslr/nn.hpp"

#include <cmath>

#include "slslr/errors.hpp"

namespace slslr::nn {

Mat linear_forward(const Mat& x, const LinearParams& p) {
    if (x.cols() != p.w.rows())
        throw ArgumentError("linear_forward: input has " + std::to_string(x.cols()) +
                            " features, weight expects " + std::to_string(p.w.rows()));
    Mat y = x * p.w;
    y.rowwise() += p.b.row(0);
    return y;
}

Mat linear_backward(const Mat& x, const LinearParams& p, const Mat& dy, LinearParams& grad) {
    grad.w.noalias() += x.transpose() * dy;
    grad.b.row(0) += dy.colwise().sum();
    return dy * p.w.transpose();
}

Mat layernorm_forward(const Mat& x, const LayerNormParams& p, LayerNormCache& cache) {
    const auto n = x.cols();
    cache.xhat.resize(x.rows(), n);
    cache.inv_std.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.inv_std(r) = inv;
        cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
    }
    Mat y = cache.xhat;
    y.array().rowwise() *= p.gamma.row(0).array();
    y.rowwise() += p.beta.row(0);
    return y;
}

Mat layernorm_backward(const LayerNormParams& p, const LayerNormCache& cache, const Mat& dy,
                       LayerNormParams& grad) {
    grad.gamma.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    grad.beta.row(0) += dy.colwise().sum();

    Mat dx(dy.rows(), dy.cols());
    const double n = static_cast<double>(dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const Eigen::ArrayXd g = dy.row(r).array() * p.gamma.row(0).array();
        const double g_mean = g.mean();
        const double gx_mean = (g * cache.xhat.row(r).array()).sum() / n;
        dx.row(r) =
            ((g - g_mean - cache.xhat.row(r).array() * gx_mean) * cache.inv_std(r)).matrix();
    }
    return dx;
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
} // namespace

Mat gelu(const Mat& x) {
    return x.array().unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); })
        .matrix();
}

Mat gelu_backward(const Mat& x, const Mat& dy) {
    Mat d = x.array()
                .unaryExpr([](double v) {
                    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
                    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                    return cdf + v * pdf;
                })
                .matrix();
    return d.cwiseProduct(dy);
}

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

Mat relu_backward(const Mat& x, const Mat& dy) {
    return (x.array() > 0.0).select(dy, Mat::Zero(dy.rows(), dy.cols()));
}

Mat softmax_rows(const Mat& x) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        Eigen::ArrayXd e = (x.row(r).array() - m).exp();
        y.row(r) = (e / e.sum()).matrix();
    }
    return y;
}

Mat dropout_forward(const Mat& x, double rate, bool train, Rng* rng, DropoutCache& cache) {
    cache.keep_scale.resize(0, 0);
    if (!train || rate <= 0.0) return x;
    if (rate >= 1.0) throw ArgumentError("dropout rate must be < 1");
    if (!rng) throw ArgumentError("dropout in train mode needs a random source");
    std::bernoulli_distribution keep(1.0 - rate);
    cache.keep_scale.resize(x.rows(), x.cols());
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            cache.keep_scale(r, c) = keep(*rng) ? scale : 0.0;
    return x.cwiseProduct(cache.keep_scale);
}

Mat dropout_backward(const DropoutCache& cache, const Mat& dy) {
    if (cache.keep_scale.size() == 0) return dy;
    return dy.cwiseProduct(cache.keep_scale);
}

Mat attention_forward(const Mat& x, const AttentionParams& p, int heads, int valid_len,
                      AttentionCache& cache) {
    const auto n = x.rows();
    const auto e = x.cols();
    if (e % heads != 0) throw ArgumentError("attention: embed dim not divisible by head count");
    const auto dh = e / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    cache.x = x;
    cache.q = linear_forward(x, p.q);
    cache.k = linear_forward(x, p.k);
    cache.v = linear_forward(x, p.v);
    cache.probs.assign(static_cast<std::size_t>(heads), Mat());
    cache.concat.resize(n, e);
    cache.valid_len = valid_len;

    for (int h = 0; h < heads; ++h) {
        auto qh = cache.q.middleCols(h * dh, dh);
        auto kh = cache.k.middleCols(h * dh, dh);
        auto vh = cache.v.middleCols(h * dh, dh);
        Mat scores = qh * kh.transpose() * scale;
        if (valid_len >= 0 && valid_len < n)
            scores.rightCols(n - valid_len).setConstant(-1e30);
        cache.probs[static_cast<std::size_t>(h)] = softmax_rows(scores);
        cache.concat.middleCols(h * dh, dh) = cache.probs[static_cast<std::size_t>(h)] * vh;
    }
    return linear_forward(cache.concat, p.o);
}

Mat attention_backward(const AttentionParams& p, int heads, const AttentionCache& cache,
                       const Mat& dy, AttentionParams& grad) {
    const auto n = cache.x.rows();
    const auto e = cache.x.cols();
    const auto dh = e / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const Mat d_concat = linear_backward(cache.concat, p.o, dy, grad.o);

    Mat dq = Mat::Zero(n, e), dk = Mat::Zero(n, e), dv = Mat::Zero(n, e);
    for (int h = 0; h < heads; ++h) {
        const Mat& probs = cache.probs[static_cast<std::size_t>(h)];
        auto vh = cache.v.middleCols(h * dh, dh);
        auto qh = cache.q.middleCols(h * dh, dh);
        auto kh = cache.k.middleCols(h * dh, dh);
        const auto d_out = d_concat.middleCols(h * dh, dh);

        dv.middleCols(h * dh, dh) = probs.transpose() * d_out;
        Mat d_probs = d_out * vh.transpose();
        // softmax backward, row-wise
        Mat d_scores(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double dot = d_probs.row(r).dot(probs.row(r));
            d_scores.row(r) = (probs.row(r).array() * (d_probs.row(r).array() - dot)).matrix();
        }
        dq.middleCols(h * dh, dh) = d_scores * kh * scale;
        dk.middleCols(h * dh, dh) = d_scores.transpose() * qh * scale;
    }

    Mat dx = linear_backward(cache.x, p.q, dq, grad.q);
    dx += linear_backward(cache.x, p.k, dk, grad.k);
    dx += linear_backward(cache.x, p.v, dv, grad.v);
    return dx;
}

} // namespace slslr::nn
