#include "slslr/loss.hpp"

#include "slslr/errors.hpp"

namespace slslr {

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size())
        throw ArgumentError("mse: length mismatch (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    if (a.size() == 0) throw ArgumentError("mse: empty vectors");
    if (!a.allFinite() || !b.allFinite()) throw NumericError("mse: non-finite input");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

Mat stop_gradient(const Mat& z) { return z; }

PredictorBranch predictor_branch(const AblationFlags& flags) {
    return (flags.no_original || flags.permuted_branches) ? PredictorBranch::SecondView
                                                          : PredictorBranch::Original;
}

namespace {

/// Batch mean of per-row (1/n)||a - b||^2.
double batch_mse(const Mat& a, const Mat& b) {
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

Mat normalize_rows(const Mat& m) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double norm = m.row(r).norm();
        if (norm < 1e-12) throw NumericError("loss normalization: near-zero embedding row");
        out.row(r) = m.row(r) / norm;
    }
    return out;
}

/// Chain rule through row normalization: given d(loss)/d(m_hat), return
/// d(loss)/d(m) for m_hat = m / ||m||.
Mat normalize_rows_backward(const Mat& m, const Mat& m_hat, const Mat& d_hat) {
    Mat dm(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double norm = m.row(r).norm();
        const double dot = m_hat.row(r).dot(d_hat.row(r));
        dm.row(r) = (d_hat.row(r) - dot * m_hat.row(r)) / norm;
    }
    return dm;
}

LossBreakdown raw_ablation_loss(const Mat& z, const Mat& z1, const Mat& z2, const Mat& p,
                                const AblationFlags& flags, LossGrads* grads) {
    if (flags.no_original && flags.permuted_branches)
        throw ArgumentError("ablation_loss: no_original and permuted_branches are contradictory");

    const auto rows = z1.rows();
    const auto cols = z1.cols();
    auto check_shape = [&](const Mat& m, const char* name) {
        if (m.rows() != rows || m.cols() != cols)
            throw ArgumentError(std::string("ablation_loss: shape mismatch for ") + name);
        if (!m.allFinite()) throw NumericError(std::string("ablation_loss: non-finite ") + name);
    };
    if (rows < 1 || cols < 1) throw ArgumentError("ablation_loss: empty batch");
    check_shape(z, "z");
    check_shape(z2, "z2");
    check_shape(z1, "z1");
    if (!flags.no_predictor) check_shape(p, "p");

    // Roles after the optional branch permutation: `view` is the partner of
    // z1, `orig` feeds the predictor term.
    const Mat& view = flags.permuted_branches ? z : z2;
    const Mat& orig = flags.permuted_branches ? z2 : z;
    const Mat& pred_src = flags.no_original ? z2 : orig;
    const Mat& pred_out = flags.no_predictor ? pred_src : p;

    LossBreakdown out;
    out.l1 = batch_mse(z1, view);
    out.l2 = flags.no_original ? 0.0 : batch_mse(orig, view);
    out.l3 = batch_mse(pred_out, stop_gradient(z1));
    out.total = out.l1 + out.l2 + out.l3;

    if (grads) {
        const double scale = 2.0 / static_cast<double>(z1.size());
        Mat dz = Mat::Zero(rows, cols);
        Mat dz1 = scale * (z1 - view); // the predictor target is stop-gradient
        Mat dz2 = Mat::Zero(rows, cols);
        Mat dp = Mat::Zero(rows, cols);

        Mat& d_view = flags.permuted_branches ? dz : dz2;
        Mat& d_orig = flags.permuted_branches ? dz2 : dz;
        d_view -= scale * (z1 - view);
        if (!flags.no_original) {
            d_orig += scale * (orig - view);
            d_view -= scale * (orig - view);
        }
        const Mat d_l3 = scale * (pred_out - z1);
        if (flags.no_predictor) {
            Mat& d_src = flags.no_original ? dz2 : d_orig;
            d_src += d_l3;
        } else {
            dp = d_l3;
        }

        grads->dz = std::move(dz);
        grads->dz1 = std::move(dz1);
        grads->dz2 = std::move(dz2);
        grads->dp = std::move(dp);
    }
    return out;
}

} // namespace

LossBreakdown ablation_loss(const Mat& z, const Mat& z1, const Mat& z2, const Mat& p,
                            const AblationFlags& flags, LossGrads* grads, bool normalize) {
    if (!normalize) return raw_ablation_loss(z, z1, z2, p, flags, grads);

    const Mat zn = normalize_rows(z);
    const Mat z1n = normalize_rows(z1);
    const Mat z2n = normalize_rows(z2);
    const Mat pn = flags.no_predictor ? p : normalize_rows(p);

    LossGrads inner;
    const LossBreakdown out = raw_ablation_loss(zn, z1n, z2n, pn, flags, grads ? &inner : nullptr);
    if (grads) {
        grads->dz = normalize_rows_backward(z, zn, inner.dz);
        grads->dz1 = normalize_rows_backward(z1, z1n, inner.dz1);
        grads->dz2 = normalize_rows_backward(z2, z2n, inner.dz2);
        grads->dp = flags.no_predictor ? inner.dp : normalize_rows_backward(p, pn, inner.dp);
    }
    return out;
}

LossBreakdown sl_fpn_loss(const Mat& z, const Mat& z1, const Mat& z2, const Mat& p,
                          LossGrads* grads, bool normalize) {
    return ablation_loss(z, z1, z2, p, AblationFlags{}, grads, normalize);
}

} // namespace slslr
