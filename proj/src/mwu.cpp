#include "robustreg/mwu.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace robustreg {

namespace {

void check_common(const Mat& Z, double k) {
    if (Z.rows() == 0 || Z.cols() == 0) throw NumericalError("mw: empty data");
    double rows = static_cast<double>(Z.rows());
    if (!(k > 0.0) || !(2.0 * k < rows)) throw NumericalError("mw: slack k must satisfy 0 < 2k < rows");
}

Mat matrix_sqrt_psd(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    double floor = 1e-12 * std::max(std::abs(es.eigenvalues().maxCoeff()), 0.0);
    Vec d = es.eigenvalues();
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = d(i) > floor ? std::sqrt(d(i)) : 0.0;
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

MwTrace mw_iterate(const Mat& Z, const MwParams& params, Rng rng) {
    check_common(Z, params.k);
    if (!(params.margin_lb > 0.0)) throw NumericalError("mw: margin lower bound must be positive");
    if (!(params.radius > 0.0)) throw NumericalError("mw: radius must be positive");

    const Eigen::Index rows = Z.rows();
    const double calK = static_cast<double>(rows);

    double u_norm = Z.rowwise().squaredNorm().maxCoeff();
    if (params.U > 0.0) {
        if (params.U < u_norm * (1.0 - 1e-12)) throw NumericalError("mw: stale norm bound U");
        u_norm = params.U;
    }
    const double u_loss = u_norm * params.radius * params.radius;

    double lb = params.margin_lb;
    if (params.margin_lb_frac > 0.0) lb = std::max(lb, params.margin_lb_frac * std::sqrt(u_loss));
    double t_real = std::floor(40.0 * u_loss * (1.0 - 2.0 * params.k / calK) / (lb * lb));
    if (t_real < 1.0) {
        std::ostringstream os;
        os << "mw: round count floored to zero (margin_lb=" << params.margin_lb << ", loss bound=" << u_loss
           << ")";
        throw MwMarginError(os.str(), params.margin_lb, u_loss);
    }
    long T = static_cast<long>(std::min(t_real, static_cast<double>(params.max_rounds)));

    MwTrace trace;
    trace.rounds = T;
    trace.truncated = t_real > static_cast<double>(params.max_rounds);
    trace.U_norm = u_norm;
    trace.U_loss = u_loss;
    trace.M = Mat::Zero(Z.cols(), Z.cols());
    trace.cumulative_loss = Vec::Zero(rows);
    if (params.record_history) {
        trace.weight_history.resize(T, rows);
        trace.loss_history.resize(T, rows);
    }

    const double cap = 1.0 / (2.0 * params.k);
    Vec w = Vec::Constant(rows, 1.0 / calK);
    Mat warm;  // Ritz block carried across rounds; the Gram drifts slowly
    for (long t = 0; t < T; ++t) {
        Mat weighted = Z.array().colwise() * w.array().sqrt();
        Mat gram = weighted.transpose() * weighted;
        EigPair eig = top_eigenvector(gram, params.eig_tol, params.eig_max_iter,
                                      rng.split("eig", static_cast<std::uint64_t>(t)), &warm);
        Vec v = params.radius * eig.vector;

        Vec losses = (Z * v).array().square();
        if (losses.maxCoeff() > u_loss * (1.0 + 1e-9))
            throw NumericalError("mw: loss exceeded its ceiling (stale U)");
        trace.cumulative_loss += losses;
        if (params.record_history) {
            trace.weight_history.row(t) = w.transpose();
            trace.loss_history.row(t) = losses.transpose();
        }
        trace.M += v * v.transpose();

        Vec updated = w.array() * (1.0 - losses.array() / (2.0 * u_loss)).max(0.0);
        double total = updated.sum();
        if (total <= 0.0) throw NumericalError("mw: weights collapsed to zero");
        w = kl_project_capped_simplex(updated / total, cap);
    }
    trace.M /= static_cast<double>(T);
    return trace;
}

MarginCertificate spherical_round(const Mat& Z, const Mat& M, int samples, double k, double k_prime,
                                  Rng rng, double phi) {
    if (Z.rows() == 0 || Z.cols() == 0) throw NumericalError("round: empty data");
    if (samples < 1) throw NumericalError("round: need at least one sample");
    const int calK = static_cast<int>(Z.rows());

    int quantile_idx = calK - static_cast<int>(std::floor(k_prime + 1e-12));
    if (quantile_idx < 1) throw NumericalError("round: slack k' leaves no order statistic");
    if (quantile_idx > calK) quantile_idx = calK;

    Mat root = matrix_sqrt_psd(M);
    Mat dirs = sample_unit_sphere(static_cast<int>(Z.cols()), samples, rng.split("sphere"));

    double best_val = -1.0;
    Vec best_v;
    for (int s = 0; s < samples; ++s) {
        Vec v = root * dirs.row(s).transpose();
        Vec scores = (Z * v).cwiseAbs();
        double val = order_statistic(scores, RankOrder::descending, quantile_idx);
        if (val > best_val) {
            best_val = val;
            best_v = v;
        }
    }

    MarginCertificate cert;
    cert.theta = std::max(best_val, 0.0);
    int sign_idx = calK - static_cast<int>(std::floor(k + k_prime + 1e-12));
    sign_idx = std::max(1, std::min(calK, sign_idx));
    Vec signed_scores = Z * best_v;
    double one_sided = order_statistic(signed_scores, RankOrder::descending, sign_idx);
    // >= rather than >: on all-tied data the aligned sign must win.
    if (one_sided >= cert.theta) {
        cert.v = best_v;
    } else {
        cert.v = -best_v;
        cert.sign_flipped = true;
    }
    cert.satisfied_count = margin_satisfied_count(Z, cert.v, cert.theta);
    cert.p_diag = (2.0 * phi / 3.14159265358979323846) * (1.0 - 2.0 * k / calK) - (1.0 - k_prime / calK);
    return cert;
}

MwResult mw(const Mat& Z, const MwParams& params, Rng rng) {
    MwResult res;
    res.trace = mw_iterate(Z, params, rng.split("iterate"));
    res.certificate =
        spherical_round(Z, res.trace.M, params.samples, params.k, params.k_prime, rng.split("round"),
                        params.phi);
    res.certificate.rounds = res.trace.rounds;
    res.certificate.truncated = res.trace.truncated;
    return res;
}

int margin_satisfied_count(const Mat& Z, const Vec& v, double theta) {
    Vec scores = (Z * v).cwiseAbs();
    int count = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) count += scores(i) >= theta;
    return count;
}

}  // namespace robustreg
