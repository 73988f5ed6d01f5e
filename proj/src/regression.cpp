#include "robustreg/regression.hpp"

#include <limits>

namespace robustreg {

BucketScores bucket_scores(const LabeledDataset& pruned, const BucketPartition& part, const Vec& b) {
    if (pruned.rows() != part.total()) throw NumericalError("bucket_scores: partition mismatch");
    Vec resid = pruned.y - pruned.X * b;
    BucketScores out;
    out.z.resize(part.count, pruned.dim());
    for (int i = 0; i < part.count; ++i) {
        out.z.row(i) = resid.segment(part.begin(i), part.size).transpose() *
                       pruned.X.middleRows(part.begin(i), part.size) / static_cast<double>(part.size);
    }
    out.U = out.z.rowwise().squaredNorm().maxCoeff();
    return out;
}

Mat direction_bucket_means(const Mat& X, const BucketPartition& part, const Vec& v_hat) {
    if (X.rows() != part.total()) throw NumericalError("direction_bucket_means: partition mismatch");
    Vec proj = X * v_hat;
    Mat s(part.count, X.cols());
    for (int i = 0; i < part.count; ++i) {
        s.row(i) = proj.segment(part.begin(i), part.size).transpose() *
                   X.middleRows(part.begin(i), part.size) / static_cast<double>(part.size);
    }
    return s;
}

Vec robust_direction(const Mat& pruned_X, const BucketPartition& part, const Vec& v_hat, int T2, int S2,
                     const ConstantsProfile& consts, const RateBundle& rates, long mw_max_rounds, Rng rng,
                     std::vector<std::string>* flags, double margin_frac, bool gate_last_round) {
    if (T2 < 1) throw ConfigError("robust_direction: T2 must be >= 1");
    const double calK = static_cast<double>(part.count);

    Mat means = direction_bucket_means(pruned_X, part, v_hat);
    Vec mu = Vec::Zero(pruned_X.cols());
    mu(0) = 1.0;

    MwParams mp;
    mp.k = 4.0 * consts.bar_alpha1 * calK;
    mp.k_prime = consts.c_bar_alpha1 * calK;
    mp.radius = 1.0;
    mp.margin_lb = consts.C_bar_alpha1 * rates.bar_r1;
    mp.samples = S2;
    mp.max_rounds = mw_max_rounds;
    mp.margin_lb_frac = margin_frac;
    mp.phi = consts.phi;

    double theta_prev = std::numeric_limits<double>::infinity();
    bool floor_flagged = false;
    for (int tau = 0; tau < T2; ++tau) {
        Mat Z = means.rowwise() - mu.transpose();
        MarginCertificate cert;
        try {
            cert = mw(Z, mp, rng.split("inner", static_cast<std::uint64_t>(tau))).certificate;
        } catch (const MwMarginError&) {
            if (flags && !floor_flagged) {
                flags->push_back("inner margin floor reached");
                floor_flagged = true;
            }
            continue;
        }
        if (cert.theta < theta_prev) {
            mu += consts.bar_c_star * cert.theta * cert.v;
        }
        if (gate_last_round || cert.theta < theta_prev) theta_prev = cert.theta;
    }
    return mu;
}

FitResult robust_regression(const LabeledDataset& data, const ProblemDims& dims,
                            const ConstantsProfile& consts, const SpectralInputs& spectral,
                            const RateBundle& rates, const FitParams& params, std::uint64_t seed) {
    PruningOutput pruning = prune(data, dims);
    return fit_pruned(pruning, dims, consts, spectral, rates, params, Rng(seed).split("fit"));
}

FitResult fit_pruned(const PruningOutput& pruning, const ProblemDims& dims,
                     const ConstantsProfile& consts, const SpectralInputs& spectral,
                     const RateBundle& rates, const FitParams& params, Rng rng) {
    if (!(params.r1 > 0.0)) throw ConfigError("fit: r1 must be positive");
    if (params.T1 < 1) throw ConfigError("fit: T1 must be >= 1");

    FitResult res;
    res.rates = rates;
    res.b_init = pruning.b0;
    if (pruning.m_adjusted) res.flags.push_back("pruned size rounded down to a bucket multiple");

    BucketPartition part{dims.calK, dims.B};
    const double calK = static_cast<double>(dims.calK);
    const double mu2 = spectral.mu2_B2;

    res.delta = compute_delta(consts, spectral, rates.bar_r1, params.T2);
    res.c_star = compute_c_star(consts, spectral, res.delta);
    const double step_offset = consts.C_alpha1 * mu2 * params.r1;

    MwParams mp;
    mp.k = 4.0 * consts.alpha1 * calK;
    mp.k_prime = consts.c_alpha1 * calK;
    mp.radius = mu2;
    mp.margin_lb = consts.C_alpha1 * mu2 * params.r1;
    mp.samples = params.S1;
    mp.max_rounds = params.mw_max_rounds;
    mp.margin_lb_frac = params.margin_frac;
    mp.phi = consts.phi;

    const std::optional<Vec>& truth = pruning.pruned.b_star;
    Vec b = pruning.b0;
    double theta_prev = std::numeric_limits<double>::infinity();
    bool floor_flagged = false;
    res.iterates.reserve(static_cast<std::size_t>(params.T1));
    for (int t = 1; t <= params.T1; ++t) {
        FitIterRecord rec;
        rec.t = t;
        rec.err = truth ? (b - *truth).norm() : std::numeric_limits<double>::quiet_NaN();

        BucketScores scores = bucket_scores(pruning.pruned, part, b);
        MarginCertificate cert;
        bool have_cert = true;
        try {
            cert = mw(scores.z, mp, rng.split("outer", static_cast<std::uint64_t>(t))).certificate;
        } catch (const MwMarginError&) {
            have_cert = false;
            if (!floor_flagged) {
                res.flags.push_back("outer margin floor reached");
                floor_flagged = true;
            }
        }
        rec.theta = have_cert ? cert.theta : std::numeric_limits<double>::quiet_NaN();
        if (have_cert && cert.p_diag <= 0.0 && t == 1)
            res.flags.push_back("rounding success exponent is nonpositive for this slack pair");

        if (have_cert && cert.theta < theta_prev / spectral.kappa) {
            Vec mu_t = robust_direction(pruning.pruned.X, part, cert.v, params.T2, params.S2, consts,
                                        rates, params.mw_max_rounds,
                                        rng.split("direction", static_cast<std::uint64_t>(t)), &res.flags,
                                        params.margin_frac, params.gate_last_round);
            Vec step = res.c_star * (cert.theta + step_offset) * mu_t;
            b += step;
            rec.accepted = true;
            rec.step_norm = step.norm();
            ++res.accepted_steps;
        }
        if (have_cert && (params.gate_last_round || rec.accepted)) theta_prev = cert.theta;
        res.iterates.push_back(rec);
    }
    res.b_hat = b;
    return res;
}

Vec ols_fit(const Mat& X, const Vec& y) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(X);
    cod.setThreshold(1e-12);
    return cod.solve(y);
}

}  // namespace robustreg
