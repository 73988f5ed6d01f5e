#pragma once

#include "robustreg/model.hpp"
#include "robustreg/numerics.hpp"
#include "robustreg/rng.hpp"

namespace robustreg {

// Inputs of one weight-update run over bucketed points Z (rows z_i^T).
struct MwParams {
    double k = 0;          // two-sided slack, 0 < 2k < rows
    double k_prime = 0;    // one-sided slack used by the rounding step
    double radius = 1.0;   // direction radius R
    double margin_lb = 0;  // known lower bound on the optimal margin
    int samples = 1;       // rounding sample size S
    double U = 0;          // norm-squared bound; 0 means compute from Z
    long max_rounds = 100000;
    // When positive, the margin bound is floored at this fraction of the
    // attainable ceiling sqrt(U) R, so the prescribed round count stays near
    // the budget instead of diluting the average with truncated runs.
    double margin_lb_frac = 0;
    double phi = 0.49 * 3.14159265358979323846;
    bool record_history = false;
    double eig_tol = 1e-9;
    int eig_max_iter = 5000;
};

struct MwTrace {
    long rounds = 0;
    bool truncated = false;   // hit max_rounds before the prescribed count
    Mat M;                    // (1/T) sum of v v^T, PSD with trace R^2
    Vec cumulative_loss;      // per-index sum of squared alignments
    double U_norm = 0;        // max_i ||z_i||^2 actually used
    double U_loss = 0;        // loss ceiling U_norm * R^2
    Mat weight_history;       // T x rows, only when record_history
    Mat loss_history;         // T x rows, only when record_history
};

struct MarginCertificate {
    double theta = 0;         // certified margin
    Vec v;                    // direction, ||v|| <= R
    int satisfied_count = 0;  // #{i : |<z_i, v>| >= theta}
    bool sign_flipped = false;
    double p_diag = 0;        // rounding success exponent; warn when <= 0
    long rounds = 0;
    bool truncated = false;
};

struct MwResult {
    MwTrace trace;
    MarginCertificate certificate;
};

// Multiplicative weight updates against the spectral loss of Z. Runs
// floor(40 U R^2 (1 - 2k/rows) / margin_lb^2) rounds, capped at max_rounds.
// Throws MwMarginError when that count floors to zero (the margin bound is
// larger than any achievable alignment).
MwTrace mw_iterate(const Mat& Z, const MwParams& params, Rng rng);

// Spherical rounding of M with order-statistic margin and sign selection.
MarginCertificate spherical_round(const Mat& Z, const Mat& M, int samples, double k, double k_prime,
                                  Rng rng, double phi = 0.49 * 3.14159265358979323846);

// mw_iterate followed by spherical_round.
MwResult mw(const Mat& Z, const MwParams& params, Rng rng);

// #{i : |<z_i, v>| >= theta} (ties inclusive).
int margin_satisfied_count(const Mat& Z, const Vec& v, double theta);

}  // namespace robustreg
