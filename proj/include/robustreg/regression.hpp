#pragma once

#include <string>
#include <vector>

#include "robustreg/model.hpp"
#include "robustreg/mwu.hpp"
#include "robustreg/pruning.hpp"
#include "robustreg/rng.hpp"

namespace robustreg {

// Per-bucket averaged residual-weighted features at a candidate parameter.
struct BucketScores {
    Mat z;         // calK x p, row i = mean of (y - <x, b>) x over bucket i
    double U = 0;  // max row squared norm
};

struct FitIterRecord {
    int t = 0;
    double theta = 0;       // NaN when the margin floor was hit this round
    bool accepted = false;
    double step_norm = 0;
    double err = 0;         // ||b^t - b_star|| when ground truth known, else NaN
};

struct FitResult {
    Vec b_hat;
    Vec b_init;
    std::vector<FitIterRecord> iterates;
    int accepted_steps = 0;
    RateBundle rates;
    double c_star = 0;
    double delta = 0;
    std::vector<std::string> flags;
};

struct FitParams {
    int T1 = 50;
    int T2 = 50;
    int S1 = 96;
    int S2 = 96;
    double r1 = 0;  // margin rate; fill from RateBundle::r1 when driving by zeta
    long mw_max_rounds = 80;
    double margin_frac = 0.5;  // weight-update horizon keyed to sqrt(U); see MwParams
    // Gate comparator: true compares against the previous round's margin
    // (verbatim rule), false against the smallest accepted margin.
    bool gate_last_round = true;
};

BucketScores bucket_scores(const LabeledDataset& pruned, const BucketPartition& part, const Vec& b);

// Direction-scores bucket means, (1/B) sum <x, v> x per bucket; the mu shift
// is applied by the caller since it changes every inner round.
Mat direction_bucket_means(const Mat& X, const BucketPartition& part, const Vec& v_hat);

// Estimates Sigma * v_hat from the pruned features alone, by descending a
// margin certificate over shifted bucket means. Rounds whose margin floor is
// unreachable leave the iterate unchanged (already at statistical accuracy).
Vec robust_direction(const Mat& pruned_X, const BucketPartition& part, const Vec& v_hat, int T2, int S2,
                     const ConstantsProfile& consts, const RateBundle& rates, long mw_max_rounds, Rng rng,
                     std::vector<std::string>* flags = nullptr, double margin_frac = 0.5,
                     bool gate_last_round = true);

// Full pipeline: prune, then gated margin-certificate descent.
FitResult robust_regression(const LabeledDataset& data, const ProblemDims& dims,
                            const ConstantsProfile& consts, const SpectralInputs& spectral,
                            const RateBundle& rates, const FitParams& params, std::uint64_t seed);

// Same descent on an existing pruning output (shared across noise levels).
FitResult fit_pruned(const PruningOutput& pruning, const ProblemDims& dims,
                     const ConstantsProfile& consts, const SpectralInputs& spectral,
                     const RateBundle& rates, const FitParams& params, Rng rng);

// Ordinary least squares over all rows; baseline for experiments.
Vec ols_fit(const Mat& X, const Vec& y);

}  // namespace robustreg
