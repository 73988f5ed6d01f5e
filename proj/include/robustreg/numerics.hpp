#pragma once

#include <span>
#include <vector>

#include "robustreg/model.hpp"
#include "robustreg/rng.hpp"

namespace robustreg {

struct EigPair {
    double value = 0;
    Vec vector;
    double residual = 0;  // ||M v - value * v||_2
};

// Leading eigenpair of a symmetric PSD matrix by seeded block power
// iteration with Rayleigh-Ritz extraction. Converged when the residual drops
// below tol * trace(M); the block widens on slow progress. Throws
// EigConvergenceError past max_iter. An optional warm block carries the
// subspace between calls (the weight-update loop re-solves slowly drifting
// matrices); it is updated in place.
EigPair top_eigenvector(const Mat& M, double tol, int max_iter, Rng rng, Mat* warm_block = nullptr);
inline EigPair top_eigenvector(const Mat& M, Rng rng) { return top_eigenvector(M, 1e-9, 5000, rng); }

// Least-squares minimizer of ||y - X b|| over one bucket; minimum-norm
// solution when the bucket Gram matrix is rank deficient.
Vec bucket_least_squares(const Mat& X, const Vec& y);

// argmin KL(w || w_hat) over {w : sum w = 1, 0 <= w_i <= cap}, by sorting and
// water-filling the scale multiplier. Zero entries of w_hat stay zero.
Vec kl_project_capped_simplex(const Vec& w_hat, double cap);

double kl_divergence(const Vec& p, const Vec& q);

enum class RankOrder { ascending, descending };

// Exact j-th order statistic (1-indexed) in the requested order.
double order_statistic(std::span<const double> values, RankOrder order, int j);
double order_statistic(const Vec& values, RankOrder order, int j);

// count x p matrix of iid uniform unit-sphere rows.
Mat sample_unit_sphere(int p, int count, Rng rng);

struct BallsResult {
    bool intersects = false;
    Vec witness;
    double best_value = 0;  // min-max of (||x - c_j|| - R_j) found
};

// Decides whether a family of closed balls has a common point, to absolute
// tolerance tol on the min-max violation. Remotest-set projections with a
// stall detector; throws BallsConvergenceError if the budget runs out while
// the value is still inside the ambiguous band. An optional warm start speeds
// up incremental prefix scans.
BallsResult balls_intersect(const std::vector<Vec>& centers, const std::vector<double>& radii,
                            double tol, int max_iter = 50000, const Vec* warm_start = nullptr);

}  // namespace robustreg
