#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustreg/errors.hpp"

namespace robustreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Sample sizes and bucket layout. The full sample has 2n rows: the first n
// are used for the initialization, the second n are pruned down to m rows
// split into calK buckets of size B each.
struct ProblemDims {
    int n = 0;        // half sample size
    int p = 0;        // ambient dimension
    int K = 0;        // bucket count on the first batch
    int B = 0;        // bucket size, n / K
    double eta = 0;   // pruning fraction in (0, 1/2]
    int m = 0;        // pruned size, largest multiple of B <= n - round(eta*n)
    int calK = 0;     // pruned bucket count, m / B
    double eps = 0;   // contamination fraction
    int o = 0;        // outlier count, round(eps * n)
    bool m_adjusted = false;  // m was rounded down to a multiple of B

    static ProblemDims create(int n, int p, int K, double eta, double eps);
};

// Paired labels/features, with optional simulation ground truth.
struct LabeledDataset {
    Vec y;  // length rows
    Mat X;  // rows x p
    std::optional<std::vector<std::uint8_t>> corrupted;  // 1 where replaced
    std::optional<Vec> b_star;

    Eigen::Index rows() const { return y.size(); }
    Eigen::Index dim() const { return X.cols(); }
    int corrupted_count() const;
    void validate() const;
    LabeledDataset subset(const std::vector<int>& indices) const;
};

// Contiguous equal-size index partition of [0, count*size).
struct BucketPartition {
    int count = 0;  // number of buckets
    int size = 0;   // rows per bucket

    int total() const { return count * size; }
    int begin(int bucket) const { return bucket * size; }
};

enum class FeatureLaw { gaussian, student_t, scaled_rademacher_mixture };
enum class NoiseLaw { gaussian, student_t, feature_dependent };

// Generator description. sigma_matrix is the exact feature covariance for
// every law (heavy-tailed laws are rescaled so this holds).
struct DistributionSpec {
    FeatureLaw feature_law = FeatureLaw::gaussian;
    double feature_nu = 0;  // student-t dof, must be > 4
    NoiseLaw noise_law = NoiseLaw::gaussian;
    double noise_nu = 0;
    double noise_sigma = 1.0;
    std::string noise_scale_tag = "norm";  // feature_dependent scale function
    Mat sigma_matrix;                      // p x p SPD
    double rademacher_lambda = 3.0;        // heavy-scale factor of the mixture
    double rademacher_q = 0.1;             // mixture weight of the heavy scale
    double hyper_L = 0;                    // recorded L4-L2 constant, not enforced

    void validate() const;
};

// Every named constant of the method, bundled as a profile. "paper" carries
// the original worst-case values; "practical" carries desk-scale values
// (see ConstantsProfile::practical for the rationale).
struct ConstantsProfile {
    std::string name;

    double alpha1, alpha2, alpha3, alpha4;
    double c_alpha1;
    double rho;
    double a;
    double phi;
    double C_alpha1, C_alpha2, C_alpha3, C_alpha4;

    double bar_rho;
    double bar_alpha1, bar_alpha2, bar_alpha4;
    double c_bar_alpha1;
    double bar_a;
    double C_bar_alpha1, C_bar_alpha2;
    double C_bar_alpha4;  // no separately fixed value in the worst-case table; defaults to C_alpha4

    double bar_c_star;   // inner stepsize
    double bar_Delta0;   // inner per-step contraction
    double C_star, D_star, E_star;

    double C_trunc;           // absolute constant of the quadratic-process rate
    double delta_inner_mult;  // multiplier of bar_r1 in the inner accuracy Delta
    double c_star_override;   // NaN: use the closed-form stepsize

    static ConstantsProfile paper();
    static ConstantsProfile practical();
    static ConstantsProfile by_name(const std::string& name);

    // 28/(4C) + 4/C^2 + sqrt(2)/C^(2/3) <= alpha.
    static bool quantile_constant_ok(double alpha, double C);
    // Pairs violating the inequality above, as "alpha=..,C=.." strings.
    std::vector<std::string> quantile_constant_violations() const;
};

// Known spectral bounds of the feature covariance.
struct SpectralInputs {
    double mu2_B2 = 1.0;   // inverse of the smallest eigenvalue
    double sigma_op = 1.0;  // operator norm
    double kappa = 1.0;     // mu2_B2 * sigma_op

    static SpectralInputs create(double mu2_B2, double sigma_op);
    static SpectralInputs from_covariance(const Mat& sigma);
};

// Statistical rates for one configuration, all in residual-scale units.
struct RateBundle {
    double r_nK = 0;
    double r1 = 0;      // margin rate at the configured noise scale
    double r2 = 0;
    double bar_r1 = 0;  // sigma_op * bar_r2
    double bar_r2 = 0;
    double r_init = 0;  // initialization radius rate
};

struct ValidationReport {
    bool structurally_valid = true;
    // conditions[i] = condition (i+1) of the sample-size block holds
    std::array<bool, 6> conditions{};
    std::vector<std::string> warnings;
    bool all_conditions_hold() const;
};

// r1(zeta) and r(zeta): noise-scale-parameterized rates.
double rate_r1(double zeta, const ProblemDims& dims);
double rate_r_init(double zeta, const ProblemDims& dims, const SpectralInputs& spectral);

RateBundle compute_rates(const ProblemDims& dims, const ConstantsProfile& consts,
                         const SpectralInputs& spectral, double zeta, double L);

// Inner-loop accuracy bound Delta and the outer stepsize c_star.
double compute_delta(const ConstantsProfile& consts, const SpectralInputs& spectral,
                     double bar_r1, int T2);
double compute_c_star(const ConstantsProfile& consts, const SpectralInputs& spectral, double delta);

// Checks the theory preconditions. Violations are warnings, not errors:
// desk-scale configurations violate the worst-case sample sizes on purpose.
// Structural problems (divisibility, eta range) throw ConfigError.
ValidationReport validate_config(const ProblemDims& dims, const ConstantsProfile& consts,
                                 const SpectralInputs& spectral, double L, double zeta, int T2);

// Exact multiplier covariance E[xi^2 x x^T] where known in closed form
// (gaussian features with independent or norm-scaled noise).
std::optional<Mat> multiplier_covariance(const DistributionSpec& dist);

// L4-L2 constant of the configured feature law.
double feature_hypercontractivity(const DistributionSpec& dist);

}  // namespace robustreg
