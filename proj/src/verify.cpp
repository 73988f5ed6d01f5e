#include "robustreg/verify.hpp"

#include <cmath>
#include <sstream>

#include "robustreg/datagen.hpp"
#include "robustreg/pruning.hpp"

namespace robustreg {

PlantedMargin make_planted_margin(int calK, int p, double theta0, int n_good, double k, double k_prime,
                                  std::uint64_t seed) {
    if (n_good > calK) throw ConfigError("planted: n_good exceeds calK");
    Rng rng = Rng(seed).split("planted");
    PlantedMargin inst;
    inst.theta0 = theta0;
    inst.n_good = n_good;
    inst.k = k;
    inst.k_prime = k_prime;
    inst.u = sample_unit_sphere(p, 1, rng.split("u")).row(0).transpose();
    inst.Z.resize(calK, p);

    Rng noise = rng.split("noise");
    for (int i = 0; i < n_good; ++i) {
        double sign = (i % 2 == 0) ? 1.0 : -1.0;
        Vec g(p);
        for (int j = 0; j < p; ++j) g(j) = noise.gaussian();
        Vec orth = g - g.dot(inst.u) * inst.u;
        double nrm = orth.norm();
        if (nrm > 0) orth /= nrm;
        // Alignments sit strictly above theta0 so the certified quantile
        // clears the target even after the floored round count.
        inst.Z.row(i) = (sign * 1.3 * theta0 * inst.u + 0.3 * theta0 * noise.u01() * orth).transpose();
    }
    for (int i = n_good; i < calK; ++i) {
        Vec dir = sample_unit_sphere(p, 1, noise.split(static_cast<std::uint64_t>(i))).row(0).transpose();
        inst.Z.row(i) = (0.1 * theta0 * dir).transpose();
    }
    return inst;
}

SuiteResult run_rounding_suite(int reruns, int samples, std::uint64_t seed) {
    const int calK = 60, p = 4;
    const double theta0 = 1.0, k = 5.0, k_prime = 15.0;
    PlantedMargin inst = make_planted_margin(calK, p, theta0, 55, k, k_prime, seed);

    MwParams mp;
    mp.k = k;
    mp.k_prime = k_prime;
    mp.radius = 1.0;
    mp.margin_lb = theta0;
    mp.samples = samples;
    MwTrace trace = mw_iterate(inst.Z, mp, Rng(seed).split("mw"));

    const double phi = 0.49 * 3.14159265358979323846;
    const double theta_floor = std::cos(phi) * theta0 / std::sqrt(6.0);
    const int count_floor = calK - static_cast<int>(std::floor(k_prime));

    int successes = 0;
    Rng rng = Rng(seed).split("reruns");
    for (int r = 0; r < reruns; ++r) {
        MarginCertificate cert = spherical_round(inst.Z, trace.M, samples, k, k_prime,
                                                 rng.split(static_cast<std::uint64_t>(r)), phi);
        if (cert.theta >= theta_floor && cert.satisfied_count >= count_floor) ++successes;
    }

    double p_diag = (2.0 * phi / 3.14159265358979323846) * (1.0 - 2.0 * k / calK) - (1.0 - k_prime / calK);
    double bound = 1.0 - std::exp(-p_diag * p_diag * samples / 7.72) - 0.03;

    SuiteResult res;
    res.name = "rounding success probability";
    res.observed = static_cast<double>(successes) / reruns;
    res.threshold = bound;
    res.passed = res.observed >= res.threshold;
    std::ostringstream os;
    os << successes << "/" << reruns << " certified (need fraction >= " << bound << ")";
    res.details = os.str();
    return res;
}

SuiteResult run_init_suite(int seeds, std::uint64_t seed) {
    const int n = 2000, p = 2, K = 20;
    ProblemDims dims = ProblemDims::create(n, p, K, 0.2, 0.0);
    DistributionSpec dist;
    dist.sigma_matrix = Mat::Identity(p, p);
    dist.noise_sigma = 1.0;
    SpectralInputs spectral = SpectralInputs::from_covariance(dist.sigma_matrix);

    Mat Xi = *multiplier_covariance(dist);
    double r = 2.0 * spectral.mu2_B2 * std::sqrt(12.0 * (static_cast<double>(K) / n) * Xi.trace());

    Rng root = Rng(seed).split("init-suite");
    int hits = 0;
    for (int s = 0; s < seeds; ++s) {
        Rng r_s = root.split(static_cast<std::uint64_t>(s));
        Vec b_star = sample_unit_sphere(p, 1, r_s.split("b")).row(0).transpose() * 2.0;
        LabeledDataset data = generate_clean(dims, dist, b_star, r_s.split("data").key());
        PruningOutput out = prune(data, dims);
        if ((out.b0 - b_star).norm() <= 3.0 * r) ++hits;
    }

    SuiteResult res;
    res.name = "initialization bound";
    res.observed = static_cast<double>(hits) / seeds;
    res.threshold = 0.95;
    res.passed = res.observed >= res.threshold;
    std::ostringstream os;
    os << hits << "/" << seeds << " inside 3r with r=" << r;
    res.details = os.str();
    return res;
}

namespace {

// Worst-to-best grids over the certificate windows the update rules assume.
SuiteResult inner_contraction() {
    ConstantsProfile c = ConstantsProfile::paper();
    const int p = 6;
    Rng rng = Rng(20240531).split("inner-contraction");

    SuiteResult res;
    res.name = "inner-step contraction";
    res.passed = true;
    res.threshold = 1.0 - c.bar_Delta0;
    res.observed = 0.0;

    for (double D : {1.0, 7.0}) {
        // Margin and alignment windows the far-regime certificate guarantees.
        for (double align : {1.0 / 156.25, 0.1, 1.0}) {
            for (double theta_rel : {1.737e-4, 0.5, 1.0126}) {
                Vec u = sample_unit_sphere(p, 1, rng.split("u")).row(0).transpose();
                Vec w0 = sample_unit_sphere(p, 1, rng.split("w")).row(0).transpose();
                Vec w = w0 - w0.dot(u) * u;
                if (w.norm() > 0) w /= w.norm();

                Vec target = Vec::Zero(p);
                Vec mu = target + D * u;
                Vec v = -align * u + std::sqrt(std::max(0.0, 1.0 - align * align)) * w;
                double theta = theta_rel * D;

                Vec mu_next = mu + c.bar_c_star * theta * v;
                double ratio = (mu_next - target).squaredNorm() / (D * D);
                res.observed = std::max(res.observed, ratio);
                if (ratio > res.threshold * (1.0 + 1e-9)) res.passed = false;
            }
        }
    }
    std::ostringstream os;
    os << "worst per-step gain " << (1.0 - res.observed) << " vs required " << (1.0 - res.threshold);
    res.details = os.str();
    return res;
}

SuiteResult outer_contraction() {
    ConstantsProfile c = ConstantsProfile::paper();
    const double a1 = c.C_alpha1, a2 = c.C_alpha4, a3 = c.C_alpha2;
    const int p = 5;
    Rng rng = Rng(77120131).split("outer-contraction");

    SuiteResult res;
    res.name = "outer-step contraction";
    res.passed = true;
    res.observed = 0.0;   // worst ratio / factor, must stay <= 1
    res.threshold = 1.0;

    for (double kappa : {1.0, 2.0}) {
        Mat sigma = Mat::Identity(p, p);
        sigma(0, 0) = kappa;  // mu2_B2 = 1, top direction e1
        double mu2 = 1.0;
        double delta_acc = 0.9 * c.a / 16.0;
        double r2 = 0.25 / (a2 * kappa);
        double c_star = c.a / (8.0 * (2.0 + a2) * kappa * kappa * (kappa * kappa + delta_acc * delta_acc));
        double factor =
            1.0 - c.a * c.a / (32.0 * (2.0 + a2) * kappa * kappa * (kappa * kappa + delta_acc * delta_acc));

        for (double D : {1.0, 5.0}) {
            double r1 = 1e-9 * D;
            for (double theta_rel : {c.a / 2.0, 0.1 * kappa, kappa}) {
                Vec b_star = sample_unit_sphere(p, 1, rng.split("b")).row(0).transpose();
                Vec b = b_star;
                b(0) += D;  // offset along the stretched direction
                Vec w = sigma * (b - b_star);
                Vec v_hat = -mu2 * w / w.norm();
                Vec pert = sample_unit_sphere(p, 1, rng.split("pert")).row(0).transpose();
                Vec mu_hat = sigma * v_hat + delta_acc * pert;

                double A_b = v_hat.dot(w);
                double theta_hat = theta_rel * D - a1 * mu2 * r1;
                // Certificate window checks the construction must satisfy.
                if (!(c.a / 2.0 * D <= theta_hat + a1 * mu2 * r1 + 1e-12)) continue;
                if (!(theta_hat <=
                      -A_b + a2 * mu2 * kappa * r2 * D + a3 * mu2 * r1 + 1e-12)) continue;
                if (!(-A_b >= std::max(c.D_star * D, (a1 + a3) * mu2 * r1))) continue;

                Vec b_next = b + c_star * (theta_hat + a1 * mu2 * r1) * mu_hat;
                double ratio = (b_next - b_star).squaredNorm() / (D * D);
                res.observed = std::max(res.observed, ratio / factor);
                if (ratio > factor * (1.0 + 1e-9)) res.passed = false;
            }
        }
    }
    std::ostringstream os;
    os << "worst slack 1 - ratio/factor = " << (1.0 - res.observed) << " (must stay positive)";
    res.details = os.str();
    return res;
}

}  // namespace

std::vector<SuiteResult> run_contraction_suite() {
    return {inner_contraction(), outer_contraction()};
}

}  // namespace robustreg
