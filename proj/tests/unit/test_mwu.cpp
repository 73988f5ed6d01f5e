#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robustreg/mwu.hpp"
#include "robustreg/verify.hpp"

using namespace robustreg;

namespace {
MwParams planted_params(const PlantedMargin& inst, int samples) {
    MwParams mp;
    mp.k = inst.k;
    mp.k_prime = inst.k_prime;
    mp.radius = 1.0;
    mp.margin_lb = inst.theta0;
    mp.samples = samples;
    return mp;
}
}  // namespace

TEST_CASE("all-equal points collapse to the rank-one solution") {
    int calK = 12, p = 3;
    Vec z(p);
    z << 2.0, -1.0, 0.5;
    Mat Z(calK, p);
    for (int i = 0; i < calK; ++i) Z.row(i) = z.transpose();

    MwParams mp;
    mp.k = 2.0;
    mp.k_prime = 3.0;
    mp.radius = 1.5;
    mp.margin_lb = 0.5 * z.norm() * mp.radius;
    mp.samples = 64;

    MwResult res = mw(Z, mp, Rng(5));
    double R2 = mp.radius * mp.radius;

    // M = R^2 z z^T / ||z||^2, so <<z z^T, M>> = R^2 ||z||^2 for every index.
    Mat expected = R2 * z * z.transpose() / z.squaredNorm();
    CHECK((res.trace.M - expected).norm() <= 1e-9 * R2);
    for (int i = 0; i < calK; ++i) {
        double q = Z.row(i) * res.trace.M * Z.row(i).transpose();
        CHECK(q == doctest::Approx(R2 * z.squaredNorm()).epsilon(1e-9));
    }

    // Rounded certificate aligns with +/- z and reports theta = |<z, v>|.
    Vec v = res.certificate.v;
    CHECK(std::abs(std::abs(v.normalized().dot(z.normalized())) - 1.0) <= 1e-9);
    CHECK(res.certificate.theta == doctest::Approx(std::abs(z.dot(v))).epsilon(1e-12));
    CHECK(res.certificate.satisfied_count == calK);
    // Sign selection must keep the aligned copy on all-tied data.
    CHECK(z.dot(v) >= 0.0);
}

TEST_CASE("weights stay inside the capped simplex every round") {
    PlantedMargin inst = make_planted_margin(60, 4, 1.0, 55, 5.0, 15.0, 101);
    MwParams mp = planted_params(inst, 8);
    mp.record_history = true;
    MwTrace trace = mw_iterate(inst.Z, mp, Rng(7));
    REQUIRE(trace.rounds >= 1);
    double cap = 1.0 / (2.0 * mp.k);
    for (long t = 0; t < trace.rounds; ++t) {
        Vec w = trace.weight_history.row(t).transpose();
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(w.maxCoeff() <= cap + 1e-12);
        CHECK(w.minCoeff() >= 0.0);
        // Restricted-simplex entropy bound against the uniform start.
        Vec uniform = Vec::Constant(w.size(), 1.0 / static_cast<double>(w.size()));
        double k_tilde = static_cast<double>(w.size()) - 2.0 * mp.k;
        CHECK(kl_divergence(w, uniform) <= 5.0 * k_tilde / static_cast<double>(w.size()) + 1e-12);
    }
}

TEST_CASE("planted instance: weight-update output certifies the quantile") {
    for (int trial = 0; trial < 6; ++trial) {
        PlantedMargin inst = make_planted_margin(60, 4, 0.5 + 0.3 * trial, 55, 5.0, 15.0, 300 + trial);
        MwParams mp = planted_params(inst, 8);
        MwTrace trace = mw_iterate(inst.Z, mp, Rng(trial));
        double target = inst.theta0 * inst.theta0 / 6.0;
        int hits = 0;
        for (int i = 0; i < inst.Z.rows(); ++i) {
            double q = inst.Z.row(i) * trace.M * inst.Z.row(i).transpose();
            hits += q > target;
        }
        CHECK(hits > 60 - 2 * 5);
    }
}

TEST_CASE("per-round regret ledger") {
    PlantedMargin inst = make_planted_margin(60, 4, 1.0, 55, 5.0, 15.0, 400);
    MwParams mp = planted_params(inst, 8);
    mp.record_history = true;
    MwTrace trace = mw_iterate(inst.Z, mp, Rng(21));

    const int calK = 60;
    Vec uniform = Vec::Constant(calK, 1.0 / calK);
    double cap = 1.0 / (2.0 * mp.k);

    // Feasible comparators by rejection from a symmetric Dirichlet.
    Rng rng(55);
    std::vector<Vec> comparators;
    while (comparators.size() < 25) {
        Vec u(calK);
        for (int i = 0; i < calK; ++i) u(i) = -std::log(1.0 - rng.u01());
        u /= u.sum();
        if (u.maxCoeff() <= cap) comparators.push_back(u);
    }

    Vec run_cum = Vec::Zero(trace.rounds);  // sum_l <w_l, tau_l>
    Mat loss_cum = Mat::Zero(trace.rounds, calK);
    for (long t = 0; t < trace.rounds; ++t) {
        double inner = trace.weight_history.row(t).dot(trace.loss_history.row(t));
        run_cum(t) = (t == 0 ? 0.0 : run_cum(t - 1)) + inner;
        loss_cum.row(t) = trace.loss_history.row(t);
        if (t > 0) loss_cum.row(t) += loss_cum.row(t - 1);
    }
    for (const Vec& w : comparators) {
        double klw = kl_divergence(w, uniform);
        for (long t = 1; t <= trace.rounds; ++t) {
            double lhs = run_cum(t - 1) / t;
            double rhs = 1.5 * loss_cum.row(t - 1).dot(w) / t + 2.0 * trace.U_loss * klw / t;
            CHECK(lhs <= rhs + 1e-9);
        }
    }
}

TEST_CASE("rounding of planted instances boosts the margin") {
    PlantedMargin inst = make_planted_margin(60, 4, 1.0, 55, 5.0, 15.0, 500);
    MwParams mp = planted_params(inst, 200);
    MwResult res = mw(inst.Z, mp, Rng(77));
    const MarginCertificate& cert = res.certificate;

    double floor = std::cos(0.49 * 3.14159265358979323846) * inst.theta0 / std::sqrt(6.0);
    CHECK(cert.theta >= floor);
    CHECK(cert.satisfied_count >= 60 - 15);
    CHECK(cert.p_diag == doctest::Approx(0.98 * (1.0 - 10.0 / 60.0) - 0.75).epsilon(1e-12));

    // Ceiling: no direction of norm <= R can beat max ||z|| * R.
    double ceiling = inst.Z.rowwise().norm().maxCoeff() * mp.radius;
    CHECK(cert.theta <= ceiling + 1e-12);

    // Count is recomputable from (Z, theta, v).
    CHECK(cert.satisfied_count == margin_satisfied_count(inst.Z, cert.v, cert.theta));
}

TEST_CASE("certified margin is bracketed by the grid oracle") {
    PlantedMargin inst = make_planted_margin(40, 2, 1.0, 36, 4.0, 10.0, 600);
    MwParams mp = planted_params(inst, 200);
    MwResult res = mw(inst.Z, mp, Rng(88));

    // Upper: certificate at slack k' cannot exceed the optimal k'-margin.
    auto [opt_kp, dir_kp] = oracles::brute_margin(inst.Z, 10, 1.0, 100000);
    CHECK(res.certificate.theta <= opt_kp + 1e-6);

    // Lower: rounding keeps a constant fraction of the optimal k-margin.
    auto [opt_k, dir_k] = oracles::brute_margin(inst.Z, 4, 1.0, 100000);
    CHECK(res.certificate.theta >= 0.0128 * opt_k);
}

TEST_CASE("degenerate and error paths") {
    SUBCASE("M = 0 rounds to the zero certificate") {
        Mat Z(5, 3);
        Z.setRandom();
        MarginCertificate cert = spherical_round(Z, Mat::Zero(3, 3), 16, 1.0, 1.0, Rng(3));
        CHECK(cert.theta == 0.0);
        CHECK(cert.v.norm() == 0.0);
    }

    SUBCASE("rank-one M scales sphere draws along its range") {
        Rng rng(5);
        Vec u = sample_unit_sphere(4, 1, rng).row(0).transpose();
        Mat M = u * u.transpose();
        Mat Z(6, 4);
        Z.setRandom();
        MarginCertificate cert = spherical_round(Z, M, 32, 1.0, 1.0, rng.split("r"));
        CHECK(std::abs(std::abs(cert.v.normalized().dot(u)) - 1.0) <= 1e-9);
    }

    SUBCASE("margin bound too large throws the typed error") {
        Mat Z(8, 2);
        Z.setRandom();
        MwParams mp;
        mp.k = 1.0;
        mp.k_prime = 2.0;
        mp.radius = 1.0;
        mp.margin_lb = 1e6;
        mp.samples = 4;
        CHECK_THROWS_AS(mw_iterate(Z, mp, Rng(1)), MwMarginError);
    }

    SUBCASE("k' swallowing every point is rejected") {
        Mat Z(4, 2);
        Z.setRandom();
        CHECK_THROWS_AS(spherical_round(Z, Mat::Identity(2, 2), 4, 1.0, 4.0, Rng(1)), NumericalError);
    }

    SUBCASE("stale norm bound is rejected") {
        Mat Z(6, 2);
        Z.setRandom();
        MwParams mp;
        mp.k = 1.0;
        mp.k_prime = 1.0;
        mp.radius = 1.0;
        mp.margin_lb = 0.1;
        mp.samples = 4;
        mp.U = 1e-9;
        CHECK_THROWS_AS(mw_iterate(Z, mp, Rng(1)), NumericalError);
    }
}

TEST_CASE("same seed, same certificate") {
    PlantedMargin inst = make_planted_margin(30, 3, 1.0, 26, 3.0, 7.0, 700);
    MwParams mp = planted_params(inst, 50);
    MwResult a = mw(inst.Z, mp, Rng(999));
    MwResult b = mw(inst.Z, mp, Rng(999));
    CHECK(a.certificate.theta == b.certificate.theta);
    CHECK((a.certificate.v - b.certificate.v).norm() == 0.0);
    CHECK(a.certificate.satisfied_count == b.certificate.satisfied_count);
    MwResult c = mw(inst.Z, mp, Rng(1000));
    CHECK(a.certificate.theta != c.certificate.theta);
}

TEST_CASE("trace matrix lives in the averaged rank-one hull") {
    PlantedMargin inst = make_planted_margin(40, 3, 1.0, 35, 4.0, 10.0, 800);
    MwParams mp = planted_params(inst, 8);
    mp.radius = 2.0;
    MwTrace trace = mw_iterate(inst.Z, mp, Rng(31));
    Eigen::SelfAdjointEigenSolver<Mat> es(trace.M);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= 4.0 + 1e-9);
    CHECK(trace.M.trace() == doctest::Approx(4.0).epsilon(1e-9));
    CHECK((trace.M - trace.M.transpose()).norm() <= 1e-12);
}
