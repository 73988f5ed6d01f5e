#include "robustreg/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robustreg {

LepskiGrid LepskiGrid::create(double zeta0, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("lepski: gamma must lie in (0, 1)");
    if (!(zeta0 > 1.0)) throw ConfigError("lepski: zeta0 must exceed 1");
    LepskiGrid g;
    g.zeta0 = zeta0;
    g.gamma = gamma;
    g.M = static_cast<int>(std::ceil(std::log(zeta0) / std::log(1.0 / gamma)));
    if (g.M < 1) g.M = 1;
    g.levels.resize(static_cast<std::size_t>(g.M));
    for (int l = 1; l <= g.M; ++l)
        g.levels[static_cast<std::size_t>(l - 1)] = std::pow(gamma, l) * zeta0;
    return g;
}

double rate_R(double zeta, int T1, double c_star, const ConstantsProfile& consts,
              const SpectralInputs& spectral, const ProblemDims& dims) {
    double kappa = spectral.kappa;
    double coeff = 2.0 * consts.C_alpha2 / (consts.a * kappa) +
                   (2.0 * consts.E_star / consts.a) * (1.0 + consts.a / (4.0 * kappa)) +
                   2.0 * consts.C_alpha1;
    double first = coeff * spectral.mu2_B2 * rate_r1(zeta, dims);
    double second = 3.0 * rate_r_init(zeta, dims, spectral) *
                    std::exp(-consts.a * static_cast<double>(T1) / (8.0 * c_star));
    return std::max(first, second);
}

AdaptiveResult adaptive_fit(const LabeledDataset& data, const ProblemDims& dims,
                            const ConstantsProfile& consts, const SpectralInputs& spectral,
                            const LepskiGrid& grid, double L, const FitParams& base_params,
                            std::uint64_t seed) {
    AdaptiveResult out;
    Rng root = Rng(seed).split("adaptive");

    // Pruning is data-only, so every level shares one pass.
    PruningOutput pruning = prune(data, dims);
    RateBundle rates = compute_rates(dims, consts, spectral, grid.levels.front(), L);
    double delta = compute_delta(consts, spectral, rates.bar_r1, base_params.T2);
    double c_star = compute_c_star(consts, spectral, delta);

    out.levels.reserve(static_cast<std::size_t>(grid.M));
    for (int l = 1; l <= grid.M; ++l) {
        double zeta = grid.levels[static_cast<std::size_t>(l - 1)];
        FitParams fp = base_params;
        fp.r1 = rate_r1(zeta, dims);
        RateBundle level_rates = rates;
        level_rates.r1 = fp.r1;
        level_rates.r_init = rate_r_init(zeta, dims, spectral);

        LevelReport rep;
        rep.level = l;
        rep.zeta = zeta;
        rep.radius = rate_R(zeta, base_params.T1, c_star, consts, spectral, dims);
        rep.fit = fit_pruned(pruning, dims, consts, spectral, level_rates, fp,
                             root.split("level", static_cast<std::uint64_t>(l)));
        rep.err = data.b_star ? (rep.fit.b_hat - *data.b_star).norm()
                              : std::numeric_limits<double>::quiet_NaN();
        out.levels.push_back(std::move(rep));
    }

    // Largest prefix whose confidence balls share a point. Adding a ball only
    // shrinks the intersection, so the scan stops at the first failure.
    std::vector<Vec> centers;
    std::vector<double> radii;
    int chosen = 1;
    out.levels[0].prefix_feasible = true;
    centers.push_back(out.levels[0].fit.b_hat);
    radii.push_back(out.levels[0].radius);
    Vec witness = centers.front();
    double tol_scale = 1e-9;
    for (int l = 2; l <= grid.M; ++l) {
        centers.push_back(out.levels[static_cast<std::size_t>(l - 1)].fit.b_hat);
        radii.push_back(out.levels[static_cast<std::size_t>(l - 1)].radius);
        double tol = tol_scale * std::max(1.0, *std::max_element(radii.begin(), radii.end()));
        BallsResult feas;
        try {
            feas = balls_intersect(centers, radii, tol, 50000, &witness);
        } catch (const BallsConvergenceError&) {
            out.flags.push_back("ball intersection did not converge; keeping coarsest level");
            chosen = 1;
            break;
        }
        out.levels[static_cast<std::size_t>(l - 1)].prefix_feasible = feas.intersects;
        if (!feas.intersects) break;
        witness = feas.witness;
        chosen = l;
    }

    out.chosen_level = chosen;
    out.b_hat = out.levels[static_cast<std::size_t>(chosen - 1)].fit.b_hat;
    return out;
}

}  // namespace robustreg
