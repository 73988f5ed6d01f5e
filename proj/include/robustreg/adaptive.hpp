#pragma once

#include "robustreg/regression.hpp"

namespace robustreg {

// Geometric grid of candidate noise scales zeta_l = gamma^l * zeta0.
struct LepskiGrid {
    double zeta0 = 0;
    double gamma = 0;
    int M = 0;
    std::vector<double> levels;

    static LepskiGrid create(double zeta0, double gamma);
};

// Confidence radius at noise scale zeta for a fixed outer round budget.
double rate_R(double zeta, int T1, double c_star, const ConstantsProfile& consts,
              const SpectralInputs& spectral, const ProblemDims& dims);

struct LevelReport {
    int level = 0;
    double zeta = 0;
    double radius = 0;
    bool prefix_feasible = false;
    double err = 0;  // NaN when ground truth unknown
    FitResult fit;
};

struct AdaptiveResult {
    Vec b_hat;
    int chosen_level = 0;
    std::vector<LevelReport> levels;
    std::vector<std::string> flags;
};

// One fit per grid level (sharing a single pruning pass), then the largest
// prefix of levels whose confidence balls still share a point picks the
// returned estimate.
AdaptiveResult adaptive_fit(const LabeledDataset& data, const ProblemDims& dims,
                            const ConstantsProfile& consts, const SpectralInputs& spectral,
                            const LepskiGrid& grid, double L, const FitParams& base_params,
                            std::uint64_t seed);

}  // namespace robustreg
