#pragma once

#include <string>
#include <vector>

#include "robustreg/mwu.hpp"

namespace robustreg {

// Planted benchmark instance: n_good points with alignment at least theta0
// along a hidden unit direction, the rest near the origin.
struct PlantedMargin {
    Mat Z;       // calK x p
    Vec u;       // hidden direction
    double theta0 = 0;
    int n_good = 0;
    double k = 0;        // two-sided slack used by the tests
    double k_prime = 0;  // one-sided slack
};

PlantedMargin make_planted_margin(int calK, int p, double theta0, int n_good, double k, double k_prime,
                                  std::uint64_t seed);

struct SuiteResult {
    std::string name;
    bool passed = false;
    double observed = 0;
    double threshold = 0;
    std::string details;
};

// Fraction of rounding reruns that certify the planted margin at the boosted
// confidence level.
SuiteResult run_rounding_suite(int reruns, int samples, std::uint64_t seed);

// Fraction of seeds whose initialization lands within three times the
// median-of-least-squares radius on clean gaussian data.
SuiteResult run_init_suite(int seeds, std::uint64_t seed);

// Deterministic per-step contraction of the inner and outer update rules on
// constructed instances satisfying the update preconditions.
std::vector<SuiteResult> run_contraction_suite();

}  // namespace robustreg
