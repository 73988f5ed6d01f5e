#pragma once

#include <cstdint>
#include <optional>

#include "robustreg/model.hpp"
#include "robustreg/rng.hpp"

namespace robustreg {

enum class AttackKind {
    label_flip_large,   // y <- -magnitude * y on the chosen rows
    feature_blowup,     // x <- magnitude * x
    oracle_adaptive,    // y <- <x, b_dec>, rows picked by leverage toward b_dec
    cluster_at_point,   // rows replaced by one fixed (x0, y0 = magnitude) point
};

struct ContaminationStrategy {
    AttackKind kind = AttackKind::cluster_at_point;
    double magnitude = 1e6;
    std::optional<Vec> target;  // decoy parameter / cluster feature point

    static ContaminationStrategy parse(const std::string& name, double magnitude,
                                       std::optional<Vec> target = std::nullopt);
    std::string name() const;
};

// 2n iid rows of y = <x, b_star> + xi under the configured laws. Each row
// draws from its own derived stream, so generation order is immaterial.
LabeledDataset generate_clean(const ProblemDims& dims, const DistributionSpec& dist, const Vec& b_star,
                              std::uint64_t seed);

// Replaces exactly o rows. The adversary sees the clean sample and b_star.
// Placement is uniform without replacement, except oracle_adaptive, which
// corrupts the rows with the largest leverage along the decoy direction.
LabeledDataset contaminate(const LabeledDataset& clean, const ContaminationStrategy& strategy, int o,
                           std::uint64_t seed);

}  // namespace robustreg
