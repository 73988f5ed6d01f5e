#pragma once

#include <utility>
#include <vector>

#include "robustreg/model.hpp"

namespace robustreg {

struct PruningOutput {
    Vec b0;                         // median of the bucket least-squares fits
    double R_star_m = 0;            // pruning threshold
    LabeledDataset pruned;          // m surviving second-batch rows, original order
    std::vector<int> kept_indices;  // 0-based indices into the second batch
    bool m_adjusted = false;        // m rounded down to a bucket multiple
};

// Member of W whose ball covering strictly more than half of W is smallest.
// Distances include the point itself; ties go to the lowest index.
std::pair<int, Vec> hsu_sabato_median(const std::vector<Vec>& W);

// First batch -> per-bucket least squares -> median gives the initialization;
// second batch keeps the m rows with the smallest residual/feature-norm
// statistic, ties broken toward lower index.
PruningOutput prune(const LabeledDataset& data, const ProblemDims& dims);

}  // namespace robustreg
