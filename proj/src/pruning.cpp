#include "robustreg/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "robustreg/numerics.hpp"

namespace robustreg {

std::pair<int, Vec> hsu_sabato_median(const std::vector<Vec>& W) {
    const int K = static_cast<int>(W.size());
    if (K == 0) throw NumericalError("hsu_sabato_median: empty input");
    const int need = K / 2 + 1;  // strictly more than half, self counts at distance 0

    int best = 0;
    double best_radius = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < K; ++j) dist[static_cast<std::size_t>(j)] = (W[k] - W[j]).norm();
        auto nth = dist.begin() + (need - 1);
        std::nth_element(dist.begin(), nth, dist.end());
        if (*nth < best_radius) {
            best_radius = *nth;
            best = k;
        }
    }
    return {best, W[static_cast<std::size_t>(best)]};
}

PruningOutput prune(const LabeledDataset& data, const ProblemDims& dims) {
    data.validate();
    if (data.rows() != 2 * dims.n) throw ConfigError("prune: dataset must have 2n rows");
    if (data.dim() != dims.p) throw ConfigError("prune: dimension mismatch");

    const int n = dims.n, B = dims.B, K = dims.K;

    std::vector<Vec> bucket_fits;
    bucket_fits.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        bucket_fits.push_back(bucket_least_squares(data.X.middleRows(k * B, B),
                                                   data.y.segment(k * B, B)));
    }
    auto [median_idx, b0] = hsu_sabato_median(bucket_fits);
    (void)median_idx;

    // Joint residual/feature-norm statistic over the second batch.
    std::vector<std::pair<double, int>> scored(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int row = n + i;
        double resid = std::abs(data.y(row) - data.X.row(row).dot(b0));
        scored[static_cast<std::size_t>(i)] = {std::max(resid, data.X.row(row).norm()), i};
    }
    std::sort(scored.begin(), scored.end());  // pair order breaks ties by index

    PruningOutput out;
    out.b0 = b0;
    out.m_adjusted = dims.m_adjusted;
    out.kept_indices.resize(static_cast<std::size_t>(dims.m));
    double r_star = 0.0;
    for (int i = 0; i < dims.m; ++i) {
        out.kept_indices[static_cast<std::size_t>(i)] = scored[static_cast<std::size_t>(i)].second;
        r_star = std::max(r_star, scored[static_cast<std::size_t>(i)].first);
    }
    std::sort(out.kept_indices.begin(), out.kept_indices.end());
    out.R_star_m = r_star;

    std::vector<int> absolute(out.kept_indices.size());
    for (std::size_t i = 0; i < out.kept_indices.size(); ++i) absolute[i] = n + out.kept_indices[i];
    out.pruned = data.subset(absolute);
    return out;
}

}  // namespace robustreg
