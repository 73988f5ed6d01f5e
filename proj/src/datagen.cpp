#include "robustreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace robustreg {

ContaminationStrategy ContaminationStrategy::parse(const std::string& name, double magnitude,
                                                   std::optional<Vec> target) {
    ContaminationStrategy s;
    s.magnitude = magnitude;
    s.target = std::move(target);
    if (name == "label_flip_large")
        s.kind = AttackKind::label_flip_large;
    else if (name == "feature_blowup")
        s.kind = AttackKind::feature_blowup;
    else if (name == "oracle_adaptive")
        s.kind = AttackKind::oracle_adaptive;
    else if (name == "cluster_at_point")
        s.kind = AttackKind::cluster_at_point;
    else
        throw ConfigError("unknown contamination strategy: " + name);
    return s;
}

std::string ContaminationStrategy::name() const {
    switch (kind) {
        case AttackKind::label_flip_large: return "label_flip_large";
        case AttackKind::feature_blowup: return "feature_blowup";
        case AttackKind::oracle_adaptive: return "oracle_adaptive";
        case AttackKind::cluster_at_point: return "cluster_at_point";
    }
    return "?";
}

namespace {

Mat covariance_sqrt(const Mat& sigma) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
    Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Vec draw_feature(const DistributionSpec& dist, const Mat& root, Rng& rng) {
    const Eigen::Index p = root.rows();
    Vec z(p);
    switch (dist.feature_law) {
        case FeatureLaw::gaussian:
            for (Eigen::Index i = 0; i < p; ++i) z(i) = rng.gaussian();
            return root * z;
        case FeatureLaw::student_t: {
            for (Eigen::Index i = 0; i < p; ++i) z(i) = rng.gaussian();
            double w = rng.chi_square(dist.feature_nu);
            // sqrt((nu-2)/W) scaling makes the covariance exactly sigma_matrix.
            return root * z * std::sqrt((dist.feature_nu - 2.0) / w);
        }
        case FeatureLaw::scaled_rademacher_mixture: {
            for (Eigen::Index i = 0; i < p; ++i) z(i) = rng.u01() < 0.5 ? -1.0 : 1.0;
            double q = dist.rademacher_q, l = dist.rademacher_lambda;
            double base = 1.0 / std::sqrt(1.0 - q + q * l * l);
            double s = (rng.u01() < q) ? base * l : base;
            return root * z * s;
        }
    }
    return z;
}

double draw_noise(const DistributionSpec& dist, const Vec& x, double trace_sigma, Rng& rng) {
    switch (dist.noise_law) {
        case NoiseLaw::gaussian:
            return dist.noise_sigma * rng.gaussian();
        case NoiseLaw::student_t: {
            double z = rng.gaussian();
            double w = rng.chi_square(dist.noise_nu);
            return dist.noise_sigma * z * std::sqrt((dist.noise_nu - 2.0) / w);
        }
        case NoiseLaw::feature_dependent:
            // Symmetric multiplier keeps E[xi x] = 0 despite the dependence.
            return dist.noise_sigma * (x.norm() / std::sqrt(trace_sigma)) * rng.gaussian();
    }
    return 0.0;
}

std::vector<int> sample_without_replacement(int pool, int count, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(pool));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < count; ++i) {
        int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(pool - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

LabeledDataset generate_clean(const ProblemDims& dims, const DistributionSpec& dist, const Vec& b_star,
                              std::uint64_t seed) {
    dist.validate();
    if (b_star.size() != dist.sigma_matrix.rows() || b_star.size() != dims.p)
        throw ConfigError("generate_clean: b_star dimension mismatch");

    const int rows = 2 * dims.n;
    Mat root = covariance_sqrt(dist.sigma_matrix);
    double trace_sigma = dist.sigma_matrix.trace();

    LabeledDataset data;
    data.X.resize(rows, dims.p);
    data.y.resize(rows);
    Rng base = Rng(seed).split("rows");
    for (int r = 0; r < rows; ++r) {
        Rng row_rng = base.split(static_cast<std::uint64_t>(r));
        Vec x = draw_feature(dist, root, row_rng);
        double xi = draw_noise(dist, x, trace_sigma, row_rng);
        data.X.row(r) = x.transpose();
        data.y(r) = x.dot(b_star) + xi;
    }
    data.b_star = b_star;
    data.corrupted = std::vector<std::uint8_t>(static_cast<std::size_t>(rows), 0);
    return data;
}

LabeledDataset contaminate(const LabeledDataset& clean, const ContaminationStrategy& strategy, int o,
                           std::uint64_t seed) {
    clean.validate();
    const int rows = static_cast<int>(clean.rows());
    const Eigen::Index p = clean.dim();
    if (o < 0 || o > rows) throw ConfigError("contaminate: o out of range");

    LabeledDataset out = clean;
    out.corrupted = std::vector<std::uint8_t>(static_cast<std::size_t>(rows), 0);
    if (o == 0) return out;

    Rng rng = Rng(seed).split("attack");

    std::vector<int> rows_hit;
    if (strategy.kind == AttackKind::oracle_adaptive) {
        if (!clean.b_star) throw ConfigError("oracle_adaptive needs the clean ground truth");
        Vec dir = strategy.target ? Vec(*strategy.target - *clean.b_star) : Vec(Vec::Ones(p));
        if (dir.norm() == 0.0) dir = Vec::Ones(p);
        std::vector<int> idx(static_cast<std::size_t>(rows));
        std::iota(idx.begin(), idx.end(), 0);
        Vec lev = clean.X * dir;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return lev(a) > lev(b); });
        rows_hit.assign(idx.begin(), idx.begin() + o);
        std::sort(rows_hit.begin(), rows_hit.end());
    } else {
        rows_hit = sample_without_replacement(rows, o, rng);
    }

    switch (strategy.kind) {
        case AttackKind::label_flip_large:
            for (int r : rows_hit) out.y(r) = -strategy.magnitude * clean.y(r);
            break;
        case AttackKind::feature_blowup:
            for (int r : rows_hit) out.X.row(r) *= strategy.magnitude;
            break;
        case AttackKind::oracle_adaptive: {
            Vec b_dec = strategy.target ? *strategy.target : Vec(*clean.b_star + Vec::Ones(p));
            for (int r : rows_hit) out.y(r) = clean.X.row(r).dot(b_dec);
            break;
        }
        case AttackKind::cluster_at_point: {
            Vec x0 = strategy.target ? *strategy.target : Vec(2.0 * Vec::Ones(p) / std::sqrt(double(p)));
            for (int r : rows_hit) {
                out.X.row(r) = x0.transpose();
                out.y(r) = strategy.magnitude;
            }
            break;
        }
    }
    for (int r : rows_hit) (*out.corrupted)[static_cast<std::size_t>(r)] = 1;
    return out;
}

}  // namespace robustreg
