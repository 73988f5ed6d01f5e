#include "robustreg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace robustreg {

// Block subspace (simultaneous power) iteration with Rayleigh-Ritz
// extraction. The weight updates steer their Gram matrices toward equalized
// top eigenvalues, where single-vector iteration stalls; the block grows on
// stall so a nearly-degenerate top eigenspace still yields a residual-certified
// pair. Any vector in the top space is acceptable downstream.
EigPair top_eigenvector(const Mat& M, double tol, int max_iter, Rng rng, Mat* warm_block) {
    const Eigen::Index p = M.rows();
    if (p == 0 || M.cols() != p) throw NumericalError("top_eigenvector: matrix must be square");

    double trace = M.trace();
    double scale = std::max(std::abs(trace), 1e-300);

    auto random_block = [&](Rng& r, Eigen::Index cols) {
        Mat V(p, cols);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) V(i, j) = r.gaussian();
        return Mat(Eigen::HouseholderQR<Mat>(V).householderQ() * Mat::Identity(p, cols));
    };

    Rng r = rng.split("block");
    Eigen::Index block = std::min<Eigen::Index>(2, p);
    Mat V;
    if (warm_block && warm_block->rows() == p && warm_block->cols() >= 1 &&
        warm_block->cols() <= p) {
        block = warm_block->cols();
        V = Mat(Eigen::HouseholderQR<Mat>(*warm_block).householderQ() * Mat::Identity(p, block));
    } else {
        V = random_block(r, block);
    }

    EigPair best;
    best.value = 0;
    best.vector = V.col(0);
    best.residual = std::numeric_limits<double>::infinity();

    int block_iters = 0;
    for (int it = 0; it < max_iter; ++it) {
        Mat W = M * V;
        Mat B = V.transpose() * W;
        Eigen::SelfAdjointEigenSolver<Mat> small(B);
        Eigen::Index top = B.rows() - 1;
        Vec v = V * small.eigenvectors().col(top);
        double lambda = small.eigenvalues()(top);
        double res = (M * v - lambda * v).norm();
        if (res < best.residual) {
            best.value = lambda;
            best.vector = v;
            best.residual = res;
        }
        if (res <= tol * scale) {
            if (warm_block) *warm_block = V;
            return best;
        }

        // A wider block converges at the rate of a deeper spectral gap; at
        // block == p the Ritz step is exact, so escalation always terminates.
        if (++block_iters >= 25 && block < p) {
            block_iters = 0;
            block = std::min<Eigen::Index>(block * 2, p);
            Mat fresh = random_block(r, block);
            fresh.col(0) = best.vector;
            V = Mat(Eigen::HouseholderQR<Mat>(fresh).householderQ() * Mat::Identity(p, block));
            continue;
        }
        V = Mat(Eigen::HouseholderQR<Mat>(W).householderQ() * Mat::Identity(p, block));
    }

    std::ostringstream os;
    os << "top_eigenvector: no convergence after " << max_iter << " iterations (residual " << best.residual
       << ", bound " << tol * scale << ")";
    std::vector<double> last(best.vector.data(), best.vector.data() + best.vector.size());
    throw EigConvergenceError(os.str(), best.value, std::move(last), best.residual);
}

Vec bucket_least_squares(const Mat& X, const Vec& y) {
    if (X.rows() != y.size()) throw NumericalError("bucket_least_squares: row mismatch");
    if (X.rows() == 0) throw NumericalError("bucket_least_squares: empty bucket");
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(X);
    cod.setThreshold(1e-10);
    return cod.solve(y);
}

Vec kl_project_capped_simplex(const Vec& w_hat, double cap) {
    const Eigen::Index n = w_hat.size();
    if (n == 0) throw NumericalError("kl_project: empty input");
    if (!(cap > 0.0)) throw NumericalError("kl_project: cap must be positive");
    if (cap * static_cast<double>(n) < 1.0 - 1e-12) throw NumericalError("kl_project: infeasible cap");

    double total = 0.0;
    Eigen::Index support = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = w_hat(i);
        if (v < 0.0) throw NumericalError("kl_project: negative weight");
        if (v > 0.0) ++support;
        total += v;
    }
    if (total <= 0.0) throw NumericalError("kl_project: all-zero weights");
    if (cap * static_cast<double>(support) < 1.0 - 1e-12)
        throw NumericalError("kl_project: support too small for cap");

    // Solution has the form w_i = min(cap, lambda * w_hat_i). Sort descending
    // and grow the capped prefix until the proportional tail fits under cap.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return w_hat(a) > w_hat(b); });

    double tail_sum = total;
    Eigen::Index capped = 0;
    double lambda = 1.0 / total;
    for (;;) {
        double mass_left = 1.0 - cap * static_cast<double>(capped);
        if (tail_sum > 0.0) {
            lambda = mass_left / tail_sum;
            if (capped == n || lambda * w_hat(idx[static_cast<std::size_t>(capped)]) <= cap) break;
        } else if (mass_left <= 1e-12) {
            break;
        }
        if (capped == n) throw NumericalError("kl_project: no feasible multiplier");
        tail_sum -= w_hat(idx[static_cast<std::size_t>(capped)]);
        ++capped;
    }

    Vec w(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Index i = idx[static_cast<std::size_t>(r)];
        w(i) = (r < capped) ? cap : lambda * w_hat(i);
    }
    return w;
}

double kl_divergence(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw NumericalError("kl_divergence: size mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) == 0.0) continue;
        if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
        s += p(i) * std::log(p(i) / q(i));
    }
    return s;
}

double order_statistic(std::span<const double> values, RankOrder order, int j) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw NumericalError("order_statistic: empty input");
    if (j < 1 || j > n) throw NumericalError("order_statistic: rank out of range");
    std::vector<double> buf(values.begin(), values.end());
    auto nth = buf.begin() + (j - 1);
    if (order == RankOrder::ascending)
        std::nth_element(buf.begin(), nth, buf.end());
    else
        std::nth_element(buf.begin(), nth, buf.end(), std::greater<>());
    return *nth;
}

double order_statistic(const Vec& values, RankOrder order, int j) {
    return order_statistic(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())),
                           order, j);
}

Mat sample_unit_sphere(int p, int count, Rng rng) {
    if (p < 1 || count < 1) throw NumericalError("sample_unit_sphere: p and count must be >= 1");
    Mat out(count, p);
    for (int s = 0; s < count; ++s) {
        double nrm = 0.0;
        do {
            for (int i = 0; i < p; ++i) out(s, i) = rng.gaussian();
            nrm = out.row(s).norm();
        } while (nrm == 0.0);
        out.row(s) /= nrm;
    }
    return out;
}

namespace {
double max_violation(const std::vector<Vec>& centers, const std::vector<double>& radii, const Vec& x,
                     std::size_t* arg = nullptr) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.size(); ++j) {
        double v = (x - centers[j]).norm() - radii[j];
        if (v > worst) {
            worst = v;
            if (arg) *arg = j;
        }
    }
    return worst;
}
}  // namespace

BallsResult balls_intersect(const std::vector<Vec>& centers, const std::vector<double>& radii,
                            double tol, int max_iter, const Vec* warm_start) {
    if (centers.empty() || centers.size() != radii.size())
        throw NumericalError("balls_intersect: empty or mismatched inputs");
    const Eigen::Index p = centers.front().size();
    for (const auto& c : centers)
        if (c.size() != p) throw NumericalError("balls_intersect: dimension mismatch");
    if (!(tol > 0.0)) throw NumericalError("balls_intersect: tol must be positive");

    Vec x = warm_start && warm_start->size() == p ? *warm_start : Vec::Zero(p);
    if (!warm_start || warm_start->size() != p) {
        for (const auto& c : centers) x += c;
        x /= static_cast<double>(centers.size());
    }

    BallsResult res;
    res.best_value = max_violation(centers, radii, x);
    res.witness = x;
    if (res.best_value <= tol) {
        res.intersects = true;
        return res;
    }

    // Repeated projection onto the currently-worst ball. For a consistent
    // system this converges to a common point; for an inconsistent one the
    // running average settles near the min-max point and the value stalls.
    Vec avg = x;
    double stall_ref = res.best_value;
    int since_improvement = 0;
    for (int it = 1; it <= max_iter; ++it) {
        std::size_t j = 0;
        double f = max_violation(centers, radii, x, &j);
        if (f < res.best_value) {
            res.best_value = f;
            res.witness = x;
        }
        if (f <= tol) {
            res.intersects = true;
            res.witness = x;
            res.best_value = f;
            return res;
        }
        Vec d = x - centers[j];
        double dn = d.norm();
        x = (dn == 0.0) ? centers[j] : Vec(centers[j] + (radii[j] / dn) * d);

        double w = 1.0 / static_cast<double>(it + 1);
        avg = (1.0 - w) * avg + w * x;
        double fa = max_violation(centers, radii, avg);
        if (fa < res.best_value) {
            res.best_value = fa;
            res.witness = avg;
            if (fa <= tol) {
                res.intersects = true;
                return res;
            }
        }

        if (++since_improvement >= 512) {
            if (res.best_value > stall_ref * (1.0 - 1e-10) && res.best_value > 4.0 * tol) {
                res.intersects = false;  // value stalled clearly above tol
                return res;
            }
            stall_ref = res.best_value;
            since_improvement = 0;
        }
        if (res.best_value < stall_ref) {
            stall_ref = res.best_value;
            since_improvement = 0;
        }
    }
    if (res.best_value > 4.0 * tol) {
        res.intersects = false;
        return res;
    }
    throw BallsConvergenceError("balls_intersect: budget exhausted inside the ambiguous band",
                                res.best_value);
}

}  // namespace robustreg
