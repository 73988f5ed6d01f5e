#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace robustreg {

// Bad user-facing configuration (divisibility, ranges, unparsable files).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine could not meet its contract.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Power iteration ran out of iterations; carries the last iterate.
struct EigConvergenceError : NumericalError {
    EigConvergenceError(const std::string& what, double value, std::vector<double> last_iterate,
                        double residual)
        : NumericalError(what), value(value), last_iterate(std::move(last_iterate)), residual(residual) {}
    double value;
    std::vector<double> last_iterate;
    double residual;
};

// The weight-update round count floored to zero: the requested margin lower
// bound exceeds what the data can support. Callers treat this as "already at
// the statistical floor" rather than a fatal fault.
struct MwMarginError : NumericalError {
    MwMarginError(const std::string& what, double margin_lb, double loss_bound)
        : NumericalError(what), margin_lb(margin_lb), loss_bound(loss_bound) {}
    double margin_lb;
    double loss_bound;
};

// Ball-intersection solver exhausted its budget; carries the best value seen.
struct BallsConvergenceError : NumericalError {
    BallsConvergenceError(const std::string& what, double best_value)
        : NumericalError(what), best_value(best_value) {}
    double best_value;
};

}  // namespace robustreg
