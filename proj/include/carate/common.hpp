#ifndef CARATE_COMMON_HPP
#define CARATE_COMMON_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace carate {

// Input failed a structural precondition (bad file, bad column, bad flag).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data is structurally fine but statistically unusable (empty arm, n too small).
class DegenerateStratumError : public std::runtime_error {
public:
    explicit DegenerateStratumError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside a kernel (singular downdate, NaN input).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Neumaier compensated accumulator. Per-stratum contributions are combined
// through this in fixed stratum order so results do not depend on how the
// work was scheduled.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Standard normal quantile, Wichura's PPND16 (AS 241). Relative accuracy is
// about 1e-15, well inside the 1e-9 the interval construction needs.
double normal_quantile(double prob);

inline double normal_upper_quantile(double alpha) {
    // z_{1 - alpha/2}
    return normal_quantile(1.0 - alpha / 2.0);
}

} // namespace carate

#endif
