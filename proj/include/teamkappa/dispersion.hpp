#pragma once

// Dispersion of subset agreement across many sampled teams: running means of
// the per-team mean and standard deviation of kappa_n, the coefficient of
// variation, and empirical-rule interval estimates around kappa-hat.
//
// sigma_bar is the arithmetic mean of per-team standard deviations, not a
// pooled standard deviation.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "teamkappa/corpus.hpp"

namespace teamkappa {

struct VariationConfig {
    std::size_t k = 7;
    std::size_t m = 100;
    std::size_t j = 100;
    std::uint64_t seed = 0;
};

// mean <- ((t - 1) * mean + x_t) / t after the t-th value.
class RunningMean {
public:
    void add(double value) {
        ++count_;
        const double t = static_cast<double>(count_);
        value_ = ((t - 1.0) * value_ + value) / t;
    }
    double value() const noexcept { return value_; }
    std::size_t count() const noexcept { return count_; }

private:
    double value_ = 0.0;
    std::size_t count_ = 0;
};

struct VariationRow {
    std::size_t n = 0;
    double mu_bar = 0.0;
    double sigma_bar = 0.0;
    std::optional<double> cv;  // empty when |mu_bar| < 1e-9
};

struct VariationTable {
    VariationConfig config;
    std::vector<VariationRow> rows;  // n = 2..k
    std::vector<double> team_kappa_hats;
    double mean_team_kappa_hat = 0.0;
    double dataset_kappa_hat = 0.0;

    const VariationRow& at(std::size_t n) const;
};

// Team t (1-based) runs the Monte Carlo experiment with seed
// derive_seed(seed, t); teams are folded in index order.
VariationTable run_variation(const AnnotationMatrix& matrix, const VariationConfig& config, unsigned threads = 0);

struct IntervalEstimate {
    int z = 1;
    double coverage = 0.0;  // percent: 68.27, 95.45, 99.73
    double lower = 0.0;
    double upper = 0.0;

    std::string level() const;  // "68.27%"
};

// kappa_hat * (1 -/+ z * cv); z in {1, 2, 3}, cv >= 0. Unclamped.
IntervalEstimate interval_estimate(double kappa_hat, double cv, int z);

// cv * 100 rounded to two decimals.
double cv_percent(double cv);

// variation file: n,mu_bar,sigma_bar,cv,cv_percent
std::string format_variation(const VariationTable& table);
// interval file: n,level,lower,upper for z = 1, 2, 3 per row
std::string format_intervals(const VariationTable& table, double kappa_hat);

// Reads a variation file back as (n, cv) pairs; undefined rows have no cv.
std::vector<std::pair<std::size_t, std::optional<double>>> parse_variation_cv(std::string_view text);

}  // namespace teamkappa
