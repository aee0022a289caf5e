#pragma once

// Minimum subset agreement model
//
//   min kappa_n ~ 2 kh (n - 2) / (k/10 + n - 2) - kh
//
// and the rational family it was reduced from,
//
//   f(n) = a (n - d) / (b + n - d) + c,
//
// fitted by damped least squares with regressors frozen stage by stage:
//
//   S4  a, b, c, d free
//   S3  d = 2
//   S2  d = 2, c = kh - a
//   S1  d = 2, c = kh - a, a = 2 kh
//   S0  d = 2, c = kh - a, a = 2 kh, b = k / 10   (the closed form above)

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "teamkappa/mc.hpp"

namespace teamkappa {

enum class Stage { S4, S3, S2, S1, S0 };

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view token);

struct Regressors {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;

    bool operator==(const Regressors&) const = default;
};

// Which of a, b, c, d the stage leaves free, in that order.
std::array<bool, 4> free_regressors(Stage stage);

// Overwrites the regressors the stage fixes; free ones pass through.
Regressors apply_stage(Stage stage, Regressors r, double kappa_hat, std::size_t k);

// Closed-form minimum agreement for a subset of n out of k raters.
// Requires 2 <= n <= k and k >= 3.
double eval_min_model(std::size_t n, std::size_t k, double kappa_hat);

// Rational family at subset size n with the stage's fixings applied.
// Throws DomainError when |b + n - d| < 1e-12.
double stage_model(Stage stage, double n, const Regressors& r, double kappa_hat, std::size_t k);

struct MinPoint {
    std::size_t n = 0;
    double y = 0.0;
};

struct MinPoints {
    std::vector<MinPoint> points;  // n strictly increasing
    std::size_t k = 0;
    double kappa_hat = 0.0;
};

struct ModelFit {
    Stage stage = Stage::S4;
    Regressors regressors;
    std::array<bool, 4> free{};
    double r2 = 0.0;
    double sse = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

struct FitOptions {
    std::size_t max_iterations = 200;
    double relative_tolerance = 1e-12;  // on the SSE decrease of an accepted step
    double initial_damping = 1e-3;
};

// d0 = 2, c0 = y(n = 2), a0 = y(n = k) - c0, b0 = k / 10.
Regressors default_initial_guess(const MinPoints& points);

// Levenberg-Marquardt over the stage's free regressors with a forward
// difference Jacobian (step 1e-6 * max(1, |theta|)). Steps that put a pole of
// the model inside [2, k] are rejected. Hitting the iteration cap returns the
// best fit found with converged = false.
ModelFit fit(const MinPoints& points, Stage stage, std::optional<Regressors> initial = std::nullopt,
             const FitOptions& options = {});

// 1 - SS_res / SS_tot. Throws DomainError on length mismatch, empty input
// or zero variance in `observed`.
double r_squared(std::span<const double> observed, std::span<const double> predicted);

// (n, min kappa_n) for n = 2..k, with the n = k point pinned to kappa_hat.
// include_last = false drops the pinned point.
MinPoints extract_minima(const SubsetStats& stats, double kappa_hat, std::size_t k, bool include_last = true);

// minima file: n,min_kappa
std::string format_minima(const MinPoints& points);

// One header line and one row:
// stage,a,a_status,b,b_status,c,c_status,d,d_status,r2,converged,iterations
std::string format_fit_report(const ModelFit& fit);

}  // namespace teamkappa
