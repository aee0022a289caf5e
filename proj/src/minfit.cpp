#include "teamkappa/minfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "teamkappa/csv.hpp"
#include "teamkappa/error.hpp"

namespace teamkappa {

namespace {

constexpr double kPoleTolerance = 1e-12;
constexpr double kMaxDamping = 1e16;

double& component(Regressors& r, std::size_t i) {
    switch (i) {
        case 0: return r.a;
        case 1: return r.b;
        case 2: return r.c;
        default: return r.d;
    }
}

// Solves the small dense system in place; false when singular.
bool solve(std::vector<double> a, std::vector<double> b, std::size_t p, std::vector<double>& x) {
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r) {
            if (std::abs(a[r * p + col]) > std::abs(a[pivot * p + col])) pivot = r;
        }
        if (!(std::abs(a[pivot * p + col]) > 0.0)) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < p; ++c) std::swap(a[col * p + c], a[pivot * p + c]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < p; ++r) {
            const double f = a[r * p + col] / a[col * p + col];
            for (std::size_t c = col; c < p; ++c) a[r * p + c] -= f * a[col * p + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(p, 0.0);
    for (std::size_t r = p; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < p; ++c) s -= a[r * p + c] * x[c];
        x[r] = s / a[r * p + r];
    }
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

class Problem {
public:
    Problem(const MinPoints& points, Stage stage)
        : points_(points), stage_(stage), free_(free_regressors(stage)) {
        for (std::size_t i = 0; i < 4; ++i) {
            if (free_[i]) index_.push_back(i);
        }
    }

    std::size_t dimension() const { return index_.size(); }

    Regressors regressors(const std::vector<double>& theta, Regressors base) const {
        for (std::size_t j = 0; j < index_.size(); ++j) component(base, index_[j]) = theta[j];
        return apply_stage(stage_, base, points_.kappa_hat, points_.k);
    }

    std::vector<double> theta(const Regressors& r) const {
        Regressors copy = r;
        std::vector<double> out;
        for (auto i : index_) out.push_back(component(copy, i));
        return out;
    }

    // b + n - d is linear in n, so checking both ends of [2, k] is enough.
    bool pole_free(const Regressors& r) const {
        const double lo = r.b + 2.0 - r.d;
        const double hi = r.b + static_cast<double>(points_.k) - r.d;
        if (!(std::abs(lo) >= kPoleTolerance) || !(std::abs(hi) >= kPoleTolerance)) return false;
        return (lo > 0.0) == (hi > 0.0);
    }

    void predict(const Regressors& r, std::vector<double>& out) const {
        out.resize(points_.points.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double n = static_cast<double>(points_.points[i].n);
            out[i] = r.a * (n - r.d) / (r.b + n - r.d) + r.c;
        }
    }

    // Infinity when the regressors are unusable.
    double sse(const Regressors& r) const {
        if (!pole_free(r)) return std::numeric_limits<double>::infinity();
        std::vector<double> f;
        predict(r, f);
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double e = points_.points[i].y - f[i];
            s += e * e;
        }
        return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    }

private:
    const MinPoints& points_;
    Stage stage_;
    std::array<bool, 4> free_;
    std::vector<std::size_t> index_;
};

}  // namespace

std::string_view stage_name(Stage stage) {
    switch (stage) {
        case Stage::S4: return "S4";
        case Stage::S3: return "S3";
        case Stage::S2: return "S2";
        case Stage::S1: return "S1";
        case Stage::S0: return "S0";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view token) {
    for (auto s : {Stage::S4, Stage::S3, Stage::S2, Stage::S1, Stage::S0}) {
        if (stage_name(s) == token) return s;
    }
    return std::nullopt;
}

std::array<bool, 4> free_regressors(Stage stage) {
    switch (stage) {
        case Stage::S4: return {true, true, true, true};
        case Stage::S3: return {true, true, true, false};
        case Stage::S2: return {true, true, false, false};
        case Stage::S1: return {false, true, false, false};
        case Stage::S0: return {false, false, false, false};
    }
    return {};
}

Regressors apply_stage(Stage stage, Regressors r, double kappa_hat, std::size_t k) {
    if (stage == Stage::S4) return r;
    r.d = 2.0;
    if (stage == Stage::S3) return r;
    if (stage == Stage::S1 || stage == Stage::S0) r.a = 2.0 * kappa_hat;
    r.c = kappa_hat - r.a;
    if (stage == Stage::S0) r.b = static_cast<double>(k) / 10.0;
    return r;
}

double eval_min_model(std::size_t n, std::size_t k, double kappa_hat) {
    if (k < 3) throw DomainError(fmt::format("team size k = {} must be at least 3", k));
    if (n < 2 || n > k) throw DomainError(fmt::format("subset size n = {} outside 2..{}", n, k));
    const double shifted = static_cast<double>(n - 2);
    return 2.0 * kappa_hat * shifted / (static_cast<double>(k) / 10.0 + shifted) - kappa_hat;
}

double stage_model(Stage stage, double n, const Regressors& r, double kappa_hat, std::size_t k) {
    const Regressors s = apply_stage(stage, r, kappa_hat, k);
    const double denominator = s.b + n - s.d;
    if (!(std::abs(denominator) >= kPoleTolerance)) {
        throw DomainError(fmt::format("model pole at n = {} (b + n - d = {})", n, denominator));
    }
    return s.a * (n - s.d) / denominator + s.c;
}

Regressors default_initial_guess(const MinPoints& points) {
    if (points.points.empty()) throw DomainError("no points for an initial guess");
    Regressors g;
    g.d = 2.0;
    const auto first = std::find_if(points.points.begin(), points.points.end(), [](auto& p) { return p.n == 2; });
    g.c = first != points.points.end() ? first->y : points.points.front().y;
    const auto last = std::find_if(points.points.begin(), points.points.end(), [&](auto& p) { return p.n == points.k; });
    g.a = (last != points.points.end() ? last->y : points.kappa_hat) - g.c;
    g.b = static_cast<double>(points.k) / 10.0;
    return g;
}

double r_squared(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size()) throw DomainError("r_squared: lists differ in length");
    if (observed.empty()) throw DomainError("r_squared: empty input");
    double mean = 0.0;
    for (double v : observed) mean += v;
    mean /= static_cast<double>(observed.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
        ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    }
    if (!(ss_tot > 0.0)) throw DomainError("r_squared: observed values have zero variance");
    return 1.0 - ss_res / ss_tot;
}

ModelFit fit(const MinPoints& points, Stage stage, std::optional<Regressors> initial, const FitOptions& options) {
    if (points.k < 3) throw DomainError("fit: team size k must be at least 3");
    for (std::size_t i = 1; i < points.points.size(); ++i) {
        if (points.points[i].n <= points.points[i - 1].n) {
            throw DomainError("fit: subset sizes must be strictly increasing (degenerate points)");
        }
    }

    const Problem problem(points, stage);
    const std::size_t p = problem.dimension();
    if (points.points.size() < p + 1) {
        throw DomainError(fmt::format("fit: stage {} needs at least {} points, got {}", stage_name(stage), p + 1,
                                      points.points.size()));
    }

    const Regressors start = initial.value_or(default_initial_guess(points));
    std::vector<double> theta = problem.theta(start);
    Regressors current = problem.regressors(theta, start);
    double sse = problem.sse(current);
    if (!std::isfinite(sse)) throw DomainError("fit: initial guess places a pole inside the data range");

    double y_scale = 0.0;
    for (const auto& pt : points.points) y_scale += pt.y * pt.y;
    const double sse_floor = 1e-30 * std::max(1.0, y_scale);

    ModelFit out;
    out.stage = stage;
    out.free = free_regressors(stage);

    double damping = options.initial_damping;
    bool converged = p == 0 || sse <= sse_floor;
    std::size_t iterations = 0;
    const std::size_t m = points.points.size();
    std::vector<double> base, shifted, jac(m * p), normal(p * p), gradient(p), step;

    while (!converged && iterations < options.max_iterations) {
        ++iterations;
        problem.predict(current, base);
        for (std::size_t j = 0; j < p; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
            std::vector<double> probe = theta;
            probe[j] += h;
            Regressors r = problem.regressors(probe, start);
            double used_h = h;
            if (!problem.pole_free(r)) {
                probe[j] = theta[j] - h;
                r = problem.regressors(probe, start);
                used_h = -h;
            }
            problem.predict(r, shifted);
            for (std::size_t i = 0; i < m; ++i) jac[i * p + j] = (shifted[i] - base[i]) / used_h;
        }
        for (std::size_t a = 0; a < p; ++a) {
            gradient[a] = 0.0;
            for (std::size_t i = 0; i < m; ++i) gradient[a] += jac[i * p + a] * (points.points[i].y - base[i]);
            for (std::size_t b = 0; b < p; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += jac[i * p + a] * jac[i * p + b];
                normal[a * p + b] = s;
            }
        }
        double max_diag = 0.0;
        for (std::size_t a = 0; a < p; ++a) max_diag = std::max(max_diag, normal[a * p + a]);

        bool accepted = false;
        while (damping <= kMaxDamping) {
            std::vector<double> damped = normal;
            for (std::size_t a = 0; a < p; ++a) {
                damped[a * p + a] += damping * std::max(normal[a * p + a], 1e-12 * max_diag + 1e-300);
            }
            if (solve(damped, gradient, p, step)) {
                std::vector<double> candidate = theta;
                for (std::size_t j = 0; j < p; ++j) candidate[j] += step[j];
                const Regressors r = problem.regressors(candidate, start);
                const double trial = problem.sse(r);
                if (trial < sse) {
                    const double decrease = (sse - trial) / sse;
                    theta = std::move(candidate);
                    current = r;
                    sse = trial;
                    damping = std::max(damping / 10.0, 1e-15);
                    accepted = true;
                    if (decrease < options.relative_tolerance || sse <= sse_floor) converged = true;
                    break;
                }
            }
            damping *= 10.0;
        }
        // No step lowers the SSE at any damping: stationary to working precision.
        if (!accepted) converged = true;
    }

    out.regressors = current;
    out.sse = sse;
    out.converged = converged;
    out.iterations = iterations;

    std::vector<double> observed, predicted;
    for (const auto& pt : points.points) {
        observed.push_back(pt.y);
        predicted.push_back(stage_model(stage, static_cast<double>(pt.n), current, points.kappa_hat, points.k));
    }
    out.r2 = r_squared(observed, predicted);
    return out;
}

MinPoints extract_minima(const SubsetStats& stats, double kappa_hat, std::size_t k, bool include_last) {
    if (stats.rows.size() + 1 != k || stats.rows.front().n != 2 || stats.k() != k) {
        throw DataError(fmt::format("statistics must cover n = 2..{}", k));
    }
    MinPoints out;
    out.k = k;
    out.kappa_hat = kappa_hat;
    for (const auto& row : stats.rows) {
        if (row.n == k) {
            if (include_last) out.points.push_back({row.n, kappa_hat});
        } else {
            out.points.push_back({row.n, row.min});
        }
    }
    return out;
}

std::string format_minima(const MinPoints& points) {
    std::string out = "n,min_kappa\n";
    for (const auto& p : points.points) out += fmt::format("{},{}\n", p.n, csv::fixed6(p.y));
    return out;
}

std::string format_fit_report(const ModelFit& fit) {
    const auto status = [&](std::size_t i) { return fit.free[i] ? "free" : "fixed"; };
    return fmt::format(
        "stage,a,a_status,b,b_status,c,c_status,d,d_status,r2,converged,iterations\n"
        "{},{:.12g},{},{:.12g},{},{:.12g},{},{:.12g},{},{:.12g},{},{}\n",
        stage_name(fit.stage), fit.regressors.a, status(0), fit.regressors.b, status(1), fit.regressors.c, status(2),
        fit.regressors.d, status(3), fit.r2, fit.converged ? "true" : "false", fit.iterations);
}

}  // namespace teamkappa
