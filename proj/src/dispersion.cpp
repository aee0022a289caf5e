#include "teamkappa/dispersion.hpp"

#include <cmath>
#include <charconv>

#include <fmt/format.h>

#include "teamkappa/agreement.hpp"
#include "teamkappa/csv.hpp"
#include "teamkappa/error.hpp"
#include "teamkappa/mc.hpp"
#include "teamkappa/parallel.hpp"
#include "teamkappa/rng.hpp"

namespace teamkappa {

namespace {

constexpr double kUndefinedMean = 1e-9;
constexpr std::string_view kUndefined = "undefined";

struct TeamMoments {
    double kappa_hat = 0.0;
    std::vector<Moments> per_n;
};

}  // namespace

const VariationRow& VariationTable::at(std::size_t n) const {
    for (const auto& row : rows) {
        if (row.n == n) return row;
    }
    throw DomainError(fmt::format("no variation row for n = {}", n));
}

VariationTable run_variation(const AnnotationMatrix& matrix, const VariationConfig& config, unsigned threads) {
    if (config.k < 3 || config.k > matrix.rater_count()) {
        throw DataError(fmt::format("team size k = {} outside 3..{}", config.k, matrix.rater_count()));
    }
    if (config.m < 1 || config.j < 1) throw DataError("m and j must be at least 1");

    std::vector<TeamMoments> teams(config.j);
    parallel_for(config.j, resolve_threads(threads), [&](std::size_t index) {
        ExperimentConfig experiment;
        experiment.k = config.k;
        experiment.m = config.m;
        experiment.seed = derive_seed(config.seed, index + 1);
        const RunSet runs = run_experiment(matrix, experiment, 1);

        TeamMoments& team = teams[index];
        team.kappa_hat = runs.kappa_hat;
        std::vector<double> column(runs.runs.size());
        for (std::size_t i = 0; i + 1 < config.k; ++i) {
            for (std::size_t r = 0; r < runs.runs.size(); ++r) column[r] = runs.runs[r].kappas[i];
            team.per_n.push_back(moments(column));
        }
    });

    VariationTable table;
    table.config = config;
    table.dataset_kappa_hat = fleiss_kappa(matrix).kappa;

    std::vector<RunningMean> mu(config.k - 1), sigma(config.k - 1);
    RunningMean team_kappa;
    for (const auto& team : teams) {
        table.team_kappa_hats.push_back(team.kappa_hat);
        team_kappa.add(team.kappa_hat);
        for (std::size_t i = 0; i < team.per_n.size(); ++i) {
            mu[i].add(team.per_n[i].mean);
            sigma[i].add(team.per_n[i].stddev);
        }
    }
    table.mean_team_kappa_hat = team_kappa.value();

    for (std::size_t i = 0; i < mu.size(); ++i) {
        VariationRow row;
        row.n = i + 2;
        row.mu_bar = mu[i].value();
        row.sigma_bar = sigma[i].value();
        if (std::abs(row.mu_bar) >= kUndefinedMean) row.cv = row.sigma_bar / row.mu_bar;
        table.rows.push_back(row);
    }
    return table;
}

std::string IntervalEstimate::level() const {
    return fmt::format("{:.2f}%", coverage);
}

IntervalEstimate interval_estimate(double kappa_hat, double cv, int z) {
    static constexpr double kCoverage[] = {68.27, 95.45, 99.73};
    if (z < 1 || z > 3) throw DomainError(fmt::format("z must be 1, 2 or 3, got {}", z));
    if (!(cv >= 0.0)) throw DomainError(fmt::format("coefficient of variation must be >= 0, got {}", cv));
    IntervalEstimate out;
    out.z = z;
    out.coverage = kCoverage[z - 1];
    const double half = static_cast<double>(z) * cv * kappa_hat;
    out.lower = kappa_hat - half;
    out.upper = kappa_hat + half;
    return out;
}

double cv_percent(double cv) {
    return std::round(cv * 10000.0) / 100.0;
}

std::string format_variation(const VariationTable& table) {
    std::string out = "n,mu_bar,sigma_bar,cv,cv_percent\n";
    for (const auto& row : table.rows) {
        if (row.cv) {
            out += fmt::format("{},{},{},{},{:.2f}\n", row.n, csv::fixed6(row.mu_bar), csv::fixed6(row.sigma_bar),
                               csv::fixed6(*row.cv), cv_percent(*row.cv));
        } else {
            out += fmt::format("{},{},{},{},{}\n", row.n, csv::fixed6(row.mu_bar), csv::fixed6(row.sigma_bar),
                               kUndefined, kUndefined);
        }
    }
    return out;
}

std::string format_intervals(const VariationTable& table, double kappa_hat) {
    std::string out = "n,level,lower,upper\n";
    for (const auto& row : table.rows) {
        for (int z = 1; z <= 3; ++z) {
            if (row.cv && *row.cv >= 0.0) {
                const auto e = interval_estimate(kappa_hat, *row.cv, z);
                out += fmt::format("{},{},{},{}\n", row.n, e.level(), csv::fixed6(e.lower), csv::fixed6(e.upper));
            } else {
                const IntervalEstimate label{z, z == 1 ? 68.27 : z == 2 ? 95.45 : 99.73, 0.0, 0.0};
                out += fmt::format("{},{},{},{}\n", row.n, label.level(), kUndefined, kUndefined);
            }
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::optional<double>>> parse_variation_cv(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || csv::join(rows.front().fields) != "n,mu_bar,sigma_bar,cv,cv_percent") {
        throw DataError("malformed row at line 1: expected header n,mu_bar,sigma_bar,cv,cv_percent");
    }
    std::vector<std::pair<std::size_t, std::optional<double>>> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != 5) throw DataError(fmt::format("malformed row at line {}", rows[r].line));
        std::size_t n = 0;
        auto [p1, e1] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), n);
        if (e1 != std::errc{} || p1 != f[0].data() + f[0].size()) {
            throw DataError(fmt::format("malformed row at line {}", rows[r].line));
        }
        if (f[3] == kUndefined) {
            out.emplace_back(n, std::nullopt);
            continue;
        }
        double cv = 0.0;
        auto [p2, e2] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), cv);
        if (e2 != std::errc{} || p2 != f[3].data() + f[3].size()) {
            throw DataError(fmt::format("malformed row at line {}", rows[r].line));
        }
        out.emplace_back(n, cv);
    }
    return out;
}

}  // namespace teamkappa
