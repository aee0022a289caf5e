#include "teamkappa/mc.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "teamkappa/agreement.hpp"
#include "teamkappa/csv.hpp"
#include "teamkappa/error.hpp"
#include "teamkappa/parallel.hpp"

namespace teamkappa {

namespace {

std::vector<std::size_t> validated_team(const AnnotationMatrix& matrix, std::vector<std::size_t> team) {
    std::sort(team.begin(), team.end());
    if (std::adjacent_find(team.begin(), team.end()) != team.end()) {
        throw DataError("fixed team lists a rater twice");
    }
    if (!team.empty() && team.back() >= matrix.rater_count()) {
        throw DataError(fmt::format("fixed team references rater index {} but the matrix has {} raters",
                                    team.back(), matrix.rater_count()));
    }
    if (team.size() < 3) throw DataError(fmt::format("team size must be at least 3, got {}", team.size()));
    return team;
}

double parse_double(const std::string& s, std::size_t line) {
    const auto v = csv::trim(s);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw DataError(fmt::format("malformed row at line {}: '{}' is not a number", line, s));
    }
    return out;
}

std::size_t parse_size(const std::string& s, std::size_t line) {
    const auto v = csv::trim(s);
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw DataError(fmt::format("malformed row at line {}: '{}' is not a count", line, s));
    }
    return out;
}

void expect_header(const std::vector<csv::Row>& rows, std::string_view expected) {
    if (rows.empty() || csv::join(rows.front().fields) != expected) {
        throw DataError(fmt::format("malformed row at line 1: expected header {}", expected));
    }
}

}  // namespace

const SubsetRow& SubsetStats::at(std::size_t n) const {
    for (const auto& row : rows) {
        if (row.n == n) return row;
    }
    throw DomainError(fmt::format("no statistics for subset size {}", n));
}

Moments moments(std::span<const double> values) {
    if (values.empty()) throw DomainError("moments of an empty sample");
    // Shifting by the first value keeps a constant column exact.
    const double shift = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - shift;
    const double count = static_cast<double>(values.size());
    Moments out;
    out.mean = shift + sum / count;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / (count - 1.0));
    }
    return out;
}

double quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return std::clamp(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]), sorted[lo], sorted[lo + 1]);
}

std::vector<std::size_t> sample_team(const AnnotationMatrix& matrix, std::size_t k, Rng& rng) {
    const auto raters = matrix.rater_count();
    if (k < 3 || k > raters) {
        throw DataError(fmt::format("team size k = {} outside 3..{}", k, raters));
    }
    std::vector<std::size_t> pool(raters);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(raters - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<double> prefix_kappas(const AnnotationMatrix& matrix,
                                  std::span<const std::size_t> team,
                                  std::span<const std::size_t> ordering) {
    std::vector<std::size_t> a(team.begin(), team.end()), b(ordering.begin(), ordering.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b || std::adjacent_find(a.begin(), a.end()) != a.end()) {
        throw DomainError("ordering is not a permutation of the team");
    }
    if (ordering.size() < 2) throw DomainError("prefix agreement needs at least 2 raters");

    AgreementAccumulator acc(matrix);
    std::vector<double> out;
    out.reserve(ordering.size() - 1);
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        acc.add_rater(ordering[i]);
        if (i >= 1) out.push_back(acc.kappa().kappa);
    }
    return out;
}

RunSet run_experiment(const AnnotationMatrix& matrix, const ExperimentConfig& config, unsigned threads) {
    if (config.m < 1) throw DataError("repetition count m must be at least 1");

    RunSet set;
    set.config = config;
    if (config.fixed_team) {
        set.team = validated_team(matrix, *config.fixed_team);
        if (config.k != 0 && config.k != set.team.size()) {
            throw DataError(fmt::format("k = {} does not match the fixed team size {}", config.k, set.team.size()));
        }
    } else {
        Rng root = Rng::stream(config.seed, 0);
        set.team = sample_team(matrix, config.k, root);
    }
    set.config.k = set.team.size();
    set.kappa_hat = fleiss_kappa(matrix, set.team).kappa;

    set.runs.resize(config.m);
    parallel_for(config.m, resolve_threads(threads), [&](std::size_t index) {
        RunRecord& run = set.runs[index];
        run.run_id = index + 1;
        run.ordering = set.team;
        Rng rng = Rng::stream(config.seed, run.run_id);
        rng.shuffle(std::span<std::size_t>(run.ordering));
        run.kappas = prefix_kappas(matrix, set.team, run.ordering);
    });
    return set;
}

SubsetStats summarize_columns(std::size_t first_n, const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw DomainError("cannot summarize an empty run set");
    SubsetStats stats;
    stats.rows.reserve(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) {
        std::vector<double> sorted = columns[i];
        if (sorted.empty()) throw DomainError("cannot summarize an empty column");
        std::sort(sorted.begin(), sorted.end());
        const auto mom = moments(columns[i]);
        SubsetRow row;
        row.n = first_n + i;
        row.min = sorted.front();
        row.q1 = quantile(sorted, 0.25);
        row.median = quantile(sorted, 0.5);
        row.q3 = quantile(sorted, 0.75);
        row.max = sorted.back();
        row.mean = mom.mean;
        row.stddev = mom.stddev;
        stats.rows.push_back(row);
    }
    return stats;
}

SubsetStats summarize(const RunSet& runs) {
    if (runs.runs.empty()) throw DomainError("cannot summarize an empty run set");
    const auto length = runs.runs.front().kappas.size();
    std::vector<std::vector<double>> columns(length);
    for (auto& c : columns) c.reserve(runs.runs.size());
    for (const auto& run : runs.runs) {
        if (run.kappas.size() != length) throw DomainError("runs have unequal progression lengths");
        for (std::size_t i = 0; i < length; ++i) columns[i].push_back(run.kappas[i]);
    }
    return summarize_columns(2, columns);
}

std::string format_runs(const RunSet& runs) {
    std::string out = "run_id,n,kappa\n";
    for (const auto& run : runs.runs) {
        for (std::size_t i = 0; i < run.kappas.size(); ++i) {
            out += fmt::format("{},{},{}\n", run.run_id, i + 2, csv::fixed6(run.kappas[i]));
        }
    }
    return out;
}

std::string format_stats(const SubsetStats& stats) {
    std::string out = "n,min,q1,median,q3,max,mean,std\n";
    for (const auto& r : stats.rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.n, csv::fixed6(r.min), csv::fixed6(r.q1),
                           csv::fixed6(r.median), csv::fixed6(r.q3), csv::fixed6(r.max), csv::fixed6(r.mean),
                           csv::fixed6(r.stddev));
    }
    return out;
}

std::vector<std::vector<double>> parse_runs_columns(std::string_view text) {
    const auto rows = csv::parse(text);
    expect_header(rows, "run_id,n,kappa");
    std::map<std::size_t, std::vector<double>> by_n;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != 3) throw DataError(fmt::format("malformed row at line {}", rows[r].line));
        parse_size(f[0], rows[r].line);
        const auto n = parse_size(f[1], rows[r].line);
        by_n[n].push_back(parse_double(f[2], rows[r].line));
    }
    if (by_n.empty()) throw DataError("runs file has no data rows");
    std::vector<std::vector<double>> columns;
    std::size_t expected_n = 2;
    const std::size_t run_count = by_n.begin()->second.size();
    for (auto& [n, values] : by_n) {
        if (n != expected_n) throw DataError(fmt::format("runs file skips subset size {}", expected_n));
        if (values.size() != run_count) {
            throw DataError(fmt::format("runs file has unequal run counts at n = {}", n));
        }
        columns.push_back(std::move(values));
        ++expected_n;
    }
    return columns;
}

SubsetStats parse_stats(std::string_view text) {
    const auto rows = csv::parse(text);
    expect_header(rows, "n,min,q1,median,q3,max,mean,std");
    SubsetStats stats;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        const auto line = rows[r].line;
        if (f.size() != 8) throw DataError(fmt::format("malformed row at line {}", line));
        SubsetRow row;
        row.n = parse_size(f[0], line);
        row.min = parse_double(f[1], line);
        row.q1 = parse_double(f[2], line);
        row.median = parse_double(f[3], line);
        row.q3 = parse_double(f[4], line);
        row.max = parse_double(f[5], line);
        row.mean = parse_double(f[6], line);
        row.stddev = parse_double(f[7], line);
        const std::size_t expected = stats.rows.empty() ? 2 : stats.rows.back().n + 1;
        if (row.n != expected) throw DataError(fmt::format("stats file: expected n = {} at line {}", expected, line));
        stats.rows.push_back(row);
    }
    if (stats.rows.empty()) throw DataError("stats file has no data rows");
    return stats;
}

}  // namespace teamkappa
