#pragma once

// Monte Carlo subset-agreement experiment: pick a team, then repeatedly
// shuffle it and record the agreement of every prefix of the ordering.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "teamkappa/corpus.hpp"
#include "teamkappa/rng.hpp"

namespace teamkappa {

struct ExperimentConfig {
    std::size_t k = 0;        // team size, 3 <= k <= rater count
    std::size_t m = 1000;     // repetitions
    std::uint64_t seed = 0;
    // Explicit team (rater indices). When unset, k raters are sampled.
    std::optional<std::vector<std::size_t>> fixed_team;
};

struct RunRecord {
    std::size_t run_id = 0;              // 1-based
    std::vector<std::size_t> ordering;   // permutation of the team
    std::vector<double> kappas;          // kappas[i] is the agreement of the first i + 2 raters
};

struct RunSet {
    ExperimentConfig config;
    std::vector<std::size_t> team;  // ascending rater indices
    double kappa_hat = 0.0;
    std::vector<RunRecord> runs;    // ordered by run_id

    std::size_t k() const noexcept { return team.size(); }
};

struct SubsetRow {
    std::size_t n = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0, stddev = 0;
};

struct SubsetStats {
    std::vector<SubsetRow> rows;  // n = 2..k ascending

    std::size_t k() const noexcept { return rows.empty() ? 0 : rows.back().n; }
    const SubsetRow& at(std::size_t n) const;
};

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

// Mean and sample std. A constant input yields exactly that constant and 0.
Moments moments(std::span<const double> values);

// Linear interpolation between closest ranks (type 7). `sorted` ascending.
double quantile(std::span<const double> sorted, double p);

// k distinct raters drawn uniformly without replacement, returned ascending.
std::vector<std::size_t> sample_team(const AnnotationMatrix& matrix, std::size_t k, Rng& rng);

// Agreement of the first n raters of `ordering` for n = 2..k.
std::vector<double> prefix_kappas(const AnnotationMatrix& matrix,
                                  std::span<const std::size_t> team,
                                  std::span<const std::size_t> ordering);

// The team is drawn from stream (seed, 0); run r shuffles with stream
// (seed, r). Output does not depend on the worker count.
RunSet run_experiment(const AnnotationMatrix& matrix, const ExperimentConfig& config, unsigned threads = 0);

SubsetStats summarize(const RunSet& runs);

// columns[i] holds every sampled value for n = first_n + i.
SubsetStats summarize_columns(std::size_t first_n, const std::vector<std::vector<double>>& columns);

// runs file: run_id,n,kappa
std::string format_runs(const RunSet& runs);
// stats file: n,min,q1,median,q3,max,mean,std
std::string format_stats(const SubsetStats& stats);

// Reads a runs file back into per-n columns (n = 2..k).
std::vector<std::vector<double>> parse_runs_columns(std::string_view text);
SubsetStats parse_stats(std::string_view text);

}  // namespace teamkappa
