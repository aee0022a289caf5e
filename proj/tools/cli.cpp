#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "teamkappa/agreement.hpp"
#include "teamkappa/corpus.hpp"
#include "teamkappa/csv.hpp"
#include "teamkappa/dispersion.hpp"
#include "teamkappa/error.hpp"
#include "teamkappa/mc.hpp"
#include "teamkappa/minfit.hpp"

namespace teamkappa::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Writes to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        csv::write_text(path, text);
    }
}

std::string report_text(const PreprocessReport& r, bool as_json) {
    if (as_json) {
        return json{{"total_in", r.total_in},
                    {"removed_non_developers", r.removed_non_developers},
                    {"removed_incomplete", r.removed_incomplete},
                    {"retained", r.retained}}
                   .dump(2) +
               "\n";
    }
    return fmt::format("total_in,removed_non_developers,removed_incomplete,retained\n{},{},{},{}\n", r.total_in,
                       r.removed_non_developers, r.removed_incomplete, r.retained);
}

json fit_json(const ModelFit& fit) {
    json j;
    j["stage"] = std::string(stage_name(fit.stage));
    const char* names[] = {"a", "b", "c", "d"};
    const double values[] = {fit.regressors.a, fit.regressors.b, fit.regressors.c, fit.regressors.d};
    for (std::size_t i = 0; i < 4; ++i) {
        j[names[i]] = {{"value", values[i]}, {"status", fit.free[i] ? "free" : "fixed"}};
    }
    j["r2"] = fit.r2;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    return j;
}

struct Options {
    // preprocess
    std::string raw, mapping, out, report;
    // synth
    std::size_t raters = 0, items = 0, categories = 3;
    double noise = 0.0;
    // shared
    std::string input;
    std::uint64_t seed = 0;
    bool as_json = false;
    // simulate / variation / fit / minmodel
    std::size_t k = 0, m = 1000;
    std::size_t var_k = 7, var_m = 100, j = 100;
    std::string runs_out, stats_out, team, intervals_out, anchor = "dataset";
    // fit
    std::string stats, runs, stage = "S0", minima_out;
    double kappa_hat = 0.0;
    bool drop_last = false, strict = false;
    // minmodel
    std::size_t n = 0;
    // intervals
    double cv = 0.0;
    std::string variation;
};

int cmd_preprocess(const Options& o, std::ostream& out) {
    const auto mapping = ColumnMapping::load(o.mapping);
    const auto result = preprocess(load_raw(o.raw, mapping));
    emit(o.out, format_matrix(result.matrix), out);
    emit(o.report, report_text(result.report, o.as_json), out);
    return kOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
    SyntheticSpec spec{o.raters, o.items, o.categories, o.noise, o.seed};
    emit(o.out, format_matrix(generate_synthetic(spec)), out);
    return kOk;
}

int cmd_kappa(const Options& o, std::ostream& out) {
    const auto matrix = read_matrix(o.input);
    const auto value = fleiss_kappa(matrix);
    if (o.as_json) {
        out << json{{"kappa", value.kappa},
                    {"observed_agreement", value.observed_agreement},
                    {"expected_agreement", value.expected_agreement},
                    {"degenerate", value.degenerate},
                    {"raters", matrix.rater_count()},
                    {"items", matrix.item_count()}}
                   .dump(2)
            << "\n";
    } else {
        out << "kappa,observed_agreement,expected_agreement,degenerate,raters,items\n"
            << fmt::format("{},{},{},{},{},{}\n", csv::fixed6(value.kappa), csv::fixed6(value.observed_agreement),
                           csv::fixed6(value.expected_agreement), value.degenerate ? "true" : "false",
                           matrix.rater_count(), matrix.item_count());
    }
    return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto matrix = read_matrix(o.input);
    ExperimentConfig config;
    config.m = o.m;
    config.seed = o.seed;
    if (!o.team.empty()) {
        std::vector<std::size_t> team;
        for (const auto& id : csv::split_list(o.team)) {
            const auto idx = matrix.rater_index(id);
            if (!idx) throw DataError(fmt::format("unknown rater '{}' in --team", id));
            team.push_back(*idx);
        }
        config.fixed_team = std::move(team);
        config.k = o.k;
    } else {
        config.k = o.k == 0 ? matrix.rater_count() : o.k;
    }

    err << fmt::format("simulating k={} m={} seed={}\n", config.k ? config.k : config.fixed_team->size(), config.m,
                       config.seed);
    const auto runs = run_experiment(matrix, config);
    const auto stats = summarize(runs);

    if (!o.runs_out.empty()) csv::write_text(o.runs_out, format_runs(runs));
    emit(o.stats_out, format_stats(stats), out);

    std::vector<std::string> ids;
    for (auto idx : runs.team) ids.push_back(matrix.raters()[idx]);
    if (o.as_json) {
        out << json{{"kappa_hat", runs.kappa_hat}, {"team", ids}}.dump(2) << "\n";
    } else {
        out << "kappa_hat=" << csv::fixed6(runs.kappa_hat) << "\n";
        out << "team=" << csv::join(ids) << "\n";
    }
    return kOk;
}

int cmd_fit(const Options& o, bool have_k, bool have_kappa_hat, std::ostream& out) {
    SubsetStats stats = !o.stats.empty() ? parse_stats(csv::read_text(o.stats))
                                         : summarize_columns(2, parse_runs_columns(csv::read_text(o.runs)));
    const std::size_t k = have_k ? o.k : stats.k();
    const double kappa_hat = have_kappa_hat ? o.kappa_hat : stats.at(stats.k()).min;
    const auto stage = parse_stage(o.stage);

    const auto points = extract_minima(stats, kappa_hat, k, !o.drop_last);
    if (!o.minima_out.empty()) csv::write_text(o.minima_out, format_minima(points));
    const auto result = fit(points, *stage);
    emit(o.out, o.as_json ? fit_json(result).dump(2) + "\n" : format_fit_report(result), out);
    if (o.strict && !result.converged) {
        throw NumericFailure(fmt::format("fit did not converge after {} iterations", result.iterations));
    }
    return kOk;
}

int cmd_minmodel(const Options& o, std::ostream& out) {
    if (o.n < 2 || o.k < 3 || o.n > o.k) {
        throw UsageError(fmt::format("minmodel needs 2 <= n <= k and k >= 3 (got n={}, k={})", o.n, o.k));
    }
    out << csv::fixed6(eval_min_model(o.n, o.k, o.kappa_hat)) << "\n";
    return kOk;
}

int cmd_variation(const Options& o, std::ostream& out, std::ostream& err) {
    const auto matrix = read_matrix(o.input);
    VariationConfig config{o.var_k, o.var_m, o.j, o.seed};
    err << fmt::format("variation k={} m={} j={} seed={}\n", config.k, config.m, config.j, config.seed);
    const auto table = run_variation(matrix, config);
    const double anchor = o.anchor == "team-mean" ? table.mean_team_kappa_hat : table.dataset_kappa_hat;

    emit(o.out, format_variation(table), out);
    if (!o.intervals_out.empty()) csv::write_text(o.intervals_out, format_intervals(table, anchor));
    if (o.as_json) {
        out << json{{"dataset_kappa_hat", table.dataset_kappa_hat},
                    {"mean_team_kappa_hat", table.mean_team_kappa_hat},
                    {"anchor", o.anchor}}
                   .dump(2)
            << "\n";
    } else {
        out << "dataset_kappa_hat=" << csv::fixed6(table.dataset_kappa_hat) << "\n";
        out << "mean_team_kappa_hat=" << csv::fixed6(table.mean_team_kappa_hat) << "\n";
    }
    return kOk;
}

int cmd_intervals(const Options& o, bool have_cv, std::ostream& out) {
    std::string text = "n,level,lower,upper\n";
    if (have_cv) {
        for (int z = 1; z <= 3; ++z) {
            const auto e = interval_estimate(o.kappa_hat, o.cv, z);
            text += fmt::format(",{},{},{}\n", e.level(), csv::fixed6(e.lower), csv::fixed6(e.upper));
        }
    } else {
        VariationTable table;
        for (const auto& [n, cv] : parse_variation_cv(csv::read_text(o.variation))) {
            table.rows.push_back(VariationRow{n, 0.0, 0.0, cv});
        }
        text = format_intervals(table, o.kappa_hat);
    }
    emit(o.out, text, out);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Subset interrater agreement: Fleiss' kappa, Monte Carlo progressions, minimum-agreement fits"};
    app.name("teamkappa");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options o;

    auto* pre = app.add_subcommand("preprocess", "Filter a raw survey export into an annotation matrix");
    pre->add_option("--raw", o.raw, "Raw survey file")->required()->check(CLI::ExistingFile);
    pre->add_option("--mapping", o.mapping, "Column mapping config")->required()->check(CLI::ExistingFile);
    pre->add_option("--out", o.out, "Matrix output (long format)");
    pre->add_option("--report", o.report, "Filter report output");
    pre->add_flag("--json", o.as_json, "Report as JSON");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic truth-plus-noise cohort");
    synth->add_option("--raters", o.raters)->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    synth->add_option("--items", o.items)->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
    synth->add_option("--categories", o.categories)->check(CLI::Range(std::size_t{2}, kMaxCategories));
    synth->add_option("--noise", o.noise, "Replacement probability in [0, 1]")->required()->check(CLI::Range(0.0, 1.0));
    synth->add_option("--seed", o.seed);
    synth->add_option("--out", o.out);

    auto* kappa = app.add_subcommand("kappa", "Fleiss' kappa of a matrix");
    kappa->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    kappa->add_flag("--json", o.as_json);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo prefix-agreement experiment");
    sim->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    sim->add_option("--k", o.k, "Team size (default: all raters)");
    sim->add_option("--m", o.m, "Repetitions")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--seed", o.seed);
    sim->add_option("--team", o.team, "Fixed team as comma-separated rater ids");
    sim->add_option("--runs-out", o.runs_out);
    sim->add_option("--stats-out", o.stats_out);
    sim->add_flag("--json", o.as_json);

    auto* fit_cmd = app.add_subcommand("fit", "Fit the minimum-agreement model to per-n minima");
    auto* stats_opt = fit_cmd->add_option("--stats", o.stats)->check(CLI::ExistingFile);
    auto* runs_opt = fit_cmd->add_option("--runs", o.runs)->check(CLI::ExistingFile);
    stats_opt->excludes(runs_opt);
    fit_cmd->add_option("--stage", o.stage)->check(CLI::IsMember({"S4", "S3", "S2", "S1", "S0"}));
    auto* fit_k = fit_cmd->add_option("--k", o.k)->check(CLI::Range(std::size_t{3}, std::size_t{1} << 20));
    auto* fit_kh = fit_cmd->add_option("--kappa-hat", o.kappa_hat);
    fit_cmd->add_option("--out", o.out);
    fit_cmd->add_option("--minima-out", o.minima_out);
    fit_cmd->add_flag("--drop-last", o.drop_last, "Exclude the pinned n = k point");
    fit_cmd->add_flag("--strict", o.strict, "Exit 3 when the fit does not converge");
    fit_cmd->add_flag("--json", o.as_json);

    auto* mm = app.add_subcommand("minmodel", "Evaluate the closed-form minimum agreement");
    mm->add_option("--n", o.n)->required();
    mm->add_option("--k", o.k)->required();
    mm->add_option("--kappa-hat", o.kappa_hat)->required();

    auto* var = app.add_subcommand("variation", "Coefficient of variation over many sampled teams");
    var->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    var->add_option("--k", o.var_k, "Team size")->capture_default_str();
    var->add_option("--m", o.var_m, "Repetitions per team")->capture_default_str()->check(CLI::PositiveNumber);
    var->add_option("--j", o.j, "Number of teams")->capture_default_str()->check(CLI::PositiveNumber);
    var->add_option("--seed", o.seed);
    var->add_option("--out", o.out);
    var->add_option("--intervals-out", o.intervals_out);
    var->add_option("--anchor", o.anchor, "kappa-hat for intervals: dataset or team-mean")
        ->check(CLI::IsMember({"dataset", "team-mean"}));
    var->add_flag("--json", o.as_json);

    auto* iv = app.add_subcommand("intervals", "Empirical-rule intervals around kappa-hat");
    iv->add_option("--kappa-hat", o.kappa_hat)->required();
    auto* cv_opt = iv->add_option("--cv", o.cv)->check(CLI::NonNegativeNumber);
    auto* var_opt = iv->add_option("--variation", o.variation)->check(CLI::ExistingFile);
    cv_opt->excludes(var_opt);
    iv->add_option("--out", o.out);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*pre) return cmd_preprocess(o, out);
        if (*synth) return cmd_synth(o, out);
        if (*kappa) return cmd_kappa(o, out);
        if (*sim) return cmd_simulate(o, out, err);
        if (*fit_cmd) {
            if (!*stats_opt && !*runs_opt) throw UsageError("fit needs --stats or --runs");
            return cmd_fit(o, fit_k->count() > 0, fit_kh->count() > 0, out);
        }
        if (*mm) return cmd_minmodel(o, out);
        if (*var) return cmd_variation(o, out, err);
        if (*iv) {
            if (!*cv_opt && !*var_opt) throw UsageError("intervals needs --cv or --variation");
            return cmd_intervals(o, cv_opt->count() > 0, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericFailure& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

}  // namespace teamkappa::cli
