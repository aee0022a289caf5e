#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support/surrogate_survey.hpp"
#include "teamkappa/csv.hpp"

namespace fs = std::filesystem;
using teamkappa::cli::run;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("teamkappa_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string mapping_path() { return std::string(TEAMKAPPA_DATA_DIR) + "/zenodo_mapping.cfg"; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minmodel") {
    auto r = call({"minmodel", "--n", "45", "--k", "45", "--kappa-hat", "0.2193"});
    CHECK(r.code == 0);
    CHECK(r.out == "0.177748\n");
    r = call({"minmodel", "--n", "2", "--k", "7", "--kappa-hat", "0.5"});
    CHECK(r.out == "-0.500000\n");
    CHECK(call({"minmodel", "--n", "1", "--k", "7", "--kappa-hat", "0.5"}).code == 1);
    CHECK(call({"minmodel", "--n", "8", "--k", "7", "--kappa-hat", "0.5"}).code == 1);
    CHECK(call({"minmodel", "--n", "2", "--k", "7"}).code == 1);
}

TEST_CASE("version, help and unknown commands") {
    auto r = call({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out == std::string(teamkappa::cli::kVersion) + "\n");
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"frobnicate"}).code == 1);
}

TEST_CASE("synth and kappa") {
    TempDir dir;
    CHECK(call({"synth", "--raters", "10", "--items", "20", "--noise", "1.2"}).code == 1);
    REQUIRE(call({"synth", "--raters", "10", "--items", "20", "--noise", "0", "--seed", "3", "--out", dir / "m.csv"}).code == 0);
    auto r = call({"kappa", "--input", dir / "m.csv"});
    CHECK(r.code == 0);
    CHECK(r.out.starts_with("kappa,observed_agreement,expected_agreement,degenerate,raters,items\n"));
    CHECK(r.out.find("\n1.000000,1.000000,") != std::string::npos);
    CHECK(r.out.find(",false,10,20\n") != std::string::npos);
    CHECK(call({"kappa", "--input", dir / "absent.csv"}).code == 1);

    teamkappa::csv::write_text(dir / "bad.csv", "rater,item,label\nr1,s1,maybe\nr2,s1,positive\n");
    r = call({"kappa", "--input", dir / "bad.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown label token") != std::string::npos);
}

TEST_CASE("simulate output shape and determinism") {
    TempDir dir;
    REQUIRE(call({"synth", "--raters", "45", "--items", "100", "--noise", "0.7", "--seed", "1", "--out", dir / "m.csv"}).code == 0);

    auto r = call({"simulate", "--input", dir / "m.csv", "--m", "50", "--seed", "2", "--stats-out", dir / "s.csv"});
    CHECK(r.code == 0);
    CHECK(line_count(teamkappa::csv::read_text(dir / "s.csv")) == 1 + 44);

    REQUIRE(call({"simulate", "--input", dir / "m.csv", "--k", "7", "--m", "100", "--seed", "4", "--runs-out",
                  dir / "r1.csv", "--stats-out", dir / "s1.csv"})
                .code == 0);
    REQUIRE(call({"simulate", "--input", dir / "m.csv", "--k", "7", "--m", "100", "--seed", "4", "--runs-out",
                  dir / "r2.csv", "--stats-out", dir / "s2.csv"})
                .code == 0);
    const auto runs = teamkappa::csv::read_text(dir / "r1.csv");
    CHECK(line_count(runs) == 1 + 600);
    CHECK(runs == teamkappa::csv::read_text(dir / "r2.csv"));
    CHECK(teamkappa::csv::read_text(dir / "s1.csv") == teamkappa::csv::read_text(dir / "s2.csv"));

    CHECK(call({"simulate", "--input", dir / "m.csv", "--k", "46"}).code == 2);
    CHECK(call({"simulate", "--input", dir / "m.csv", "--m", "0"}).code == 1);
}

TEST_CASE("fit from stats and from runs agree") {
    TempDir dir;
    REQUIRE(call({"synth", "--raters", "20", "--items", "80", "--noise", "0.6", "--seed", "9", "--out", dir / "m.csv"}).code == 0);
    REQUIRE(call({"simulate", "--input", dir / "m.csv", "--m", "200", "--seed", "1", "--runs-out", dir / "r.csv",
                  "--stats-out", dir / "s.csv"})
                .code == 0);
    const auto a = call({"fit", "--stats", dir / "s.csv", "--stage", "S3"});
    const auto b = call({"fit", "--runs", dir / "r.csv", "--stage", "S3"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.starts_with("stage,a,a_status"));

    CHECK(call({"fit", "--stats", dir / "s.csv", "--stage", "S7"}).code == 1);
    CHECK(call({"fit", "--stage", "S0"}).code == 1);
    CHECK(call({"fit", "--stats", dir / "s.csv", "--runs", dir / "r.csv"}).code == 1);
    CHECK(call({"fit", "--stats", dir / "s.csv", "--stage", "S0", "--strict"}).code == 0);
    CHECK(call({"fit", "--stats", dir / "s.csv", "--k", "21"}).code == 2);
}

TEST_CASE("variation and intervals") {
    TempDir dir;
    REQUIRE(call({"synth", "--raters", "12", "--items", "50", "--noise", "0.5", "--seed", "2", "--out", dir / "m.csv"}).code == 0);
    auto r = call({"variation", "--input", dir / "m.csv", "--k", "5", "--m", "20", "--j", "5", "--seed", "3", "--out",
                   dir / "v.csv", "--intervals-out", dir / "i.csv"});
    CHECK(r.code == 0);
    CHECK(r.out.find("dataset_kappa_hat=") != std::string::npos);
    CHECK(line_count(teamkappa::csv::read_text(dir / "v.csv")) == 1 + 4);
    CHECK(line_count(teamkappa::csv::read_text(dir / "i.csv")) == 1 + 12);
    CHECK(call({"variation", "--input", dir / "m.csv", "--k", "13"}).code == 2);

    r = call({"intervals", "--kappa-hat", "0.2193", "--cv", "0.1909"});
    CHECK(r.code == 0);
    CHECK(r.out.find("68.27%,0.177436,0.261164") != std::string::npos);
    CHECK(call({"intervals", "--kappa-hat", "0.2"}).code == 1);
    CHECK(call({"intervals", "--kappa-hat", "0.2", "--variation", dir / "v.csv"}).code == 0);
}

TEST_CASE("preprocess on a surrogate export with the shipped mapping") {
    TempDir dir;
    teamkappa::csv::write_text(dir / "raw.csv", teamkappa::testing::surrogate_survey({}, 11));
    const auto before = teamkappa::csv::read_text(dir / "raw.csv");
    auto r = call({"preprocess", "--raw", dir / "raw.csv", "--mapping", mapping_path(), "--out", dir / "m.csv",
                   "--report", dir / "report.csv"});
    CHECK(r.code == 0);
    CHECK(teamkappa::csv::read_text(dir / "report.csv") ==
          "total_in,removed_non_developers,removed_incomplete,retained\n180,17,118,45\n");
    CHECK(teamkappa::csv::read_text(dir / "raw.csv") == before);
    CHECK(line_count(teamkappa::csv::read_text(dir / "m.csv")) == 1 + 45 * 100);

    CHECK(call({"preprocess", "--raw", dir / "raw.csv"}).code == 1);

    teamkappa::testing::SurrogateCounts clean;
    clean.non_developers = 0;
    clean.incomplete = 0;
    teamkappa::csv::write_text(dir / "clean.csv", teamkappa::testing::surrogate_survey(clean, 4));
    r = call({"preprocess", "--raw", dir / "clean.csv", "--mapping", mapping_path(), "--out", dir / "c.csv", "--json"});
    CHECK(r.code == 0);
    CHECK(r.out.find("\"removed_incomplete\": 0") != std::string::npos);
    CHECK(r.out.find("\"removed_non_developers\": 0") != std::string::npos);
    CHECK(r.out.find("\"retained\": 45") != std::string::npos);
}

}  // TEST_SUITE
