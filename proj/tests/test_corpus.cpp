#include <doctest.h>

#include <filesystem>
#include <string>

#include "support/surrogate_survey.hpp"
#include "teamkappa/agreement.hpp"
#include "teamkappa/corpus.hpp"
#include "teamkappa/csv.hpp"
#include "teamkappa/error.hpp"

using namespace teamkappa;

namespace {

ColumnMapping shipped_mapping() {
    return ColumnMapping::load(std::filesystem::path(TEAMKAPPA_DATA_DIR) / "zenodo_mapping.cfg");
}

ColumnMapping small_mapping(std::size_t statements) {
    return ColumnMapping::parse(fmt::format(R"(
id_col = id
computer_scientist_col = cs
programming_experience_col = pe
statement_count = {}
label_col_prefix = s
encode.positive = pos
encode.neutral = neu
encode.negative = neg
)",
                                            statements));
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("shipped mapping names 100 statement columns") {
    const auto m = shipped_mapping();
    CHECK(m.label_cols.size() == 100);
    CHECK(m.label_cols.front() == "statement_1");
    CHECK(m.label_cols.back() == "statement_100");
    CHECK(m.encode("Negative") == Label{2});
    CHECK(m.is_missing("-9"));
    CHECK(m.is_missing("  "));
    CHECK(m.is_no("No"));
    CHECK_FALSE(m.is_no("Yes"));
}

TEST_CASE("mapping rejects bad configurations") {
    CHECK_THROWS_AS(ColumnMapping::parse("computer_scientist_col = a\n"), DataError);
    CHECK_THROWS_WITH_AS(ColumnMapping::parse("bogus = 1"), doctest::Contains("unknown key"), DataError);
    // label column count differs from statement_count
    CHECK_THROWS_AS(ColumnMapping::parse("computer_scientist_col = a\nprogramming_experience_col = b\n"
                                         "statement_count = 3\nlabel_cols = x, y\n"
                                         "encode.positive = p\nencode.neutral = u\nencode.negative = n\n"),
                    DataError);
    // raw value claimed by two categories
    CHECK_THROWS_WITH_AS(ColumnMapping::parse("computer_scientist_col = a\nprogramming_experience_col = b\n"
                                              "statement_count = 1\nlabel_cols = x\n"
                                              "encode.positive = p\nencode.neutral = p\nencode.negative = n\n"),
                         doctest::Contains("encodes both"), DataError);
}

TEST_CASE("load_raw reads every respondent untranslated") {
    const auto text = testing::surrogate_survey({}, 11);
    const auto raw = parse_raw(text, shipped_mapping());
    CHECK(raw.rows.size() == 180);
    CHECK(raw.rows.front().labels.size() == 100);
    const auto& v = raw.rows.front().labels.front();
    CHECK((v == "Positive" || v == "Neutral" || v == "Negative" || v.empty() || v == "-9"));
}

TEST_CASE("load_raw on a header-only file yields no rows") {
    const auto raw = parse_raw(testing::surrogate_header(100), shipped_mapping());
    CHECK(raw.rows.empty());
}

TEST_CASE("load_raw errors") {
    auto header = testing::surrogate_header(100);
    const auto pos = header.find("programming_experience");
    header.replace(pos, std::string("programming_experience").size(), "coding");
    CHECK_THROWS_WITH_AS(parse_raw(header, shipped_mapping()), doctest::Contains("missing mapped column"), DataError);

    const auto m = small_mapping(1);
    CHECK_THROWS_WITH_AS(parse_raw("id,cs,pe,s1\n7,Yes,Yes,pos\n7,Yes,Yes,neg\n", m),
                         doctest::Contains("duplicate respondent id"), DataError);
    CHECK_THROWS_AS(load_raw("/nonexistent/raw.csv", m), DataError);
}

TEST_CASE("preprocess reproduces the 180 -> 17 / 118 / 45 split") {
    const auto raw = parse_raw(testing::surrogate_survey({}, 3), shipped_mapping());
    const auto result = preprocess(raw);
    CHECK(result.report == PreprocessReport{180, 17, 118, 45});
    CHECK(result.matrix.rater_count() == 45);
    CHECK(result.matrix.item_count() == 100);
    CHECK(result.matrix.items().front() == "statement_1");
}

TEST_CASE("preprocess is a no-op on clean developer tables") {
    const auto raw = parse_raw(testing::surrogate_survey({12, 0, 0, 100}, 5), shipped_mapping());
    const auto result = preprocess(raw);
    CHECK(result.report.removed_non_developers == 0);
    CHECK(result.report.removed_incomplete == 0);
    CHECK(result.report.retained == result.report.total_in);
}

TEST_CASE("preprocess errors") {
    const auto m = small_mapping(2);
    // one non-developer, one incomplete, one retained
    const std::string text = "id,cs,pe,s1,s2\n1,No,Yes,pos,neg\n2,Yes,Yes,,neg\n3,Yes,Yes,pos,pos\n";
    CHECK_THROWS_WITH_AS(preprocess(parse_raw(text, m)), doctest::Contains("fewer than 2 retained"), DataError);

    const std::string bad = "id,cs,pe,s1,s2\n1,Yes,Yes,pos,neg\n2,Yes,Yes,maybe,neg\n";
    CHECK_THROWS_WITH_AS(preprocess(parse_raw(bad, m)), doctest::Contains("unmappable raw label value"), DataError);
}

TEST_CASE("a respondent failing both filters counts under filter 1") {
    const auto m = small_mapping(2);
    const std::string text = "id,cs,pe,s1,s2\n1,No,Yes,,neg\n2,Yes,Yes,neu,neg\n3,Yes,Yes,pos,pos\n";
    const auto r = preprocess(parse_raw(text, m)).report;
    CHECK(r == PreprocessReport{3, 1, 0, 2});
}

TEST_CASE("preprocess conservation and idempotence over random surrogates") {
    const auto mapping = shipped_mapping();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const testing::SurrogateCounts counts{2 + rng.below(30), rng.below(20), rng.below(40), 100};
        const auto raw = parse_raw(testing::surrogate_survey(counts, seed), mapping);
        const auto result = preprocess(raw);
        const auto& r = result.report;
        CHECK(r.total_in == r.removed_non_developers + r.removed_incomplete + r.retained);
        CHECK(r.retained == counts.developers_complete);

        RawSurveyTable again = raw;
        std::erase_if(again.rows, [&](const RawRecord& rec) { return !result.matrix.rater_index(rec.id); });
        const auto second = preprocess(again);
        CHECK(second.report.removed_non_developers == 0);
        CHECK(second.report.removed_incomplete == 0);
        CHECK(second.matrix == result.matrix);
    }
}

TEST_CASE("synthetic cohort without noise is unanimous") {
    const auto m = generate_synthetic({5, 50, 3, 0.0, 7});
    for (std::size_t i = 0; i < m.item_count(); ++i) {
        for (std::size_t r = 1; r < m.rater_count(); ++r) CHECK(m.label(r, i) == m.label(0, i));
    }
    const auto k = fleiss_kappa(m);
    CHECK(k.kappa == 1.0);
    CHECK_FALSE(k.degenerate);
}

TEST_CASE("synthetic cohort at full noise has chance-level agreement") {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const double k = fleiss_kappa(generate_synthetic({5, 500, 3, 1.0, seed})).kappa;
        CHECK(std::abs(k) < 0.2);
        sum += k;
    }
    CHECK(std::abs(sum / 100.0) < 0.01);
}

TEST_CASE("synthetic generator is deterministic and validates arguments") {
    CHECK(generate_synthetic({5, 50, 3, 0.4, 7}) == generate_synthetic({5, 50, 3, 0.4, 7}));
    CHECK_FALSE(generate_synthetic({5, 50, 3, 0.4, 7}) == generate_synthetic({5, 50, 3, 0.4, 8}));
    CHECK_THROWS_AS(generate_synthetic({5, 50, 3, 1.2, 7}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({5, 50, 3, -0.1, 7}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({1, 50, 3, 0.1, 7}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({5, 0, 3, 0.1, 7}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({5, 5, 1, 0.1, 7}), DomainError);
    CHECK(generate_synthetic({3, 4, 2, 0.5, 1}).categories() == std::vector<std::string>{"cat1", "cat2"});
}

TEST_CASE("synthetic agreement falls as noise rises") {
    double previous = 2.0;
    for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) sum += fleiss_kappa(generate_synthetic({10, 500, 3, rho, seed})).kappa;
        CHECK(sum / 50.0 < previous);
        previous = sum / 50.0;
    }
}

TEST_CASE("matrix file round trip") {
    const AnnotationMatrix m({"ann", "bob", "cyd"}, {"s1", "s2", "s3", "s,4"}, sentiment_categories(),
                             {0, 1, 2, 0, 1, 1, 2, 2, 0, 0, 0, 1});
    const auto text = format_matrix(m);
    CHECK(text.starts_with("rater,item,label\nann,s1,positive\n"));
    CHECK(parse_matrix(text) == m);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generate_synthetic({2 + seed, 3 + seed, 2 + seed % 4, 0.5, seed});
        CHECK(parse_matrix(format_matrix(s)) == s);
    }

    const auto path = std::filesystem::temp_directory_path() / "teamkappa_roundtrip.csv";
    write_matrix(m, path);
    CHECK(read_matrix(path) == m);
    std::filesystem::remove(path);
}

TEST_CASE("matrix rows may come in any order") {
    const std::string text = "rater,item,label\nb,y,neutral\na,x,positive\nb,x,negative\na,y,neutral\n";
    const auto m = parse_matrix(text);
    CHECK(m.raters() == std::vector<std::string>{"b", "a"});
    CHECK(m.items() == std::vector<std::string>{"y", "x"});
    CHECK(m.token(1, 1) == "positive");
}

TEST_CASE("matrix file errors") {
    CHECK_THROWS_WITH_AS(parse_matrix("rater,item,label\na,x,positive\na,y,neutral\nb,x,negative\n"),
                         doctest::Contains("incomplete matrix"), DataError);
    CHECK_THROWS_WITH_AS(parse_matrix("rater,item,label\na,x,POSITIVE\nb,x,negative\n"),
                         doctest::Contains("unknown label token"), DataError);
    CHECK_THROWS_WITH_AS(parse_matrix("rater,item,label\na,x\nb,x,negative\n"), doctest::Contains("malformed row"),
                         DataError);
    CHECK_THROWS_WITH_AS(parse_matrix("rater,item\n"), doctest::Contains("malformed row"), DataError);
    CHECK_THROWS_WITH_AS(parse_matrix("rater,item,label\na,x,positive\na,x,neutral\nb,x,neutral\n"),
                         doctest::Contains("duplicate cell"), DataError);
    CHECK_THROWS_AS(parse_matrix("rater,item,label\na,x,positive\n"), DataError);  // one rater
}

TEST_CASE("annotation matrix invariants") {
    CHECK_THROWS_AS(AnnotationMatrix({"a", "a"}, {"x"}, sentiment_categories(), {0, 0}), DataError);
    CHECK_THROWS_AS(AnnotationMatrix({"a", "b"}, {"x"}, sentiment_categories(), {0}), DataError);
    CHECK_THROWS_AS(AnnotationMatrix({"a", "b"}, {"x"}, sentiment_categories(), {0, 3}), DataError);
    CHECK_THROWS_AS(AnnotationMatrix({"a", "b"}, {"x"}, {"only"}, {0, 0}), DataError);
}

TEST_CASE("csv reader handles quoting and line endings") {
    const auto rows = csv::parse("a,\"b,c\",\"d\"\"e\"\r\n\r\n1,2,\"multi\nline\"\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].fields == csv::Record{"a", "b,c", "d\"e"});
    CHECK(rows[1].fields == csv::Record{"1", "2", "multi\nline"});
    CHECK(rows[1].line == 3);
    CHECK_THROWS_AS(csv::parse("a,\"open\n"), DataError);
    CHECK(csv::escape("x\"y") == "\"x\"\"y\"");
    CHECK(csv::fixed6(-0.0000001) == "0.000000");
}

}  // TEST_SUITE
