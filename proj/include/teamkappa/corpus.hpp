#pragma once

// Annotation matrices: loading raw survey exports, the two respondent
// filters, synthetic cohorts, and the long-format matrix file.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace teamkappa {

// Index into an AnnotationMatrix's category list.
using Label = std::uint8_t;

inline constexpr std::size_t kMaxCategories = 255;

// positive, neutral, negative
const std::vector<std::string>& sentiment_categories();

// Complete rater x item grid of categorical labels. Immutable once built.
class AnnotationMatrix {
public:
    // `labels` is rater-major: labels[r * items.size() + i].
    AnnotationMatrix(std::vector<std::string> raters,
                     std::vector<std::string> items,
                     std::vector<std::string> categories,
                     std::vector<Label> labels);

    std::size_t rater_count() const noexcept { return raters_.size(); }
    std::size_t item_count() const noexcept { return items_.size(); }
    std::size_t category_count() const noexcept { return categories_.size(); }

    const std::vector<std::string>& raters() const noexcept { return raters_; }
    const std::vector<std::string>& items() const noexcept { return items_; }
    const std::vector<std::string>& categories() const noexcept { return categories_; }

    Label label(std::size_t rater, std::size_t item) const { return labels_[rater * items_.size() + item]; }
    std::span<const Label> rater_labels(std::size_t rater) const {
        return std::span<const Label>(labels_).subspan(rater * items_.size(), items_.size());
    }
    const std::string& token(std::size_t rater, std::size_t item) const { return categories_[label(rater, item)]; }

    std::optional<std::size_t> rater_index(std::string_view id) const;

    bool operator==(const AnnotationMatrix&) const = default;

private:
    std::vector<std::string> raters_;
    std::vector<std::string> items_;
    std::vector<std::string> categories_;
    std::vector<Label> labels_;
};

// Describes where the fields used for filtering and labeling live in a raw
// survey export, and how raw answers translate to category tokens.
struct ColumnMapping {
    char delimiter = ',';
    std::string id_col;  // empty: respondents are numbered by row
    std::string computer_scientist_col;
    std::string programming_experience_col;
    std::size_t statement_count = 100;
    std::vector<std::string> label_cols;
    std::vector<std::string> no_values{"No"};
    std::vector<std::string> missing_values;  // the empty string is always missing
    std::vector<std::string> categories = sentiment_categories();
    std::map<std::string, std::string, std::less<>> encodings;  // raw value -> category token

    // key = value lines, '#' comments. See data/zenodo_mapping.cfg.
    static ColumnMapping parse(std::string_view text);
    static ColumnMapping load(const std::filesystem::path& path);

    // Throws DataError when label_cols does not match statement_count,
    // an encoding targets an unknown category, or a category has no encoding.
    void validate() const;

    bool is_missing(std::string_view raw) const;
    bool is_no(std::string_view raw) const;
    std::optional<Label> encode(std::string_view raw) const;
};

struct RawRecord {
    std::string id;
    std::string computer_scientist;
    std::string programming_experience;
    std::vector<std::string> labels;  // untranslated, in label_cols order
};

struct RawSurveyTable {
    ColumnMapping mapping;
    std::vector<std::string> header;
    std::vector<RawRecord> rows;
};

struct PreprocessReport {
    std::size_t total_in = 0;
    std::size_t removed_non_developers = 0;
    std::size_t removed_incomplete = 0;
    std::size_t retained = 0;

    bool operator==(const PreprocessReport&) const = default;
};

struct PreprocessResult {
    AnnotationMatrix matrix;
    PreprocessReport report;
};

RawSurveyTable parse_raw(std::string_view text, const ColumnMapping& mapping);
RawSurveyTable load_raw(const std::filesystem::path& path, const ColumnMapping& mapping);

// Filter 1 drops respondents answering a "no" value to either the computer
// scientist or the programming experience question. Filter 2 then drops
// respondents with any missing label. A respondent failing both is counted
// under filter 1 only.
PreprocessResult preprocess(const RawSurveyTable& raw);

struct SyntheticSpec {
    std::size_t raters = 0;
    std::size_t items = 0;
    std::size_t categories = 3;
    double noise = 0.0;  // probability a rater replaces the truth with a uniform draw
    std::uint64_t seed = 0;
};

// Truth-plus-noise cohort: one uniform ground-truth category per item; each
// rater keeps it with probability 1 - noise, otherwise draws uniformly over
// all categories. Three categories use the sentiment tokens, other counts
// use cat1..catK.
AnnotationMatrix generate_synthetic(const SyntheticSpec& spec);

// Long format: `rater,item,label`, one row per cell, rater-major order.
// A leading `# categories: ...` line is emitted when the category set is not
// the sentiment set.
std::string format_matrix(const AnnotationMatrix& matrix);
AnnotationMatrix parse_matrix(std::string_view text);

void write_matrix(const AnnotationMatrix& matrix, const std::filesystem::path& path);
AnnotationMatrix read_matrix(const std::filesystem::path& path);

}  // namespace teamkappa
