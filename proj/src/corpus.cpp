#include "teamkappa/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "teamkappa/csv.hpp"
#include "teamkappa/error.hpp"
#include "teamkappa/rng.hpp"

namespace teamkappa {

namespace {

constexpr std::string_view kCategoriesPrefix = "# categories:";

void require_unique(const std::vector<std::string>& ids, std::string_view what) {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw DataError(fmt::format("duplicate {} identifier '{}'", what, id));
    }
}

std::size_t parse_count(std::string_view key, std::string_view value) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw DataError(fmt::format("mapping key '{}' expects a non-negative integer, got '{}'", key, value));
    }
    return out;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(fmt::format("missing mapped column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

const std::vector<std::string>& sentiment_categories() {
    static const std::vector<std::string> categories{"positive", "neutral", "negative"};
    return categories;
}

AnnotationMatrix::AnnotationMatrix(std::vector<std::string> raters,
                                   std::vector<std::string> items,
                                   std::vector<std::string> categories,
                                   std::vector<Label> labels)
    : raters_(std::move(raters)),
      items_(std::move(items)),
      categories_(std::move(categories)),
      labels_(std::move(labels)) {
    if (raters_.size() < 2) throw DataError("annotation matrix needs at least 2 raters");
    if (items_.empty()) throw DataError("annotation matrix needs at least 1 item");
    if (categories_.size() < 2 || categories_.size() > kMaxCategories) {
        throw DataError(fmt::format("annotation matrix needs 2..{} categories, got {}", kMaxCategories,
                                    categories_.size()));
    }
    require_unique(raters_, "rater");
    require_unique(items_, "item");
    require_unique(categories_, "category");
    if (labels_.size() != raters_.size() * items_.size()) {
        throw DataError(fmt::format("incomplete matrix: expected {} labels, got {}", raters_.size() * items_.size(),
                                    labels_.size()));
    }
    for (Label l : labels_) {
        if (l >= categories_.size()) throw DataError(fmt::format("label index {} outside category set", int{l}));
    }
}

std::optional<std::size_t> AnnotationMatrix::rater_index(std::string_view id) const {
    const auto it = std::find(raters_.begin(), raters_.end(), id);
    if (it == raters_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - raters_.begin());
}

// ---------------------------------------------------------------------------
// Column mapping

ColumnMapping ColumnMapping::parse(std::string_view text) {
    ColumnMapping mapping;
    std::string label_prefix;
    std::size_t label_start = 1;
    bool explicit_cols = false;
    std::map<std::string, std::vector<std::string>, std::less<>> encode_lists;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        const auto raw_line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const auto line = csv::trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw DataError(fmt::format("mapping line {}: expected key = value", line_no));
        }
        const std::string key(csv::trim(line.substr(0, eq)));
        const std::string_view value = csv::trim(line.substr(eq + 1));

        if (key == "delimiter") {
            if (value == "tab" || value == "\\t") {
                mapping.delimiter = '\t';
            } else if (value.size() == 1) {
                mapping.delimiter = value.front();
            } else {
                throw DataError(fmt::format("mapping line {}: delimiter must be one character or 'tab'", line_no));
            }
        } else if (key == "id_col") {
            mapping.id_col = value;
        } else if (key == "computer_scientist_col") {
            mapping.computer_scientist_col = value;
        } else if (key == "programming_experience_col") {
            mapping.programming_experience_col = value;
        } else if (key == "statement_count") {
            mapping.statement_count = parse_count(key, value);
        } else if (key == "label_cols") {
            mapping.label_cols = csv::split_list(value);
            explicit_cols = true;
        } else if (key == "label_col_prefix") {
            label_prefix = value;
        } else if (key == "label_col_start") {
            label_start = parse_count(key, value);
        } else if (key == "no_values") {
            mapping.no_values = csv::split_list(value);
        } else if (key == "missing_values") {
            mapping.missing_values = csv::split_list(value);
        } else if (key == "categories") {
            mapping.categories = csv::split_list(value);
        } else if (key.starts_with("encode.")) {
            encode_lists[key.substr(7)] = csv::split_list(value);
        } else {
            throw DataError(fmt::format("mapping line {}: unknown key '{}'", line_no, key));
        }
    }

    if (!explicit_cols && !label_prefix.empty()) {
        mapping.label_cols.clear();
        for (std::size_t i = 0; i < mapping.statement_count; ++i) {
            mapping.label_cols.push_back(fmt::format("{}{}", label_prefix, label_start + i));
        }
    }

    for (const auto& [token, raws] : encode_lists) {
        for (const auto& raw : raws) {
            const auto [it, inserted] = mapping.encodings.emplace(raw, token);
            if (!inserted && it->second != token) {
                throw DataError(fmt::format("raw value '{}' encodes both '{}' and '{}'", raw, it->second, token));
            }
        }
    }
    mapping.validate();
    return mapping;
}

ColumnMapping ColumnMapping::load(const std::filesystem::path& path) {
    return parse(csv::read_text(path));
}

void ColumnMapping::validate() const {
    if (computer_scientist_col.empty()) throw DataError("mapping lacks computer_scientist_col");
    if (programming_experience_col.empty()) throw DataError("mapping lacks programming_experience_col");
    if (label_cols.size() != statement_count) {
        throw DataError(fmt::format("mapping declares {} statements but lists {} label columns", statement_count,
                                    label_cols.size()));
    }
    require_unique(label_cols, "label column");
    if (categories.size() < 2 || categories.size() > kMaxCategories) {
        throw DataError("mapping needs at least 2 categories");
    }
    require_unique(categories, "category");
    std::set<std::string, std::less<>> covered;
    for (const auto& [raw, token] : encodings) {
        if (std::find(categories.begin(), categories.end(), token) == categories.end()) {
            throw DataError(fmt::format("encoding for '{}' targets unknown category '{}'", raw, token));
        }
        covered.insert(token);
    }
    for (const auto& c : categories) {
        if (!covered.contains(c)) throw DataError(fmt::format("category '{}' has no raw encoding", c));
    }
}

bool ColumnMapping::is_missing(std::string_view raw) const {
    const auto v = csv::trim(raw);
    return v.empty() || std::find(missing_values.begin(), missing_values.end(), v) != missing_values.end();
}

bool ColumnMapping::is_no(std::string_view raw) const {
    const auto v = csv::trim(raw);
    return std::find(no_values.begin(), no_values.end(), v) != no_values.end();
}

std::optional<Label> ColumnMapping::encode(std::string_view raw) const {
    const auto it = encodings.find(csv::trim(raw));
    if (it == encodings.end()) return std::nullopt;
    const auto c = std::find(categories.begin(), categories.end(), it->second);
    return static_cast<Label>(c - categories.begin());
}

// ---------------------------------------------------------------------------
// Raw survey ingestion

RawSurveyTable parse_raw(std::string_view text, const ColumnMapping& mapping) {
    mapping.validate();
    auto rows = csv::parse(text, mapping.delimiter);
    if (rows.empty()) throw DataError("raw survey file has no header row");

    RawSurveyTable table;
    table.mapping = mapping;
    table.header = std::move(rows.front().fields);
    for (auto& h : table.header) h = std::string(csv::trim(h));

    const std::optional<std::size_t> id_idx =
        mapping.id_col.empty() ? std::nullopt : std::optional(column_index(table.header, mapping.id_col));
    const auto cs_idx = column_index(table.header, mapping.computer_scientist_col);
    const auto pe_idx = column_index(table.header, mapping.programming_experience_col);
    std::vector<std::size_t> label_idx;
    label_idx.reserve(mapping.label_cols.size());
    for (const auto& col : mapping.label_cols) label_idx.push_back(column_index(table.header, col));

    std::unordered_set<std::string> seen_ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        auto& fields = rows[r].fields;
        auto cell = [&](std::size_t idx) -> std::string { return idx < fields.size() ? fields[idx] : std::string{}; };

        RawRecord record;
        record.id = id_idx ? std::string(csv::trim(cell(*id_idx))) : std::to_string(r);
        if (record.id.empty()) throw DataError(fmt::format("line {}: empty respondent id", rows[r].line));
        if (!seen_ids.insert(record.id).second) {
            throw DataError(fmt::format("duplicate respondent id '{}' at line {}", record.id, rows[r].line));
        }
        record.computer_scientist = cell(cs_idx);
        record.programming_experience = cell(pe_idx);
        record.labels.reserve(label_idx.size());
        for (auto idx : label_idx) record.labels.push_back(cell(idx));
        table.rows.push_back(std::move(record));
    }
    return table;
}

RawSurveyTable load_raw(const std::filesystem::path& path, const ColumnMapping& mapping) {
    return parse_raw(csv::read_text(path), mapping);
}

PreprocessResult preprocess(const RawSurveyTable& raw) {
    const auto& mapping = raw.mapping;
    PreprocessReport report;
    report.total_in = raw.rows.size();

    std::vector<std::string> raters;
    std::vector<Label> labels;
    for (const auto& row : raw.rows) {
        if (mapping.is_no(row.computer_scientist) || mapping.is_no(row.programming_experience)) {
            ++report.removed_non_developers;
            continue;
        }
        if (std::any_of(row.labels.begin(), row.labels.end(), [&](const auto& v) { return mapping.is_missing(v); })) {
            ++report.removed_incomplete;
            continue;
        }
        for (std::size_t i = 0; i < row.labels.size(); ++i) {
            const auto label = mapping.encode(row.labels[i]);
            if (!label) {
                throw DataError(fmt::format("unmappable raw label value '{}' (respondent '{}', column '{}')",
                                            row.labels[i], row.id, mapping.label_cols[i]));
            }
            labels.push_back(*label);
        }
        raters.push_back(row.id);
    }
    report.retained = raters.size();
    if (report.retained < 2) {
        throw DataError(fmt::format("fewer than 2 retained respondents ({} of {})", report.retained, report.total_in));
    }
    return PreprocessResult{AnnotationMatrix(std::move(raters), mapping.label_cols, mapping.categories, std::move(labels)),
                            report};
}

// ---------------------------------------------------------------------------
// Synthetic cohorts

AnnotationMatrix generate_synthetic(const SyntheticSpec& spec) {
    if (spec.raters < 2) throw DomainError("synthetic matrix needs at least 2 raters");
    if (spec.items < 1) throw DomainError("synthetic matrix needs at least 1 item");
    if (spec.categories < 2 || spec.categories > kMaxCategories) {
        throw DomainError(fmt::format("synthetic category count must be in 2..{}", kMaxCategories));
    }
    if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) {
        throw DomainError(fmt::format("noise probability must lie in [0, 1], got {}", spec.noise));
    }

    std::vector<std::string> categories;
    if (spec.categories == 3) {
        categories = sentiment_categories();
    } else {
        for (std::size_t c = 1; c <= spec.categories; ++c) categories.push_back(fmt::format("cat{}", c));
    }
    std::vector<std::string> raters, items;
    for (std::size_t r = 1; r <= spec.raters; ++r) raters.push_back(fmt::format("r{}", r));
    for (std::size_t i = 1; i <= spec.items; ++i) items.push_back(fmt::format("s{}", i));

    Rng rng(spec.seed);
    std::vector<Label> truth(spec.items);
    for (auto& t : truth) t = static_cast<Label>(rng.below(spec.categories));

    std::vector<Label> labels;
    labels.reserve(spec.raters * spec.items);
    for (std::size_t r = 0; r < spec.raters; ++r) {
        for (std::size_t i = 0; i < spec.items; ++i) {
            const bool replace = rng.uniform01() < spec.noise;
            labels.push_back(replace ? static_cast<Label>(rng.below(spec.categories)) : truth[i]);
        }
    }
    return AnnotationMatrix(std::move(raters), std::move(items), std::move(categories), std::move(labels));
}

// ---------------------------------------------------------------------------
// Long-format matrix file

std::string format_matrix(const AnnotationMatrix& matrix) {
    std::string out;
    if (matrix.categories() != sentiment_categories()) {
        out += fmt::format("{} {}\n", kCategoriesPrefix, csv::join(matrix.categories()));
    }
    out += "rater,item,label\n";
    for (std::size_t r = 0; r < matrix.rater_count(); ++r) {
        for (std::size_t i = 0; i < matrix.item_count(); ++i) {
            out += csv::join({matrix.raters()[r], matrix.items()[i], matrix.token(r, i)});
            out.push_back('\n');
        }
    }
    return out;
}

AnnotationMatrix parse_matrix(std::string_view text) {
    std::vector<std::string> categories = sentiment_categories();
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    if (text.starts_with(kCategoriesPrefix)) {
        const auto eol = text.find('\n');
        categories = csv::split_list(text.substr(kCategoriesPrefix.size(), eol - kCategoriesPrefix.size()));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    }

    const auto rows = csv::parse(text);
    if (rows.empty()) throw DataError("matrix file is empty; expected header rater,item,label");
    const auto& header = rows.front().fields;
    if (header.size() != 3 || csv::trim(header[0]) != "rater" || csv::trim(header[1]) != "item" ||
        csv::trim(header[2]) != "label") {
        throw DataError("malformed row at line 1: expected header rater,item,label");
    }

    std::vector<std::string> raters, items;
    std::unordered_map<std::string, std::size_t> rater_pos, item_pos;
    std::unordered_map<std::string, Label> token_index;
    for (std::size_t c = 0; c < categories.size(); ++c) token_index.emplace(categories[c], static_cast<Label>(c));

    struct Cell {
        std::size_t rater, item;
        Label label;
    };
    std::vector<Cell> cells;
    cells.reserve(rows.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != 3) {
            throw DataError(fmt::format("malformed row at line {}: expected 3 fields, got {}", rows[r].line, f.size()));
        }
        const auto it = token_index.find(f[2]);
        if (it == token_index.end()) {
            throw DataError(fmt::format("unknown label token '{}' at line {}", f[2], rows[r].line));
        }
        if (f[0].empty() || f[1].empty()) {
            throw DataError(fmt::format("malformed row at line {}: empty identifier", rows[r].line));
        }
        auto [ri, new_rater] = rater_pos.emplace(f[0], raters.size());
        if (new_rater) raters.push_back(f[0]);
        auto [ii, new_item] = item_pos.emplace(f[1], items.size());
        if (new_item) items.push_back(f[1]);
        cells.push_back({ri->second, ii->second, it->second});
    }

    if (raters.empty()) throw DataError("incomplete matrix: no label rows");
    constexpr Label kUnset = 0xFF;
    std::vector<Label> labels(raters.size() * items.size(), kUnset);
    for (const auto& c : cells) {
        auto& slot = labels[c.rater * items.size() + c.item];
        if (slot != kUnset) {
            throw DataError(fmt::format("duplicate cell for rater '{}' item '{}'", raters[c.rater], items[c.item]));
        }
        slot = c.label;
    }
    for (std::size_t r = 0; r < raters.size(); ++r) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (labels[r * items.size() + i] == kUnset) {
                throw DataError(
                    fmt::format("incomplete matrix: rater '{}' has no label for item '{}'", raters[r], items[i]));
            }
        }
    }
    return AnnotationMatrix(std::move(raters), std::move(items), std::move(categories), std::move(labels));
}

void write_matrix(const AnnotationMatrix& matrix, const std::filesystem::path& path) {
    csv::write_text(path, format_matrix(matrix));
}

AnnotationMatrix read_matrix(const std::filesystem::path& path) {
    return parse_matrix(csv::read_text(path));
}

}  // namespace teamkappa
