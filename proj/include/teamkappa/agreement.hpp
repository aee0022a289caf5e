#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "teamkappa/corpus.hpp"

namespace teamkappa {

struct KappaValue {
    double kappa = 0.0;
    double observed_agreement = 0.0;  // mean per-item agreement
    double expected_agreement = 0.0;  // sum of squared category proportions
    // All labels fall in one category; 0/0 resolved as kappa = 1.
    bool degenerate = false;
};

// Fleiss' kappa over all raters of the matrix.
KappaValue fleiss_kappa(const AnnotationMatrix& matrix);

// Fleiss' kappa over the listed raters (distinct row indices, at least 2).
KappaValue fleiss_kappa(const AnnotationMatrix& matrix, std::span<const std::size_t> raters);

// Per-item category counts grown one rater at a time. Every statistic is
// kept as an exact integer, so the resulting kappa depends only on the set
// of raters added and not on the order they were added in.
class AgreementAccumulator {
public:
    explicit AgreementAccumulator(const AnnotationMatrix& matrix);

    void add_rater(std::size_t rater);
    void reset();

    std::size_t rater_count() const noexcept { return raters_; }

    // Requires at least 2 raters.
    KappaValue kappa() const;

private:
    const AnnotationMatrix* matrix_;
    std::vector<std::uint32_t> counts_;   // item-major, category_count per item
    std::vector<std::int64_t> totals_;    // per category
    std::int64_t sum_squares_ = 0;        // sum over items and categories of count^2
    std::size_t raters_ = 0;
};

}  // namespace teamkappa
