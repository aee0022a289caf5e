#include "teamkappa/agreement.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "teamkappa/error.hpp"

namespace teamkappa {

AgreementAccumulator::AgreementAccumulator(const AnnotationMatrix& matrix)
    : matrix_(&matrix),
      counts_(matrix.item_count() * matrix.category_count(), 0),
      totals_(matrix.category_count(), 0) {}

void AgreementAccumulator::add_rater(std::size_t rater) {
    if (rater >= matrix_->rater_count()) {
        throw DomainError(fmt::format("rater index {} out of range", rater));
    }
    const auto k = matrix_->category_count();
    const auto labels = matrix_->rater_labels(rater);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& c = counts_[i * k + labels[i]];
        // (c + 1)^2 - c^2
        sum_squares_ += 2 * static_cast<std::int64_t>(c) + 1;
        ++c;
        ++totals_[labels[i]];
    }
    ++raters_;
}

void AgreementAccumulator::reset() {
    std::fill(counts_.begin(), counts_.end(), 0);
    std::fill(totals_.begin(), totals_.end(), 0);
    sum_squares_ = 0;
    raters_ = 0;
}

KappaValue AgreementAccumulator::kappa() const {
    if (raters_ < 2) throw DomainError("Fleiss' kappa needs at least 2 raters");
    const auto n = static_cast<std::int64_t>(raters_);
    const auto items = static_cast<std::int64_t>(matrix_->item_count());
    const std::int64_t cells = items * n;

    std::int64_t total_squares = 0;
    for (auto t : totals_) total_squares += t * t;

    KappaValue out;
    if (total_squares == cells * cells) {
        out.kappa = 1.0;
        out.observed_agreement = 1.0;
        out.expected_agreement = 1.0;
        out.degenerate = true;
        return out;
    }
    out.observed_agreement =
        static_cast<double>(sum_squares_ - cells) / static_cast<double>(cells * (n - 1));
    out.expected_agreement =
        static_cast<double>(total_squares) / (static_cast<double>(cells) * static_cast<double>(cells));
    out.kappa = (out.observed_agreement - out.expected_agreement) / (1.0 - out.expected_agreement);
    return out;
}

KappaValue fleiss_kappa(const AnnotationMatrix& matrix) {
    AgreementAccumulator acc(matrix);
    for (std::size_t r = 0; r < matrix.rater_count(); ++r) acc.add_rater(r);
    return acc.kappa();
}

KappaValue fleiss_kappa(const AnnotationMatrix& matrix, std::span<const std::size_t> raters) {
    std::vector<std::size_t> sorted(raters.begin(), raters.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw DomainError("rater subset contains duplicates");
    }
    AgreementAccumulator acc(matrix);
    for (auto r : raters) acc.add_rater(r);
    return acc.kappa();
}

}  // namespace teamkappa
