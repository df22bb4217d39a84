#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

/**
 * @file metrics.hpp
 * @brief External clustering indices: NMI, purity and pair-counting scores.
 *
 * Every index depends only on the contingency table of the two partitions, so
 * all of them are invariant to relabeling either argument.
 */
namespace orkm {

class ContingencyTable {
public:
    ContingencyTable(std::span<const int> pred, std::span<const int> truth) {
        if (pred.size() != truth.size())
            throw ValidationError("label vectors differ in length (" + std::to_string(pred.size()) + " vs " +
                                  std::to_string(truth.size()) + ")");
        if (pred.empty()) throw ValidationError("label vectors are empty");
        const auto p = compact(pred);
        const auto t = compact(truth);
        rows_ = 1 + *std::max_element(p.begin(), p.end());
        cols_ = 1 + *std::max_element(t.begin(), t.end());
        counts_.assign(rows_ * cols_, 0);
        row_sums_.assign(rows_, 0);
        col_sums_.assign(cols_, 0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            ++counts_[p[i] * cols_ + t[i]];
            ++row_sums_[p[i]];
            ++col_sums_[t[i]];
        }
        n_ = pred.size();
    }

    std::size_t predicted_clusters() const { return rows_; }
    std::size_t true_classes() const { return cols_; }
    std::uint64_t n() const { return n_; }
    std::uint64_t count(std::size_t pred, std::size_t truth) const { return counts_[pred * cols_ + truth]; }
    std::uint64_t pred_size(std::size_t pred) const { return row_sums_[pred]; }
    std::uint64_t true_size(std::size_t truth) const { return col_sums_[truth]; }

private:
    // ids in order of first appearance
    static std::vector<std::size_t> compact(std::span<const int> labels) {
        std::map<int, std::size_t> ids;
        std::vector<std::size_t> out;
        out.reserve(labels.size());
        for (int l : labels) out.push_back(ids.try_emplace(l, ids.size()).first->second);
        return out;
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::uint64_t n_ = 0;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> row_sums_;
    std::vector<std::uint64_t> col_sums_;
};

namespace detail {

// Sums in ascending order so equal multisets of terms give bit-identical totals.
inline double sorted_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

inline double entropy_term(std::uint64_t count, std::uint64_t n) {
    const double p = static_cast<double>(count) / static_cast<double>(n);
    return p * std::log(static_cast<double>(n) / static_cast<double>(count));
}

} // namespace detail

/// 2 I(pred; truth) / (H(pred) + H(truth)), natural log; 1 when both partitions are trivial.
inline double nmi(std::span<const int> pred, std::span<const int> truth) {
    const ContingencyTable table(pred, truth);
    const auto n = table.n();
    std::vector<double> h_pred, h_true, mutual;
    for (std::size_t a = 0; a < table.predicted_clusters(); ++a) h_pred.push_back(detail::entropy_term(table.pred_size(a), n));
    for (std::size_t b = 0; b < table.true_classes(); ++b) h_true.push_back(detail::entropy_term(table.true_size(b), n));
    for (std::size_t a = 0; a < table.predicted_clusters(); ++a)
        for (std::size_t b = 0; b < table.true_classes(); ++b) {
            const auto c = table.count(a, b);
            if (c == 0) continue;
            const double ratio = static_cast<double>(n * c) / static_cast<double>(table.pred_size(a) * table.true_size(b));
            mutual.push_back(static_cast<double>(c) / static_cast<double>(n) * std::log(ratio));
        }
    const double denom = detail::sorted_sum(h_pred) + detail::sorted_sum(h_true);
    if (denom <= 0.0) return 1.0;
    return std::clamp(2.0 * detail::sorted_sum(std::move(mutual)) / denom, 0.0, 1.0);
}

/// Fraction of points that belong to the majority true class of their predicted cluster.
inline double purity(std::span<const int> pred, std::span<const int> truth) {
    const ContingencyTable table(pred, truth);
    std::uint64_t majority = 0;
    for (std::size_t a = 0; a < table.predicted_clusters(); ++a) {
        std::uint64_t best = 0;
        for (std::size_t b = 0; b < table.true_classes(); ++b) best = std::max(best, table.count(a, b));
        majority += best;
    }
    return static_cast<double>(majority) / static_cast<double>(table.n());
}

struct PairCounts {
    std::uint64_t true_positive = 0;  // same cluster in both
    std::uint64_t false_positive = 0; // same predicted cluster only
    std::uint64_t false_negative = 0; // same true class only
    std::uint64_t true_negative = 0;
};

struct PairScores {
    double precision = 1.0;
    double recall = 1.0;
    double fscore = 0.0;
    double rand_index = 1.0;
    PairCounts counts;
};

inline PairCounts pair_counts(const ContingencyTable& table) {
    auto choose2 = [](std::uint64_t x) { return x < 2 ? std::uint64_t{0} : x * (x - 1) / 2; };
    std::uint64_t same_both = 0, same_pred = 0, same_true = 0;
    for (std::size_t a = 0; a < table.predicted_clusters(); ++a) {
        same_pred += choose2(table.pred_size(a));
        for (std::size_t b = 0; b < table.true_classes(); ++b) same_both += choose2(table.count(a, b));
    }
    for (std::size_t b = 0; b < table.true_classes(); ++b) same_true += choose2(table.true_size(b));
    PairCounts c;
    c.true_positive = same_both;
    c.false_positive = same_pred - same_both;
    c.false_negative = same_true - same_both;
    c.true_negative = choose2(table.n()) - same_pred - same_true + same_both;
    return c;
}

/**
 * Pair-counting precision, recall, F-score and Rand index over all N(N-1)/2 pairs.
 * A ratio with a zero denominator is 1 (nothing claimed, nothing missed); the F-score
 * is 0 when precision + recall is 0.
 */
inline PairScores pair_scores(std::span<const int> pred, std::span<const int> truth) {
    const ContingencyTable table(pred, truth);
    if (table.n() < 2) throw ValidationError("pair scores need at least two points");
    PairScores s;
    s.counts = pair_counts(table);
    const auto& c = s.counts;
    const auto tp = static_cast<double>(c.true_positive);
    if (c.true_positive + c.false_positive > 0) s.precision = tp / static_cast<double>(c.true_positive + c.false_positive);
    if (c.true_positive + c.false_negative > 0) s.recall = tp / static_cast<double>(c.true_positive + c.false_negative);
    const double sum = s.precision + s.recall;
    s.fscore = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
    const auto total = c.true_positive + c.false_positive + c.false_negative + c.true_negative;
    s.rand_index = static_cast<double>(c.true_positive + c.true_negative) / static_cast<double>(total);
    return s;
}

/**
 * Numeric-code dispatcher kept for the R `INDEX(pred, truth, method)` convention:
 * 0 purity, 1 precision, 2 recall, 3 F-score, 4 Rand index.
 */
inline double index(std::span<const int> pred, std::span<const int> truth, int method) {
    switch (method) {
    case 0: return purity(pred, truth);
    case 1: return pair_scores(pred, truth).precision;
    case 2: return pair_scores(pred, truth).recall;
    case 3: return pair_scores(pred, truth).fscore;
    case 4: return pair_scores(pred, truth).rand_index;
    default:
        throw UsageError("unknown index method " + std::to_string(method) +
                         "; valid codes: 0 purity, 1 precision, 2 recall, 3 fscore, 4 rand index");
    }
}

} // namespace orkm
