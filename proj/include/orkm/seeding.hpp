#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "core_model.hpp"
#include "rng.hpp"

namespace orkm {

enum class SeedMethod {
    uniform, // K distinct rows, each distinct row equally likely
    d2,      // k-means++ style: probability proportional to squared distance to the chosen set
};

/// Hash of a row's values across all views; identical rows share a fingerprint.
inline std::uint64_t row_fingerprint(const MultiViewDataset& data, std::size_t row) {
    std::uint64_t h = 0x51ed270b27d5f2c1ULL;
    const auto i = static_cast<Eigen::Index>(row);
    for (const auto& x : data.views)
        for (Eigen::Index j = 0; j < x.cols(); ++j) h = hash_double(h, x(i, j));
    return h;
}

inline double row_distance2(const MultiViewDataset& data, std::size_t a, std::size_t b) {
    double d = 0.0;
    for (const auto& x : data.views)
        d += (x.row(static_cast<Eigen::Index>(a)) - x.row(static_cast<Eigen::Index>(b))).squaredNorm();
    return d;
}

struct SeedRows {
    std::vector<std::size_t> rows;
    /// Fewer than K distinct rows were available, so some seeds repeat.
    bool duplicates = false;
};

/**
 * Picks K seed rows among the first `limit` rows.
 *
 * Every draw is a weighted exponential race: row i gets key -log(U_i) / w_i where
 * U_i is drawn from a stream keyed by (seed, tag, draw index, row fingerprint), and
 * the smallest key wins. Because the randomness depends on row content rather than
 * row position, permuting the rows permutes nothing about which values are chosen.
 */
inline SeedRows choose_seed_rows(const MultiViewDataset& data, std::size_t limit, int k, std::uint64_t seed,
                                 std::string_view tag, SeedMethod method) {
    SeedRows out;
    limit = std::min(limit, data.num_rows());
    std::vector<std::uint64_t> fingerprints(limit);
    for (std::size_t i = 0; i < limit; ++i) fingerprints[i] = row_fingerprint(data, i);

    // squared distance of each row to the nearest chosen row
    std::vector<double> nearest(limit, std::numeric_limits<double>::infinity());

    for (int draw = 0; draw < k; ++draw) {
        double best_key = std::numeric_limits<double>::infinity();
        std::size_t best_row = limit;
        for (std::size_t i = 0; i < limit; ++i) {
            double weight = 1.0;
            if (draw > 0) {
                if (nearest[i] <= 0.0) continue;
                if (method == SeedMethod::d2) weight = nearest[i];
            }
            KeyedStream stream(seed, tag, hash_combine(static_cast<std::uint64_t>(draw), fingerprints[i]));
            const double key = -std::log(stream.uniform()) / weight;
            if (key < best_key) {
                best_key = key;
                best_row = i;
            }
        }
        if (best_row == limit) {
            // every row coincides with a chosen seed; repeat the lowest-key row
            out.duplicates = true;
            for (std::size_t i = 0; i < limit; ++i) {
                KeyedStream stream(seed, tag, hash_combine(static_cast<std::uint64_t>(draw), fingerprints[i]));
                const double key = -std::log(stream.uniform());
                if (key < best_key) {
                    best_key = key;
                    best_row = i;
                }
            }
        }
        out.rows.push_back(best_row);
        for (std::size_t i = 0; i < limit; ++i) nearest[i] = std::min(nearest[i], row_distance2(data, i, best_row));
    }
    return out;
}

/// Centers taken from the given rows, one K x J_v matrix per view.
inline std::vector<Matrix> centers_from_rows(const MultiViewDataset& data, const std::vector<std::size_t>& rows) {
    std::vector<Matrix> centers;
    for (const auto& x : data.views) {
        Matrix c(static_cast<Eigen::Index>(rows.size()), x.cols());
        for (std::size_t k = 0; k < rows.size(); ++k)
            c.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
        centers.push_back(std::move(c));
    }
    return centers;
}

} // namespace orkm
