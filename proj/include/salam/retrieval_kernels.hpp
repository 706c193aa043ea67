#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace salam::kernels {

// Row-major scan: scores[i] = dot(rows[i*dim .. (i+1)*dim), query).
// Both versions accumulate each row in index order, so their outputs are
// bitwise identical; the serial one is the reference for tests.
void score_rows_serial(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                       std::span<double> scores);
void score_rows_parallel(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                         std::span<double> scores);

struct Hit {
    std::size_t index;
    double similarity;

    bool operator==(const Hit&) const = default;
};

constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// Keeps scores >= theta, orders by score descending then index ascending,
// truncates to k.
std::vector<Hit> select_top(std::span<const double> scores, std::size_t k, double theta);

}  // namespace salam::kernels
