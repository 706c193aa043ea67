#include "salam/retrieval_kernels.hpp"

#include <algorithm>

namespace salam::kernels {

namespace {

inline double row_dot(const double* row, const double* q, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc += row[j] * q[j];
    return acc;
}

}  // namespace

void score_rows_serial(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                       std::span<double> scores) {
    const std::size_t n = scores.size();
    for (std::size_t i = 0; i < n; ++i) scores[i] = row_dot(rows.data() + i * dim, query.data(), dim);
}

void score_rows_parallel(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                         std::span<double> scores) {
    const auto n = static_cast<std::ptrdiff_t>(scores.size());
    const double* base = rows.data();
    const double* q = query.data();
    double* out = scores.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = row_dot(base + static_cast<std::size_t>(i) * dim, q, dim);
    }
}

std::vector<Hit> select_top(std::span<const double> scores, std::size_t k, double theta) {
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= theta) hits.push_back({i, scores[i]});
    }
    auto before = [](const Hit& a, const Hit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.index < b.index;
    };
    if (k < hits.size()) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), before);
        hits.resize(k);
    } else {
        std::sort(hits.begin(), hits.end(), before);
    }
    return hits;
}

}  // namespace salam::kernels
