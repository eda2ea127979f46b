#ifndef TOPICLENS_KNN_HPP
#define TOPICLENS_KNN_HPP

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace topiclens {

enum class Metric { cosine, euclidean };

inline const char* to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

inline Metric parse_metric(std::string_view s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "euclidean") return Metric::euclidean;
    throw InvalidArgument("unknown metric '" + std::string(s) + "' (expected cosine or euclidean)");
}

template <typename T>
double euclidean_distance(std::span<const T> a, std::span<const T> b) {
    double s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
        s += diff * diff;
    }
    return std::sqrt(s);
}

/** 1 - cos(a, b); a zero vector is at distance 1 from everything. */
template <typename T>
double cosine_distance(std::span<const T> a, std::span<const T> b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        dot += static_cast<double>(a[d]) * static_cast<double>(b[d]);
        na += static_cast<double>(a[d]) * static_cast<double>(a[d]);
        nb += static_cast<double>(b[d]) * static_cast<double>(b[d]);
    }
    if (na == 0 || nb == 0) {
        return 1.0;
    }
    double sim = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::max(0.0, 1.0 - sim);
}

template <typename T>
double distance(Metric metric, std::span<const T> a, std::span<const T> b) {
    return metric == Metric::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

/**
 * Exact k nearest neighbours per point; rows sorted by ascending distance, ties by index.
 */
struct KnnGraph {
    std::size_t k = 0;
    Matrix<std::size_t> neighbors;
    Matrix<double> distances;

    std::size_t size() const { return neighbors.rows(); }
};

/**
 * Brute-force exact k-NN. Self is never its own neighbour.
 */
template <typename T>
KnnGraph build_knn_graph(const Matrix<T>& points, std::size_t k, Metric metric, int workers = 1) {
    const std::size_t n = points.rows();
    if (k < 1) {
        throw InvalidArgument("k must be at least 1");
    }
    if (n <= k) {
        throw InvalidArgument("k-NN graph needs more points than neighbours (n=" + std::to_string(n) +
                              ", k=" + std::to_string(k) + ")");
    }
    KnnGraph g{k, Matrix<std::size_t>(n, k), Matrix<double>(n, k)};
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, std::size_t>> cand(n - 1);
        for (std::size_t i = begin; i < end; ++i) {
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    cand[c++] = {distance(metric, points.row(i), points.row(j)), j};
                }
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
            for (std::size_t r = 0; r < k; ++r) {
                g.distances(i, r) = cand[r].first;
                g.neighbors(i, r) = cand[r].second;
            }
        }
    });
    return g;
}

} // namespace topiclens

#endif
