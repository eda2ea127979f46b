#ifndef TOPICLENS_UMAP_HPP
#define TOPICLENS_UMAP_HPP

#include "common.hpp"
#include "embedding.hpp"
#include "knn.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

/**
 * @file umap.hpp
 *
 * @brief Manifold reduction: smooth-kNN calibration, fuzzy union, curve fitting for the
 * low-dimensional kernel, and the negative-sampling layout optimizer.
 */

namespace topiclens {

inline constexpr double min_sigma = 1e-3;

/**
 * Per-point neighbourhood calibration. Memberships are directed: row i holds
 * w(i -> neighbors(i, j)).
 */
struct FuzzySets {
    std::vector<double> rho;
    std::vector<double> sigma;
    Matrix<double> memberships;
};

/**
 * Finds, for each point, rho (smallest positive neighbour distance) and sigma such that
 * sum_j exp(-max(0, d_ij - rho) / sigma) = log2(k), by bisection.
 */
inline FuzzySets smooth_knn(const KnnGraph& g, double tolerance = 1e-7, int max_iter = 256) {
    const std::size_t n = g.size(), k = g.k;
    if (k < 2) {
        throw InvalidArgument("smooth_knn needs k >= 2");
    }
    const double target = std::log2(static_cast<double>(k));
    FuzzySets f{std::vector<double>(n), std::vector<double>(n), Matrix<double>(n, k)};
    std::size_t degenerate = 0;

    for (std::size_t i = 0; i < n; ++i) {
        auto dist = g.distances.row(i);
        double rho = 0;
        for (double d : dist) {
            if (d > 0) {
                rho = d;
                break;
            }
        }
        f.rho[i] = rho;

        auto mass = [&](double sigma) {
            double s = 0;
            for (double d : dist) {
                s += std::exp(-std::max(0.0, d - rho) / sigma);
            }
            return s;
        };

        double sigma;
        if (rho == 0) {
            // Every neighbour coincides with the point.
            sigma = min_sigma;
            ++degenerate;
        } else {
            double lo = 0, hi = std::numeric_limits<double>::infinity();
            sigma = 1.0;
            for (int it = 0; it < max_iter; ++it) {
                double m = mass(sigma);
                if (std::abs(m - target) < tolerance) {
                    break;
                }
                if (m > target) {
                    hi = sigma;
                    sigma = (lo + hi) / 2;
                } else {
                    lo = sigma;
                    sigma = std::isinf(hi) ? sigma * 2 : (lo + hi) / 2;
                }
            }
            if (sigma < min_sigma) {
                sigma = min_sigma;
                ++degenerate;
            }
        }
        f.sigma[i] = sigma;
        for (std::size_t j = 0; j < k; ++j) {
            f.memberships(i, j) = std::exp(-std::max(0.0, dist[j] - rho) / sigma);
        }
    }
    if (degenerate) {
        warn("smooth_knn: " + std::to_string(degenerate) + " point(s) with duplicate neighbours; sigma clamped to " +
             std::to_string(min_sigma));
    }
    return f;
}

/**
 * Symmetric sparse graph in CSR form; columns within a row ascend.
 */
struct FuzzyGraph {
    std::size_t n = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> indices;
    std::vector<double> weights;

    std::size_t edge_count() const { return indices.size(); }

    double weight(std::size_t i, std::size_t j) const {
        auto b = indices.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
        auto e = indices.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
        auto it = std::lower_bound(b, e, j);
        return (it != e && *it == j) ? weights[static_cast<std::size_t>(it - indices.begin())] : 0.0;
    }
};

/**
 * Probabilistic t-conorm: w(i,j) = a + b - a*b with a = w(i->j), b = w(j->i), a missing
 * directed edge counting as 0.
 */
inline FuzzyGraph fuzzy_union(const FuzzySets& f, const KnnGraph& g) {
    const std::size_t n = g.size(), k = g.k;
    if (f.memberships.rows() != n || f.memberships.cols() != k) {
        throw InvalidArgument("fuzzy_union: memberships and k-NN graph shapes differ");
    }
    // Directed edges keyed by (min, max) so each unordered pair is combined once.
    struct Directed {
        std::size_t lo, hi;
        double forward; // lo -> hi
        double backward; // hi -> lo
    };
    std::vector<Directed> edges;
    edges.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t t = g.neighbors(i, j);
            double w = f.memberships(i, j);
            if (t == i || w <= 0) {
                continue;
            }
            if (i < t) {
                edges.push_back({i, t, w, 0.0});
            } else {
                edges.push_back({t, i, 0.0, w});
            }
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Directed& a, const Directed& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
    });

    std::vector<std::tuple<std::size_t, std::size_t, double>> sym;
    for (std::size_t e = 0; e < edges.size();) {
        double fw = 0, bw = 0;
        std::size_t lo = edges[e].lo, hi = edges[e].hi;
        while (e < edges.size() && edges[e].lo == lo && edges[e].hi == hi) {
            fw = std::max(fw, edges[e].forward);
            bw = std::max(bw, edges[e].backward);
            ++e;
        }
        double w = fw + bw - fw * bw;
        if (w > 0) {
            sym.emplace_back(lo, hi, w);
            sym.emplace_back(hi, lo, w);
        }
    }
    std::sort(sym.begin(), sym.end());

    FuzzyGraph out;
    out.n = n;
    out.offsets.assign(n + 1, 0);
    out.indices.reserve(sym.size());
    out.weights.reserve(sym.size());
    for (const auto& [r, c, w] : sym) {
        ++out.offsets[r + 1];
        out.indices.push_back(c);
        out.weights.push_back(w);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.offsets[i + 1] += out.offsets[i];
    }
    return out;
}

/** Writes the graph as `i j w` lines, one per stored (directed) entry. */
inline void write_fuzzy_graph(const FuzzyGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out.precision(17);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
            out << i << ' ' << g.indices[e] << ' ' << g.weights[e] << '\n';
        }
    }
}

/**********************************
 ********* Kernel fitting *********
 **********************************/

struct LayoutCurve {
    double a = 0, b = 0;
    double rmse = 0;
    int iterations = 0;
};

/**
 * Least-squares fit of phi(x) = 1 / (1 + a x^(2b)) to the target curve that is 1 up to
 * min_dist and decays as exp(-(x - min_dist) / spread) beyond, sampled at 300 evenly
 * spaced points on [0, 3 spread]. Levenberg-Marquardt from (1, 1).
 */
inline LayoutCurve fit_layout_params(double min_dist, double spread) {
    if (!(spread > 0)) {
        throw InvalidArgument("spread must be positive");
    }
    if (min_dist < 0 || min_dist >= 4 * spread) {
        throw InvalidArgument("min_dist must lie in [0, 4 * spread)");
    }
    constexpr int grid = 300;
    std::vector<double> xs(grid), ys(grid);
    for (int i = 0; i < grid; ++i) {
        xs[i] = 3.0 * spread * i / (grid - 1);
        ys[i] = xs[i] <= min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto sse = [&](double a, double b) {
        double s = 0;
        for (int i = 0; i < grid; ++i) {
            double r = 1.0 / (1.0 + a * std::pow(xs[i], 2 * b)) - ys[i];
            s += r * r;
        }
        return s;
    };

    double a = 1.0, b = 1.0, lambda = 1e-3;
    double current = sse(a, b);
    bool converged = false;
    int it = 0;
    for (; it < 2000 && !converged; ++it) {
        // Normal equations for the 2-parameter problem.
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
        for (int i = 0; i < grid; ++i) {
            double x = xs[i];
            double p = x > 0 ? std::pow(x, 2 * b) : 0.0;
            double denom = 1.0 + a * p;
            double r = 1.0 / denom - ys[i];
            double da = -p / (denom * denom);
            double db = x > 0 ? -a * p * 2.0 * std::log(x) / (denom * denom) : 0.0;
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            g0 += da * r;
            g1 += db * r;
        }
        if (std::hypot(g0, g1) < 1e-15) {
            converged = true;
            break;
        }
        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            double m00 = jtj00 * (1 + lambda), m11 = jtj11 * (1 + lambda), m01 = jtj01;
            double det = m00 * m11 - m01 * m01;
            if (det == 0 || !std::isfinite(det)) {
                lambda *= 10;
                continue;
            }
            double step_a = -(m11 * g0 - m01 * g1) / det;
            double step_b = -(m00 * g1 - m01 * g0) / det;
            double na = a + step_a, nb = b + step_b;
            double trial = (na > 0 && nb > 0) ? sse(na, nb) : std::numeric_limits<double>::infinity();
            if (trial <= current) {
                double rel = (current - trial) / std::max(current, 1e-300);
                double step = std::hypot(step_a, step_b);
                a = na;
                b = nb;
                current = trial;
                lambda = std::max(lambda / 10, 1e-12);
                accepted = true;
                if (rel < 1e-15 && step < 1e-12 * (1 + std::hypot(a, b))) {
                    converged = true;
                }
            } else {
                lambda *= 10;
            }
        }
        if (!accepted) {
            // No descent direction left at machine precision: a stationary point.
            converged = true;
        }
    }
    if (!converged || !(a > 0) || !(b > 0) || !std::isfinite(current)) {
        throw Error("fit_layout_params did not converge (min_dist=" + std::to_string(min_dist) +
                    ", spread=" + std::to_string(spread) + ", a=" + std::to_string(a) + ", b=" + std::to_string(b) +
                    ", sse=" + std::to_string(current) + ", iterations=" + std::to_string(it) + ")");
    }
    return {a, b, std::sqrt(current / grid), it};
}

/**********************************
 ******* Layout optimization ******
 **********************************/

struct LayoutParams {
    std::size_t n_components = 5;
    double min_dist = 0.0;
    double spread = 1.0;
    /** Kernel parameters; when either is non-positive they are fitted from min_dist/spread. */
    double a = 0, b = 0;
    /** 0 selects 200 epochs above 10,000 points and 500 otherwise. */
    int epochs = 0;
    std::uint64_t seed = 42;
    int neg_samples = 5;
    double learning_rate = 1.0;
    /** 1 is deterministic; more workers update coordinates lock-free and are not. */
    int workers = 1;
};

inline int choose_epochs(int requested, std::size_t n) {
    if (requested > 0) {
        return requested;
    }
    return n > 10000 ? 200 : 500;
}

namespace detail {

inline std::size_t count_components(const FuzzyGraph& g) {
    std::vector<std::size_t> parent(g.n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t comps = g.n;
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
            auto a = find(i), b = find(g.indices[e]);
            if (a != b) {
                parent[a] = b;
                --comps;
            }
        }
    }
    return comps;
}

// Symmetric eigen-decomposition of a small dense matrix by cyclic Jacobi rotations.
inline void jacobi_eigen(std::vector<double>& h, std::size_t m, std::vector<double>& vecs) {
    vecs.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        vecs[i * m + i] = 1.0;
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                off += h[p * m + q] * h[p * m + q];
            }
        }
        if (off < 1e-24) {
            break;
        }
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                double apq = h[p * m + q];
                if (std::abs(apq) < 1e-300) {
                    continue;
                }
                double theta = (h[q * m + q] - h[p * m + p]) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t r = 0; r < m; ++r) {
                    double hrp = h[r * m + p], hrq = h[r * m + q];
                    h[r * m + p] = c * hrp - s * hrq;
                    h[r * m + q] = s * hrp + c * hrq;
                }
                for (std::size_t r = 0; r < m; ++r) {
                    double hpr = h[p * m + r], hqr = h[q * m + r];
                    h[p * m + r] = c * hpr - s * hqr;
                    h[q * m + r] = s * hpr + c * hqr;
                }
                for (std::size_t r = 0; r < m; ++r) {
                    double vrp = vecs[r * m + p], vrq = vecs[r * m + q];
                    vecs[r * m + p] = c * vrp - s * vrq;
                    vecs[r * m + q] = s * vrp + c * vrq;
                }
            }
        }
    }
}

/**
 * Leading non-trivial eigenvectors of the normalized adjacency D^-1/2 W D^-1/2 (the
 * smallest of the normalized Laplacian) by subspace iteration, then a Rayleigh-Ritz
 * rotation. Returns false when the result is unusable.
 */
inline bool spectral_init(const FuzzyGraph& g, std::size_t m, std::mt19937_64& rng, Matrix<float>& out) {
    const std::size_t n = g.n;
    if (n <= m + 1) {
        return false;
    }
    std::vector<double> inv_sqrt_deg(n), trivial(n);
    double tnorm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0;
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
            deg += g.weights[e];
        }
        if (deg <= 0) {
            return false;
        }
        inv_sqrt_deg[i] = 1 / std::sqrt(deg);
        trivial[i] = std::sqrt(deg);
        tnorm += deg;
    }
    tnorm = std::sqrt(tnorm);
    for (auto& v : trivial) {
        v /= tnorm;
    }

    // Shifted operator (I + N) / 2 has spectrum in [0, 1], so power iteration favours the top.
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
                s += g.weights[e] * inv_sqrt_deg[g.indices[e]] * x[g.indices[e]];
            }
            y[i] = 0.5 * (x[i] + inv_sqrt_deg[i] * s);
        }
    };
    auto orthonormalize = [&](std::vector<std::vector<double>>& basis) {
        for (std::size_t c = 0; c < basis.size(); ++c) {
            auto& v = basis[c];
            for (int pass = 0; pass < 2; ++pass) {
                double p = 0;
                for (std::size_t i = 0; i < n; ++i) p += v[i] * trivial[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= p * trivial[i];
                for (std::size_t prev = 0; prev < c; ++prev) {
                    double q = 0;
                    for (std::size_t i = 0; i < n; ++i) q += v[i] * basis[prev][i];
                    for (std::size_t i = 0; i < n; ++i) v[i] -= q * basis[prev][i];
                }
            }
            double norm = 0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-300) {
                return false;
            }
            for (auto& x : v) x /= norm;
        }
        return true;
    };

    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<std::vector<double>> basis(m, std::vector<double>(n));
    for (auto& v : basis) {
        for (auto& x : v) x = unif(rng);
    }
    if (!orthonormalize(basis)) {
        return false;
    }
    std::vector<double> tmp(n);
    const int iterations = static_cast<int>(std::min<std::size_t>(1000, 100 + n / 2));
    for (int it = 0; it < iterations; ++it) {
        for (auto& v : basis) {
            apply(v, tmp);
            v.swap(tmp);
        }
        if (!orthonormalize(basis)) {
            return false;
        }
    }

    std::vector<std::vector<double>> applied(m, std::vector<double>(n));
    for (std::size_t c = 0; c < m; ++c) {
        apply(basis[c], applied[c]);
    }
    std::vector<double> h(m * m), rot;
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < m; ++q) {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += basis[p][i] * applied[q][i];
            h[p * m + q] = s;
        }
    }
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = p + 1; q < m; ++q) {
            double avg = 0.5 * (h[p * m + q] + h[q * m + p]);
            h[p * m + q] = h[q * m + p] = avg;
        }
    }
    jacobi_eigen(h, m, rot);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return h[x * m + x] > h[y * m + y]; });

    out = Matrix<float>(n, m);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t c = 0; c < m; ++c) {
        std::vector<double> col(n, 0.0);
        for (std::size_t p = 0; p < m; ++p) {
            double coef = rot[p * m + order[c]];
            for (std::size_t i = 0; i < n; ++i) col[i] += coef * basis[p][i];
        }
        auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        double lo = *mn, range = *mx - *mn;
        if (!(range > 0) || !std::isfinite(range)) {
            return false;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double scaled = 10.0 * (col[i] - lo) / range;
            out(i, c) = static_cast<float>(scaled + 1e-4 * noise(rng));
        }
    }
    return true;
}

inline float clip_gradient(float v) { return std::clamp(v, -4.0f, 4.0f); }

} // namespace detail

/**
 * Stochastic layout: edges are sampled in proportion to their weight and pull their
 * endpoints together, each positive sample is followed by `neg_samples` uniformly drawn
 * repulsions, per-coordinate gradients are clipped to [-4, 4], and the learning rate
 * decays linearly to zero. Initialization is spectral for a connected graph and uniform
 * on [-10, 10] otherwise.
 */
inline Matrix<float> optimize_layout(const FuzzyGraph& g, const LayoutParams& p) {
    const std::size_t n = g.n, dim = p.n_components;
    if (n == 0 || g.edge_count() == 0) {
        throw InvalidArgument("optimize_layout needs a non-empty graph");
    }
    if (dim == 0) {
        throw InvalidArgument("n_components must be positive");
    }
    double a = p.a, b = p.b;
    if (!(a > 0) || !(b > 0)) {
        auto curve = fit_layout_params(p.min_dist, p.spread);
        a = curve.a;
        b = curve.b;
    }
    const int n_epochs = choose_epochs(p.epochs, n);
    std::mt19937_64 rng(p.seed);

    Matrix<float> emb;
    std::size_t components = detail::count_components(g);
    bool spectral = components == 1 && detail::spectral_init(g, dim, rng, emb);
    if (!spectral) {
        if (components > 1) {
            warn("optimize_layout: fuzzy graph has " + std::to_string(components) +
                 " connected components; components are laid out from a random start");
        }
        emb = Matrix<float>(n, dim);
        std::uniform_real_distribution<float> unif(-10.0f, 10.0f);
        for (auto& v : emb.values()) {
            v = unif(rng);
        }
    }

    // Edge list (both directions), dropping edges too weak to be sampled in the run.
    std::vector<std::size_t> head, tail;
    std::vector<double> eps;
    double max_w = *std::max_element(g.weights.begin(), g.weights.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
            double w = g.weights[e];
            if (w >= max_w / n_epochs) {
                head.push_back(i);
                tail.push_back(g.indices[e]);
                eps.push_back(max_w / w);
            }
        }
    }
    const std::size_t m = head.size();
    const double neg_rate = static_cast<double>(std::max(1, p.neg_samples));
    std::vector<double> next_sample(eps), eps_neg(m), next_neg(m);
    for (std::size_t e = 0; e < m; ++e) {
        eps_neg[e] = eps[e] / neg_rate;
        next_neg[e] = eps_neg[e];
    }

    const float fa = static_cast<float>(a), fb = static_cast<float>(b);
    float* coords = emb.values().data();

    auto fail = [&](int epoch, std::size_t e) {
        throw Error("optimize_layout: non-finite coordinate at epoch " + std::to_string(epoch) + ", edge " +
                    std::to_string(e) + " (" + std::to_string(head[e]) + " -> " + std::to_string(tail[e]) + ")");
    };

    // Processes edges [begin, end) for one epoch; Access abstracts plain vs atomic coordinate reads/writes.
    auto run_edges = [&](auto&& load, auto&& store, std::mt19937_64& gen, int epoch, float alpha, std::size_t begin,
                         std::size_t end) {
        std::vector<float> cur(dim), oth(dim);
        for (std::size_t e = begin; e < end; ++e) {
            if (next_sample[e] > epoch) {
                continue;
            }
            const std::size_t j = head[e], k = tail[e];
            float* cj = coords + j * dim;
            float* ck = coords + k * dim;
            float dist2 = 0;
            for (std::size_t d = 0; d < dim; ++d) {
                cur[d] = load(cj + d);
                oth[d] = load(ck + d);
                float diff = cur[d] - oth[d];
                dist2 += diff * diff;
            }
            float coeff = 0;
            if (dist2 > 0) {
                coeff = -2.0f * fa * fb * std::pow(dist2, fb - 1.0f) / (fa * std::pow(dist2, fb) + 1.0f);
            }
            for (std::size_t d = 0; d < dim; ++d) {
                float grad = detail::clip_gradient(coeff * (cur[d] - oth[d]));
                cur[d] += grad * alpha;
                store(cj + d, cur[d]);
                store(ck + d, load(ck + d) - grad * alpha);
                if (!std::isfinite(cur[d])) {
                    fail(epoch, e);
                }
            }
            next_sample[e] += eps[e];

            auto n_neg = static_cast<std::size_t>((epoch - next_neg[e]) / eps_neg[e]);
            for (std::size_t s = 0; s < n_neg; ++s) {
                std::size_t other = static_cast<std::size_t>(gen() % n);
                if (other == j) {
                    continue;
                }
                float* co = coords + other * dim;
                float nd2 = 0;
                for (std::size_t d = 0; d < dim; ++d) {
                    oth[d] = load(co + d);
                    float diff = cur[d] - oth[d];
                    nd2 += diff * diff;
                }
                if (nd2 <= 0) {
                    continue;
                }
                float rc = 2.0f * fb / ((0.001f + nd2) * (fa * std::pow(nd2, fb) + 1.0f));
                for (std::size_t d = 0; d < dim; ++d) {
                    float grad = detail::clip_gradient(rc * (cur[d] - oth[d]));
                    cur[d] += grad * alpha;
                    store(cj + d, cur[d]);
                    if (!std::isfinite(cur[d])) {
                        fail(epoch, e);
                    }
                }
            }
            next_neg[e] += static_cast<double>(n_neg) * eps_neg[e];
        }
    };

    if (p.workers <= 1) {
        auto load = [](const float* ptr) { return *ptr; };
        auto store = [](float* ptr, float v) { *ptr = v; };
        for (int epoch = 0; epoch < n_epochs; ++epoch) {
            float alpha = static_cast<float>(p.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs));
            run_edges(load, store, rng, epoch, alpha, 0, m);
        }
    } else {
        // Lock-free (Hogwild-style) updates: results depend on thread scheduling.
        auto load = [](float* ptr) { return std::atomic_ref<float>(*ptr).load(std::memory_order_relaxed); };
        auto store = [](float* ptr, float v) { std::atomic_ref<float>(*ptr).store(v, std::memory_order_relaxed); };
        const auto workers = static_cast<std::size_t>(p.workers);
        std::vector<std::mt19937_64> gens;
        for (std::size_t w = 0; w < workers; ++w) {
            gens.emplace_back(p.seed + 0x9E3779B97F4A7C15ULL * (w + 1));
        }
        for (int epoch = 0; epoch < n_epochs; ++epoch) {
            float alpha = static_cast<float>(p.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs));
            std::size_t chunk = (m + workers - 1) / workers;
            std::vector<std::thread> threads;
            std::vector<std::exception_ptr> errors(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                std::size_t begin = w * chunk, end = std::min(m, begin + chunk);
                if (begin >= end) break;
                threads.emplace_back([&, w, begin, end]() {
                    try {
                        run_edges(load, store, gens[w], epoch, alpha, begin, end);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (auto& err : errors) {
                if (err) std::rethrow_exception(err);
            }
        }
    }

    for (float v : emb.values()) {
        if (!std::isfinite(v)) {
            throw Error("optimize_layout: non-finite coordinate after optimization");
        }
    }
    return emb;
}

struct ReduceConfig {
    std::size_t n_neighbors = 15;
    Metric metric = Metric::cosine;
    LayoutParams layout;
};

/**
 * k-NN graph, calibration, union and layout in one call.
 */
template <typename T>
Matrix<float> reduce(const Matrix<T>& points, const ReduceConfig& config) {
    auto knn = build_knn_graph(points, config.n_neighbors, config.metric, config.layout.workers);
    auto sets = smooth_knn(knn);
    auto graph = fuzzy_union(sets, knn);
    return optimize_layout(graph, config.layout);
}

inline Matrix<float> reduce(const EmbeddingMatrix& x, const ReduceConfig& config) {
    return reduce(x.vectors(), config);
}

} // namespace topiclens

#endif
