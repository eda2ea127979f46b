#ifndef TOPICLENS_HDBSCAN_HPP
#define TOPICLENS_HDBSCAN_HPP

#include "common.hpp"
#include "knn.hpp"

#include "json.hpp"

#include <algorithm>
#include <cfloat>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

/**
 * @file hdbscan.hpp
 *
 * @brief Density clustering over mutual reachability: core distances, a minimum spanning
 * tree, the condensed cluster tree, excess-of-mass selection and soft memberships.
 */

namespace topiclens {

enum class Selection { eom, leaf };

inline Selection parse_selection(std::string_view s) {
    if (s == "eom") return Selection::eom;
    if (s == "leaf") return Selection::leaf;
    throw InvalidArgument("unknown cluster selection '" + std::string(s) + "' (expected eom or leaf)");
}

inline const char* to_string(Selection s) { return s == Selection::eom ? "eom" : "leaf"; }

struct DensityParams {
    std::size_t min_cluster_size = 10;
    std::size_t min_samples = 10;
    Metric metric = Metric::euclidean;
    Selection selection = Selection::eom;
    /** Let the root itself be selected when it beats every split. */
    bool allow_single_cluster = false;
    int workers = 1;

    void validate() const {
        if (min_cluster_size < 2) {
            throw InvalidArgument("min_cluster_size must be at least 2");
        }
        if (min_samples < 1) {
            throw InvalidArgument("min_samples must be at least 1");
        }
    }
};

/**
 * Distance from each point to its min_samples-th nearest neighbour, the point itself
 * being the first (so min_samples = 1 gives 0).
 */
template <typename T>
std::vector<double> core_distances(const Matrix<T>& x, std::size_t min_samples, Metric metric = Metric::euclidean,
                                   int workers = 1) {
    const std::size_t n = x.rows();
    if (min_samples < 1) {
        throw InvalidArgument("min_samples must be at least 1");
    }
    if (n <= min_samples) {
        throw InvalidArgument("core distances need more points than min_samples (n=" + std::to_string(n) +
                              ", min_samples=" + std::to_string(min_samples) + ")");
    }
    std::vector<double> core(n);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> d(n);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                d[j] = j == i ? 0.0 : distance(metric, x.row(i), x.row(j));
            }
            auto kth = d.begin() + static_cast<std::ptrdiff_t>(min_samples - 1);
            std::nth_element(d.begin(), kth, d.end());
            core[i] = *kth;
        }
    });
    return core;
}

inline double mutual_reachability(double d, double core_a, double core_b) { return std::max({core_a, core_b, d}); }

struct MstEdge {
    std::size_t a = 0, b = 0; // a < b
    double weight = 0;

    bool operator==(const MstEdge&) const = default;
};

/**
 * Prim's algorithm on the dense mutual-reachability graph. Equal weights are resolved by
 * the lexicographically smallest (a, b) pair. Returned edges ascend by (weight, a, b).
 */
template <typename T>
std::vector<MstEdge> build_mst(const Matrix<T>& x, const std::vector<double>& core, Metric metric = Metric::euclidean) {
    const std::size_t n = x.rows();
    if (n < 2) {
        throw InvalidArgument("a spanning tree needs at least 2 points");
    }
    if (core.size() != n) {
        throw InvalidArgument("core distance count does not match point count");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, inf);
    std::vector<std::size_t> from(n, 0);

    auto better = [](double w1, std::size_t a1, std::size_t b1, double w2, std::size_t a2, std::size_t b2) {
        if (w1 != w2) return w1 < w2;
        return std::minmax(a1, b1) < std::minmax(a2, b2);
    };

    std::vector<MstEdge> edges;
    edges.reserve(n - 1);
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t added = 1; added < n; ++added) {
        std::size_t next = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            double w = mutual_reachability(distance(metric, x.row(current), x.row(j)), core[current], core[j]);
            if (best[j] == inf || better(w, current, j, best[j], from[j], j)) {
                best[j] = w;
                from[j] = current;
            }
            if (next == n || better(best[j], from[j], j, best[next], from[next], next)) {
                next = j;
            }
        }
        in_tree[next] = true;
        auto [a, b] = std::minmax(from[next], next);
        edges.push_back({a, b, best[next]});
        current = next;
    }
    std::sort(edges.begin(), edges.end(), [](const MstEdge& l, const MstEdge& r) {
        return l.weight != r.weight ? l.weight < r.weight : std::tie(l.a, l.b) < std::tie(r.a, r.b);
    });
    return edges;
}

template <typename T>
std::vector<MstEdge> build_mst(const Matrix<T>& x, const DensityParams& p) {
    return build_mst(x, core_distances(x, p.min_samples, p.metric, p.workers), p.metric);
}

inline double total_weight(const std::vector<MstEdge>& edges) {
    double s = 0;
    for (const auto& e : edges) s += e.weight;
    return s;
}

/**********************************
 ********* Condensed tree *********
 **********************************/

struct TreeNode {
    std::size_t id = 0;
    /** -1 for the root. */
    std::ptrdiff_t parent = -1;
    double birth_lambda = 0;
    double death_lambda = 0;
    std::size_t size = 0;
    double stability = 0;
    std::vector<std::size_t> children;
};

struct PointExit {
    std::size_t cluster = 0;
    double lambda = 0;
};

/**
 * Cluster hierarchy in lambda = 1 / distance. Node 0 is the root; children always have
 * larger ids than their parent.
 */
struct CondensedTree {
    std::vector<TreeNode> nodes;
    std::vector<PointExit> point_exits;

    std::size_t n_points() const { return point_exits.size(); }
};

/** Lambda assigned to zero-length merges; small enough that n of them still sum finitely. */
inline double max_lambda(std::size_t n) { return DBL_MAX / (4.0 * static_cast<double>(n + 1)); }

/**
 * Replays the MST merges as a single-linkage dendrogram, then walks it from the top:
 * at each split, sides smaller than min_cluster_size drop their points out of the
 * current cluster, two large sides become child clusters, and one large side carries
 * the current cluster on.
 */
inline CondensedTree condense_tree(const std::vector<MstEdge>& mst, std::size_t n, std::size_t min_cluster_size) {
    if (n < 2 || mst.size() != n - 1) {
        throw InvalidArgument("condense_tree needs n - 1 spanning tree edges over n >= 2 points");
    }
    if (min_cluster_size < 2) {
        throw InvalidArgument("min_cluster_size must be at least 2");
    }
    for (std::size_t m = 1; m < mst.size(); ++m) {
        if (mst[m].weight < mst[m - 1].weight) {
            throw InvalidArgument("condense_tree needs edges sorted by ascending weight");
        }
    }
    const double cap = max_lambda(n);

    // Dendrogram: node n + m is the m-th merge.
    std::vector<std::size_t> left(n - 1), right(n - 1), size(2 * n - 1, 1), parent(2 * n - 1);
    std::vector<double> height(n - 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (std::size_t m = 0; m < n - 1; ++m) {
        std::size_t ra = find(mst[m].a), rb = find(mst[m].b);
        if (ra == rb) {
            throw InvalidArgument("spanning tree edges contain a cycle");
        }
        std::size_t node = n + m;
        left[m] = std::min(ra, rb);
        right[m] = std::max(ra, rb);
        height[m] = mst[m].weight;
        size[node] = size[ra] + size[rb];
        parent[ra] = parent[rb] = node;
    }

    auto lambda_of = [&](double d) { return d > 0 ? std::min(1.0 / d, cap) : cap; };

    CondensedTree tree;
    tree.point_exits.assign(n, {});
    tree.nodes.push_back({0, -1, 0.0, 0.0, n, 0.0, {}});

    auto drop_points = [&](std::size_t root, std::size_t cluster, double lambda) {
        std::vector<std::size_t> stack{root};
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            if (v < n) {
                tree.point_exits[v] = {cluster, lambda};
            } else {
                stack.push_back(left[v - n]);
                stack.push_back(right[v - n]);
            }
        }
    };

    // label[v] = condensed cluster carried by dendrogram node v.
    std::vector<std::size_t> label(2 * n - 1, 0);
    std::vector<bool> live(2 * n - 1, false);
    live[2 * n - 2] = true;
    for (std::size_t node = 2 * n - 2; node >= n; --node) {
        if (!live[node]) continue;
        std::size_t c = label[node];
        std::size_t l = left[node - n], r = right[node - n];
        double lambda = lambda_of(height[node - n]);
        bool big_l = size[l] >= min_cluster_size, big_r = size[r] >= min_cluster_size;
        if (big_l && big_r) {
            for (std::size_t side : {l, r}) {
                std::size_t id = tree.nodes.size();
                tree.nodes.push_back({id, static_cast<std::ptrdiff_t>(c), lambda, 0.0, size[side], 0.0, {}});
                tree.nodes[c].children.push_back(id);
                label[side] = id;
                live[side] = true;
            }
            tree.nodes[c].death_lambda = lambda;
        } else {
            for (std::size_t side : {l, r}) {
                if (size[side] >= min_cluster_size) {
                    label[side] = c;
                    live[side] = true;
                } else {
                    drop_points(side, c, lambda);
                }
            }
            if (!big_l && !big_r) {
                tree.nodes[c].death_lambda = lambda;
            }
        }
    }

    for (auto& node : tree.nodes) {
        node.stability = 0;
    }
    for (const auto& e : tree.point_exits) {
        auto& c = tree.nodes[e.cluster];
        c.stability += e.lambda - c.birth_lambda;
    }
    for (const auto& node : tree.nodes) {
        if (node.parent >= 0) {
            auto& p = tree.nodes[static_cast<std::size_t>(node.parent)];
            p.stability += static_cast<double>(node.size) * (node.birth_lambda - p.birth_lambda);
        }
    }
    return tree;
}

/** JSON dump: nodes with parent/birth/death/size/stability plus per-point exits. */
inline nlohmann::json tree_to_json(const CondensedTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        nodes.push_back({{"id", n.id},
                         {"parent", n.parent},
                         {"birth_lambda", n.birth_lambda},
                         {"death_lambda", n.death_lambda},
                         {"size", n.size},
                         {"stability", n.stability},
                         {"children", n.children}});
    }
    nlohmann::json exits = nlohmann::json::array();
    for (const auto& e : tree.point_exits) {
        exits.push_back({{"cluster", e.cluster}, {"lambda", e.lambda}});
    }
    return {{"nodes", nodes}, {"point_exits", exits}};
}

inline void write_condensed_tree(const CondensedTree& tree, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << tree_to_json(tree).dump(2) << '\n';
}

/**********************************
 *********** Selection ************
 **********************************/

struct ClusterAssignment {
    /** -1 marks noise. */
    std::vector<int> labels;
    std::vector<double> strengths;
    std::size_t n_clusters = 0;
    /** Tree node behind each label. */
    std::vector<std::size_t> selected_nodes;

    std::size_t noise_count() const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
    }
};

/**
 * Picks flat clusters from the tree. Excess of mass keeps a node iff its stability
 * exceeds the total of its selected descendants; leaf selection keeps every leaf.
 * Points outside all selected clusters are noise. Strength is the exit lambda over the
 * largest exit lambda in the point's cluster.
 */
inline ClusterAssignment select_clusters(const CondensedTree& tree, Selection method = Selection::eom,
                                         bool allow_single_cluster = false) {
    const std::size_t m = tree.nodes.size(), n = tree.n_points();
    std::vector<bool> selected(m, false);

    if (method == Selection::eom) {
        std::vector<double> subtree(m, 0.0);
        for (std::size_t id = m; id-- > 0;) {
            const auto& node = tree.nodes[id];
            double below = 0;
            for (auto c : node.children) below += subtree[c];
            bool eligible = id != 0 || allow_single_cluster;
            if (eligible && node.stability > below) {
                selected[id] = true;
                subtree[id] = node.stability;
                std::vector<std::size_t> stack(node.children.begin(), node.children.end());
                while (!stack.empty()) {
                    auto v = stack.back();
                    stack.pop_back();
                    selected[v] = false;
                    stack.insert(stack.end(), tree.nodes[v].children.begin(), tree.nodes[v].children.end());
                }
            } else {
                subtree[id] = below;
            }
        }
    } else {
        for (std::size_t id = 0; id < m; ++id) {
            selected[id] = tree.nodes[id].children.empty() && (id != 0 || allow_single_cluster);
        }
    }

    ClusterAssignment out;
    std::vector<int> label_of(m, -1);
    for (std::size_t id = 0; id < m; ++id) {
        if (selected[id]) {
            label_of[id] = static_cast<int>(out.n_clusters++);
            out.selected_nodes.push_back(id);
        }
    }
    // Owning selected cluster of each node (itself or nearest selected ancestor).
    std::vector<int> owner(m, -1);
    for (std::size_t id = 0; id < m; ++id) {
        if (selected[id]) {
            owner[id] = label_of[id];
        } else if (tree.nodes[id].parent >= 0) {
            owner[id] = owner[static_cast<std::size_t>(tree.nodes[id].parent)];
        }
    }

    out.labels.assign(n, -1);
    out.strengths.assign(n, 0.0);
    std::vector<double> top(out.n_clusters, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        int l = owner[tree.point_exits[i].cluster];
        out.labels[i] = l;
        if (l >= 0) {
            top[static_cast<std::size_t>(l)] = std::max(top[static_cast<std::size_t>(l)], tree.point_exits[i].lambda);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        int l = out.labels[i];
        if (l < 0) continue;
        double s = tree.point_exits[i].lambda / top[static_cast<std::size_t>(l)];
        out.strengths[i] = std::clamp(s, std::numeric_limits<double>::min(), 1.0);
    }
    return out;
}

inline ClusterAssignment select_clusters_eom(const CondensedTree& tree, bool allow_single_cluster = false) {
    return select_clusters(tree, Selection::eom, allow_single_cluster);
}

/**
 * Exemplars of a selected cluster: in each leaf of its subtree, the points that exit
 * at that leaf's largest lambda.
 */
inline std::vector<std::vector<std::size_t>> cluster_exemplars(const CondensedTree& tree, const ClusterAssignment& a) {
    const std::size_t m = tree.nodes.size();
    std::vector<double> leaf_max(m, 0.0);
    for (const auto& e : tree.point_exits) {
        leaf_max[e.cluster] = std::max(leaf_max[e.cluster], e.lambda);
    }
    std::vector<int> owner(m, -1);
    for (std::size_t c = 0; c < a.selected_nodes.size(); ++c) {
        owner[a.selected_nodes[c]] = static_cast<int>(c);
    }
    for (std::size_t id = 0; id < m; ++id) {
        if (owner[id] < 0 && tree.nodes[id].parent >= 0) {
            owner[id] = owner[static_cast<std::size_t>(tree.nodes[id].parent)];
        }
    }
    std::vector<std::vector<std::size_t>> out(a.n_clusters);
    for (std::size_t i = 0; i < tree.n_points(); ++i) {
        const auto& e = tree.point_exits[i];
        int o = owner[e.cluster];
        if (o >= 0 && tree.nodes[e.cluster].children.empty() && e.lambda == leaf_max[e.cluster]) {
            out[static_cast<std::size_t>(o)].push_back(i);
        }
    }
    return out;
}

/**
 * Soft membership of every point in every selected cluster: inverse distance to the
 * cluster's nearest exemplar, normalized to sum 1 per row. A point coinciding with an
 * exemplar belongs wholly to that cluster (shared evenly on ties).
 */
template <typename T>
Matrix<double> membership_vectors(const Matrix<T>& x, const CondensedTree& tree, const ClusterAssignment& a,
                                  Metric metric = Metric::euclidean) {
    auto exemplars = cluster_exemplars(tree, a);
    const std::size_t n = x.rows(), k = a.n_clusters;
    Matrix<double> out(n, k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> nearest(k, std::numeric_limits<double>::infinity());
        for (std::size_t c = 0; c < k; ++c) {
            for (auto e : exemplars[c]) {
                nearest[c] = std::min(nearest[c], distance(metric, x.row(i), x.row(e)));
            }
        }
        std::size_t zeros = static_cast<std::size_t>(std::count(nearest.begin(), nearest.end(), 0.0));
        double total = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double v = zeros ? (nearest[c] == 0 ? 1.0 : 0.0) : 1.0 / nearest[c];
            out(i, c) = v;
            total += v;
        }
        if (total > 0) {
            for (std::size_t c = 0; c < k; ++c) out(i, c) /= total;
        }
    }
    return out;
}

struct ClusterResult {
    ClusterAssignment assignment;
    CondensedTree tree;
    std::vector<MstEdge> mst;
};

/**
 * Full pipeline. Fewer points than min_cluster_size leaves everything as noise;
 * min_samples is capped at n - 1.
 */
template <typename T>
ClusterResult cluster_full(const Matrix<T>& x, const DensityParams& p) {
    p.validate();
    const std::size_t n = x.rows();
    ClusterResult r;
    if (n < p.min_cluster_size || n < 2) {
        warn("cluster: " + std::to_string(n) + " point(s) is fewer than min_cluster_size=" +
             std::to_string(p.min_cluster_size) + "; every point is noise");
        r.assignment.labels.assign(n, -1);
        r.assignment.strengths.assign(n, 0.0);
        return r;
    }
    std::size_t min_samples = p.min_samples;
    if (min_samples >= n) {
        warn("cluster: min_samples=" + std::to_string(min_samples) + " reduced to " + std::to_string(n - 1));
        min_samples = n - 1;
    }
    auto core = core_distances(x, min_samples, p.metric, p.workers);
    r.mst = build_mst(x, core, p.metric);
    r.tree = condense_tree(r.mst, n, p.min_cluster_size);
    r.assignment = select_clusters(r.tree, p.selection, p.allow_single_cluster);
    return r;
}

template <typename T>
ClusterAssignment cluster(const Matrix<T>& x, const DensityParams& p) {
    return cluster_full(x, p).assignment;
}

} // namespace topiclens

#endif
