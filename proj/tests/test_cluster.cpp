#include <topiclens/hdbscan.hpp>

#include <gtest/gtest.h>
#include <oracles.hpp>

#include <random>

using namespace topiclens;

namespace {

Matrix<double> to_matrix(const oracle::Points& pts) {
    Matrix<double> m(pts.size(), pts[0].size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t d = 0; d < pts[i].size(); ++d) m(i, d) = pts[i][d];
    return m;
}

oracle::Points uniform(std::size_t n, std::size_t dim, double side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, side);
    oracle::Points pts(n, std::vector<double>(dim));
    for (auto& p : pts)
        for (auto& v : p) v = u(rng);
    return pts;
}

oracle::Points three_blobs(std::vector<int>* truth, std::uint64_t seed = 1) {
    oracle::Points centers{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
    return oracle::gaussian_blobs(centers, 100, 0.05, seed, truth);
}

// Descendant closure per node: does node `c` contain exit cluster `e`?
bool within(const CondensedTree& t, std::size_t e, std::size_t c) {
    for (std::ptrdiff_t v = static_cast<std::ptrdiff_t>(e); v >= 0; v = t.nodes[static_cast<std::size_t>(v)].parent)
        if (static_cast<std::size_t>(v) == c) return true;
    return false;
}

double spec_stability(const CondensedTree& t, std::size_t c) {
    const auto& node = t.nodes[c];
    double s = 0;
    for (const auto& e : t.point_exits)
        if (within(t, e.cluster, c)) s += std::min(e.lambda, node.death_lambda) - node.birth_lambda;
    return s;
}

void check_assignment_invariants(const ClusterAssignment& a) {
    std::set<int> seen;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        int l = a.labels[i];
        ASSERT_GE(l, -1);
        ASSERT_LT(l, static_cast<int>(a.n_clusters));
        if (l >= 0) seen.insert(l);
        ASSERT_GE(a.strengths[i], 0.0);
        ASSERT_LE(a.strengths[i], 1.0);
        ASSERT_EQ(a.strengths[i] == 0.0, l == -1) << i;
    }
    ASSERT_EQ(seen.size(), a.n_clusters);
}

} // namespace

/**********************************
 ********* Core distances *********
 **********************************/

TEST(CoreDistance, LinePoints) {
    Matrix<double> x(4, 1, {0, 1, 2, 10});
    auto core = core_distances(x, 2);
    EXPECT_DOUBLE_EQ(core[0], 1);
    EXPECT_DOUBLE_EQ(core[3], 8);
    auto brute = oracle::core_distances({{0}, {1}, {2}, {10}}, 2);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(core[i], brute[i]);
}

TEST(CoreDistance, SelfIsFirstNeighbour) {
    auto pts = uniform(20, 3, 1, 4);
    for (double c : core_distances(to_matrix(pts), 1)) EXPECT_EQ(c, 0.0);
    Matrix<double> dup(3, 2, {1, 1, 1, 1, 5, 5});
    auto core = core_distances(dup, 2);
    EXPECT_EQ(core[0], 0.0);
    EXPECT_EQ(core[1], 0.0);
}

TEST(CoreDistance, NeedsMorePointsThanMinSamples) {
    Matrix<double> x(3, 1, {0, 1, 2});
    EXPECT_THROW(core_distances(x, 3), InvalidArgument);
}

TEST(CoreDistance, WorkersAgree) {
    auto pts = uniform(150, 4, 1, 5);
    EXPECT_EQ(core_distances(to_matrix(pts), 7), core_distances(to_matrix(pts), 7, Metric::euclidean, 4));
}

TEST(MutualReachability, Definition) {
    EXPECT_EQ(mutual_reachability(1, 1, 8), 8);
    EXPECT_EQ(mutual_reachability(5, 1, 1), 5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 3);
    for (int i = 0; i < 100; ++i) {
        double d = u(rng), a = u(rng), b = u(rng);
        EXPECT_EQ(mutual_reachability(d, a, b), mutual_reachability(d, b, a));
    }
}

/**********************************
 ************** MST ***************
 **********************************/

TEST(Mst, Triangle) {
    Matrix<double> x(3, 1, {0, 1, 3});
    auto edges = build_mst(x, std::vector<double>(3, 0.0));
    ASSERT_EQ(edges.size(), 2u);
    EXPECT_EQ(edges[0], (MstEdge{0, 1, 1.0}));
    EXPECT_EQ(edges[1], (MstEdge{1, 2, 2.0}));
}

TEST(Mst, MatchesBruteForcePrim) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::size_t n = 5 + seed % 46;
        auto pts = uniform(n, 2 + seed % 4, 1, 100 + seed);
        std::size_t ms = 1 + seed % 4;
        auto edges = build_mst(to_matrix(pts), DensityParams{10, ms});
        ASSERT_EQ(edges.size(), n - 1);
        for (std::size_t e = 1; e < edges.size(); ++e) EXPECT_LE(edges[e - 1].weight, edges[e].weight);
        double oracle_total = oracle::prim_total_weight(oracle::mutual_reachability_matrix(pts, ms));
        EXPECT_NEAR(total_weight(edges), oracle_total, 1e-9) << "seed " << seed;
    }
}

TEST(Mst, LexicographicTies) {
    // Unit square: four edges of weight 1; the tree keeps the three smallest pairs.
    Matrix<double> x(4, 2, {0, 0, 1, 0, 0, 1, 1, 1});
    auto edges = build_mst(x, std::vector<double>(4, 0.0));
    EXPECT_EQ(edges[0], (MstEdge{0, 1, 1.0}));
    EXPECT_EQ(edges[1], (MstEdge{0, 2, 1.0}));
    EXPECT_EQ(edges[2], (MstEdge{1, 3, 1.0}));
}

/**********************************
 ********* Condensed tree *********
 **********************************/

TEST(Condense, TwoBlobsTwoChildren) {
    oracle::Points centers{{0, 0}, {50, 0}};
    auto pts = oracle::gaussian_blobs(centers, 10, 1.0, 3);
    auto core = core_distances(to_matrix(pts), 1);
    auto tree = condense_tree(build_mst(to_matrix(pts), core), pts.size(), 5);

    auto sweep = oracle::lambda_sweep_clusters(oracle::mutual_reachability_matrix(pts, 1), 5);
    ASSERT_EQ(tree.nodes.size(), 1 + sweep.size());
    EXPECT_EQ(tree.nodes[0].children.size(), 2u);
    EXPECT_EQ(sweep.size(), 2u);
    for (std::size_t c = 0; c < sweep.size(); ++c) {
        EXPECT_NEAR(tree.nodes[c + 1].birth_lambda, sweep[c].birth_lambda, 1e-12);
        EXPECT_EQ(tree.nodes[c + 1].size, sweep[c].size);
        EXPECT_EQ(tree.nodes[c + 1].parent, 0);
    }
}

TEST(Condense, SingleBlobRootOnly) {
    auto pts = oracle::gaussian_blobs({{0, 0, 0}}, 30, 1.0, 8);
    for (std::size_t mcs : {std::size_t(16), std::size_t(25)}) {
        auto tree = condense_tree(build_mst(to_matrix(pts), core_distances(to_matrix(pts), 3)), pts.size(), mcs);
        auto sweep = oracle::lambda_sweep_clusters(oracle::mutual_reachability_matrix(pts, 3), mcs);
        EXPECT_TRUE(sweep.empty());
        EXPECT_EQ(tree.nodes.size(), 1u);
    }
}

TEST(Condense, MatchesSweepOnRandomInstances) {
    std::size_t splits = 0;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        auto pts = uniform(40, 2, 1, 300 + seed);
        auto tree = condense_tree(build_mst(to_matrix(pts), core_distances(to_matrix(pts), 2)), pts.size(), 4);
        auto sweep = oracle::lambda_sweep_clusters(oracle::mutual_reachability_matrix(pts, 2), 4);
        ASSERT_EQ(tree.nodes.size(), 1 + sweep.size()) << seed;
        std::multiset<std::pair<double, std::size_t>> a, b;
        for (std::size_t c = 1; c < tree.nodes.size(); ++c)
            a.insert({std::round(tree.nodes[c].birth_lambda * 1e9), tree.nodes[c].size});
        for (auto& s : sweep) b.insert({std::round(s.birth_lambda * 1e9), s.size});
        EXPECT_EQ(a, b) << seed;
        splits += sweep.size();
    }
    EXPECT_GT(splits, 15u);
}

TEST(Condense, StabilityInvariants) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto pts = uniform(60, 3, 1, 500 + seed);
        auto tree = condense_tree(build_mst(to_matrix(pts), core_distances(to_matrix(pts), 3)), pts.size(), 5);
        for (const auto& node : tree.nodes) {
            EXPECT_GE(node.stability, 0.0);
            EXPECT_NEAR(node.stability, spec_stability(tree, node.id), 1e-9 * (1 + node.stability));
            if (node.parent >= 0) {
                EXPECT_GE(node.birth_lambda, tree.nodes[static_cast<std::size_t>(node.parent)].birth_lambda);
            }
        }
    }
}

TEST(Condense, DuplicatePointsCapLambda) {
    Matrix<double> x(12, 1, {0, 0, 0, 0, 0, 0, 9, 9, 9, 9, 9, 9});
    auto tree = condense_tree(build_mst(x, core_distances(x, 2)), 12, 3);
    ASSERT_EQ(tree.nodes.size(), 3u);
    for (const auto& node : tree.nodes) EXPECT_TRUE(std::isfinite(node.stability));
    EXPECT_EQ(tree.point_exits[0].lambda, max_lambda(12));
    auto a = select_clusters_eom(tree);
    EXPECT_EQ(a.n_clusters, 2u);
    check_assignment_invariants(a);
}

TEST(Condense, RejectsUnsortedEdges) {
    std::vector<MstEdge> edges{{0, 1, 2.0}, {1, 2, 1.0}};
    EXPECT_THROW(condense_tree(edges, 3, 2), InvalidArgument);
}

TEST(Condense, JsonDump) {
    Matrix<double> x(12, 1, {0, 0.1, 0.2, 0.3, 0.4, 0.5, 9, 9.1, 9.2, 9.3, 9.4, 9.5});
    auto tree = condense_tree(build_mst(x, core_distances(x, 2)), 12, 3);
    auto j = tree_to_json(tree);
    EXPECT_EQ(j["nodes"].size(), tree.nodes.size());
    EXPECT_EQ(j["nodes"][0]["parent"], -1);
    EXPECT_EQ(j["point_exits"].size(), 12u);
}

/**********************************
 *********** Selection ************
 **********************************/

TEST(Eom, TwoBlobsAndAnOutlier) {
    oracle::Points centers{{0, 0}, {20, 0}};
    auto pts = oracle::gaussian_blobs(centers, 15, 1.0, 12);
    pts.push_back({10, 40});
    auto x = to_matrix(pts);
    DensityParams p;
    p.min_cluster_size = 5;
    p.min_samples = 5;
    auto r = cluster_full(x, p);
    const auto& a = r.assignment;
    EXPECT_EQ(a.n_clusters, 2u);
    EXPECT_EQ(a.labels.back(), -1);
    EXPECT_EQ(a.noise_count(), 1u);
    check_assignment_invariants(a);

    // EOM arithmetic by hand: stabilities from the definition, then the selection rule.
    const auto& tree = r.tree;
    std::vector<double> best(tree.nodes.size());
    std::vector<bool> chosen(tree.nodes.size());
    for (std::size_t id = tree.nodes.size(); id-- > 0;) {
        double s = spec_stability(tree, id), below = 0;
        for (auto c : tree.nodes[id].children) below += best[c];
        chosen[id] = id != 0 && s > below;
        best[id] = chosen[id] ? s : below;
    }
    std::vector<std::size_t> expect_nodes;
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        bool ancestor_chosen = false;
        for (auto v = tree.nodes[id].parent; v >= 0; v = tree.nodes[static_cast<std::size_t>(v)].parent)
            ancestor_chosen = ancestor_chosen || chosen[static_cast<std::size_t>(v)];
        if (chosen[id] && !ancestor_chosen) expect_nodes.push_back(id);
    }
    EXPECT_EQ(a.selected_nodes, expect_nodes);
}

TEST(Eom, DensestPointHasFullStrength) {
    std::vector<int> truth;
    auto a = cluster(to_matrix(three_blobs(&truth)), DensityParams{});
    for (std::size_t c = 0; c < a.n_clusters; ++c) {
        double top = 0;
        for (std::size_t i = 0; i < a.labels.size(); ++i)
            if (a.labels[i] == static_cast<int>(c)) top = std::max(top, a.strengths[i]);
        EXPECT_EQ(top, 1.0);
    }
}

TEST(Eom, LeafSelection) {
    oracle::Points centers{{0, 0}, {20, 0}};
    auto pts = oracle::gaussian_blobs(centers, 15, 1.0, 12);
    DensityParams p{5, 5};
    p.selection = Selection::leaf;
    auto a = cluster(to_matrix(pts), p);
    EXPECT_GE(a.n_clusters, 2u);
    check_assignment_invariants(a);
}

TEST(Eom, SingleClusterAllowed) {
    auto pts = oracle::gaussian_blobs({{0, 0}}, 40, 1.0, 2);
    DensityParams p{10, 5};
    EXPECT_EQ(cluster(to_matrix(pts), p).n_clusters, 0u);
    p.allow_single_cluster = true;
    EXPECT_EQ(cluster(to_matrix(pts), p).n_clusters, 1u);
}

/**********************************
 ************ Pipeline ************
 **********************************/

TEST(Cluster, ThreePlantedBlobs) {
    std::vector<int> truth;
    auto a = cluster(to_matrix(three_blobs(&truth)), DensityParams{});
    EXPECT_EQ(a.n_clusters, 3u);
    EXPECT_GE(oracle::adjusted_rand_index(a.labels, truth), 0.99);
    check_assignment_invariants(a);
}

TEST(Cluster, TooFewPointsIsAllNoise) {
    std::vector<std::string> warnings;
    auto saved = log_sink();
    log_sink() = [&](LogLevel, std::string_view m) { warnings.emplace_back(m); };
    auto a = cluster(to_matrix(uniform(5, 2, 1, 1)), DensityParams{15, 10});
    log_sink() = saved;
    EXPECT_EQ(a.n_clusters, 0u);
    EXPECT_EQ(a.noise_count(), 5u);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Cluster, SparseUniformIsMostlyNoise) {
    double noise = 0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        auto a = cluster(to_matrix(uniform(200, 3, 10, 700 + s)), DensityParams{});
        noise += static_cast<double>(a.noise_count()) / 200.0;
        check_assignment_invariants(a);
    }
    EXPECT_GE(noise / seeds, 0.5);
}

TEST(Cluster, Deterministic) {
    auto pts = uniform(120, 2, 1, 9);
    auto a = cluster(to_matrix(pts), DensityParams{5, 3});
    auto b = cluster(to_matrix(pts), DensityParams{5, 3, Metric::euclidean, Selection::eom, false, 4});
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.strengths, b.strengths);
}

TEST(Cluster, MonotoneInMinClusterSize) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        oracle::Points centers{{0, 0}, {3, 0}, {0, 3}, {3, 3}, {8, 8}};
        auto pts = oracle::gaussian_blobs(centers, 12 + seed, 0.6, 900 + seed);
        std::size_t prev = SIZE_MAX;
        for (std::size_t mcs = 2; mcs <= 40; mcs += 2) {
            auto a = cluster(to_matrix(pts), DensityParams{mcs, 5});
            EXPECT_LE(a.n_clusters, prev) << "seed " << seed << " mcs " << mcs;
            prev = a.n_clusters;
        }
    }
}

TEST(Cluster, InvariantsOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto a = cluster(to_matrix(uniform(80, 2, 1, 40 + seed)), DensityParams{4 + seed % 5, 1 + seed % 6});
        check_assignment_invariants(a);
    }
}

TEST(Membership, RowsAreDistributions) {
    std::vector<int> truth;
    auto pts = three_blobs(&truth);
    auto x = to_matrix(pts);
    auto r = cluster_full(x, DensityParams{});
    auto m = membership_vectors(x, r.tree, r.assignment);
    ASSERT_EQ(m.cols(), 3u);
    std::size_t agree = 0, members = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0;
        for (double v : m.row(i)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
        if (r.assignment.labels[i] >= 0) {
            ++members;
            auto row = m.row(i);
            agree += static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) ==
                     static_cast<std::size_t>(r.assignment.labels[i]);
        }
    }
    EXPECT_EQ(agree, members);
    auto ex = cluster_exemplars(r.tree, r.assignment);
    for (std::size_t c = 0; c < ex.size(); ++c) {
        ASSERT_FALSE(ex[c].empty());
        for (auto e : ex[c]) EXPECT_EQ(m(e, c), 1.0);
    }
}
