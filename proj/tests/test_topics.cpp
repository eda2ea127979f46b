#include <topiclens/topics.hpp>

#include <gtest/gtest.h>
#include <oracles.hpp>

#include <random>

using namespace topiclens;

namespace {

Corpus docs(const std::vector<std::string>& texts) {
    std::vector<Document> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Document d;
        d.id = "doc" + std::to_string(i);
        d.raw_text = d.clean_text = texts[i];
        out.push_back(d);
    }
    return Corpus(std::move(out));
}

ClusterAssignment labels(const std::vector<int>& l) {
    ClusterAssignment a;
    a.labels = l;
    int top = -1;
    for (int v : l) {
        a.strengths.push_back(v < 0 ? 0.0 : 1.0);
        top = std::max(top, v);
    }
    a.n_clusters = static_cast<std::size_t>(top + 1);
    return a;
}

VocabPolicy open_policy() {
    VocabPolicy p;
    p.stopwords.clear();
    p.max_df = 1.0;
    return p;
}

} // namespace

/**********************************
 ************ Counting ************
 **********************************/

TEST(ClassCounts, WorkedExample) {
    auto corpus = docs({"a a b", "b c"});
    auto [vocab, counts] = build_class_counts(corpus, labels({0, 1}), open_policy());
    ASSERT_EQ(vocab.terms, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(counts.tf.values(), (std::vector<std::int64_t>{2, 1, 0, 0, 1, 1}));
    EXPECT_EQ(counts.f, (std::vector<std::int64_t>{2, 2, 1}));
    EXPECT_DOUBLE_EQ(counts.A, 2.5);
    EXPECT_EQ(counts.class_total_words, (std::vector<std::int64_t>{3, 2}));

    auto w = compute_ctfidf(counts);
    EXPECT_NEAR(w(0, 0), 2 * std::log(2.25), 1e-12);
    EXPECT_NEAR(w(0, 0), 1.622, 5e-4);
    EXPECT_NEAR(w(1, 2), std::log(3.5), 1e-12);
    EXPECT_NEAR(w(1, 2), 1.253, 5e-4);
    EXPECT_EQ(w(0, 2), 0.0);
    EXPECT_EQ(w(1, 0), 0.0);
}

TEST(ClassCounts, ConcatenatesTopicDocuments) {
    auto corpus = docs({"a", "a b", "c", "d d"});
    auto [vocab, counts] = build_class_counts(corpus, labels({0, 0, 1, -1}), open_policy());
    EXPECT_EQ(vocab.terms, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(counts.tf(0, 0), 2);
    EXPECT_EQ(counts.class_total_words, (std::vector<std::int64_t>{3, 1}));
}

TEST(ClassCounts, StopListedTermFiltered) {
    auto corpus = docs({"the medal", "the games"});
    VocabPolicy p = open_policy();
    p.stopwords = {"the"};
    auto [vocab, counts] = build_class_counts(corpus, labels({0, 1}), p);
    EXPECT_FALSE(vocab.find("the"));
    EXPECT_TRUE(vocab.stop_filtered.count("the"));
}

TEST(ClassCounts, DocumentFrequencyCutoff) {
    // "x" in 3 of 4 documents (> 50%), "y" in exactly 2 of 4 (kept).
    auto corpus = docs({"x y", "x y", "x z", "w"});
    VocabPolicy p = open_policy();
    p.max_df = 0.5;
    auto [vocab, counts] = build_class_counts(corpus, labels({0, 0, 1, 1}), p);
    EXPECT_FALSE(vocab.find("x"));
    EXPECT_TRUE(vocab.stop_filtered.count("x"));
    EXPECT_TRUE(vocab.find("y"));
    EXPECT_EQ(vocab.doc_freq[*vocab.find("y")], 2u);
}

TEST(ClassCounts, AllNoiseIsAnError) {
    EXPECT_THROW(build_class_counts(docs({"a", "b"}), labels({-1, -1}), open_policy()), InvalidArgument);
    EXPECT_THROW(build_class_counts(docs({"a", "b"}), labels({0}), open_policy()), InvalidArgument);
}

TEST(Ctfidf, MatchesBruteForceOnRandomCorpora) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t classes = 1 + rng() % 10, terms = 1 + rng() % 50;
        std::vector<std::string> texts;
        std::vector<int> lab;
        std::vector<std::string> class_docs(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            std::size_t ndocs = 1 + rng() % 4;
            for (std::size_t d = 0; d < ndocs; ++d) {
                std::string text;
                std::size_t len = 1 + rng() % 12;
                for (std::size_t i = 0; i < len; ++i) text += "t" + std::to_string(rng() % terms) + " ";
                texts.push_back(text);
                lab.push_back(static_cast<int>(c));
                class_docs[c] += text + " ";
            }
        }
        auto corpus = docs(texts);
        auto [vocab, counts] = build_class_counts(corpus, labels(lab), open_policy());
        auto w = compute_ctfidf(counts);
        auto expect = oracle::ctfidf(class_docs);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t t = 0; t < vocab.size(); ++t) {
                auto it = expect[c].find(vocab.terms[t]);
                double e = it == expect[c].end() ? 0.0 : it->second;
                ASSERT_NEAR(w(c, t), e, 1e-9) << "trial " << trial;
            }
            ASSERT_EQ(expect[c].size(), static_cast<std::size_t>(std::count_if(
                                            w.row(c).begin(), w.row(c).end(), [](double v) { return v > 0; })));
        }
    }
}

TEST(Ctfidf, NormalizedRows) {
    auto corpus = docs({"a a b", "b c"});
    auto [vocab, counts] = build_class_counts(corpus, labels({0, 1}), open_policy());
    auto w = compute_ctfidf(counts, true);
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0;
        for (double v : w.row(c)) s += v * v;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

/**********************************
 ************ Top terms ***********
 **********************************/

TEST(TopTerms, SortedByWeight) {
    Vocabulary v;
    v.terms = {"x", "y", "z"};
    Matrix<double> w(1, 3, {3, 1, 2});
    EXPECT_EQ(top_terms(w, v, 2)[0], (std::vector<std::string>{"x", "z"}));
}

TEST(TopTerms, TiesAlphabeticalAndNoPadding) {
    Vocabulary v;
    v.terms = {"alpha", "beta", "gamma", "delta"};
    std::sort(v.terms.begin(), v.terms.end());
    Matrix<double> w(1, 4, {1, 1, 0, 1});
    EXPECT_EQ(top_terms(w, v, 10)[0], (std::vector<std::string>{"alpha", "beta", "gamma"}));
    EXPECT_THROW(top_terms(w, v, 0), InvalidArgument);
}

/**********************************
 ****** Representative docs *******
 **********************************/

TEST(Representative, SingleAndShortTopics) {
    auto corpus = docs({"a b", "c d", "c e", "c f", "c d e"});
    auto a = labels({0, 1, 1, 1, 1});
    auto [vocab, counts] = build_class_counts(corpus, a, open_policy());
    auto w = compute_ctfidf(counts);
    EXPECT_EQ(representative_documents(0, corpus, a, vocab, w, 10), std::vector<std::size_t>{0});
    EXPECT_EQ(representative_documents(1, corpus, a, vocab, w, 10).size(), 4u);
    EXPECT_EQ(representative_documents(1, corpus, a, vocab, w, 2).size(), 2u);
}

TEST(Representative, RankedByCosineToTopicRow) {
    std::vector<std::string> texts{"medal gold podium", "medal gold ceremony podium", "weather rain", "medal tv",
                                   "dota final", "dota patch"};
    auto corpus = docs(texts);
    auto a = labels({0, 0, 0, 0, 1, 1});
    auto [vocab, counts] = build_class_counts(corpus, a, open_policy());
    auto w = compute_ctfidf(counts);
    auto ranked = representative_documents(0, corpus, a, vocab, w, 10);
    // Oracle: cosine in term-string space.
    std::map<std::string, double> row;
    for (std::size_t t = 0; t < vocab.size(); ++t)
        if (w(0, t) > 0) row[vocab.terms[t]] = w(0, t);
    std::vector<std::pair<double, std::size_t>> expect;
    for (std::size_t i = 0; i < 4; ++i) {
        std::map<std::string, double> v;
        for (auto& tok : text::tokenize(texts[i])) v[tok] += 1;
        expect.push_back({-oracle::cosine(v, row), i});
    }
    std::stable_sort(expect.begin(), expect.end(), [](auto& x, auto& y) { return x.first < y.first; });
    ASSERT_EQ(ranked.size(), 4u);
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(ranked[r], expect[r].second);
    EXPECT_EQ(ranked[0], 1u);
    EXPECT_EQ(ranked.back(), 2u);
}

/**********************************
 *********** Reassignment *********
 **********************************/

namespace {

struct Fixture {
    Corpus corpus;
    ClusterAssignment a;
    Vocabulary vocab;
    Matrix<double> w;
};

// Five topics with disjoint vocabularies plus three outliers.
Fixture reassign_fixture() {
    std::vector<std::string> texts{"alpha beta", "alpha gamma", "delta epsilon", "delta zeta",
                                   "eta theta",  "eta iota",    "kappa lambda",  "kappa mu",
                                   "nu xi",      "nu omicron",
                                   "kappa mu lambda kappa", // only topic 3 vocabulary
                                   "alpha delta delta",     // mixed, topic 1 dominant
                                   "the of and"};           // only stop words
    Fixture f{docs(texts), labels({0, 0, 1, 1, 2, 2, 3, 3, 4, 4, -1, -1, -1}), {}, {}};
    VocabPolicy p;
    p.max_df = 1.0;
    auto [vocab, counts] = build_class_counts(f.corpus, f.a, p);
    f.vocab = vocab;
    f.w = compute_ctfidf(counts);
    return f;
}

} // namespace

TEST(Reassign, CtfidfAssignsEverythingAtZeroThreshold) {
    auto f = reassign_fixture();
    ReassignReport r;
    auto out = reassign_outliers(f.a, f.corpus, f.vocab, f.w, {}, &r);
    EXPECT_EQ(out.labels[10], 3);
    EXPECT_EQ(out.labels[11], 1);
    EXPECT_EQ(out.labels[12], -1);
    EXPECT_EQ(r.noise_before, 3u);
    EXPECT_EQ(r.reassigned, 2u);
    EXPECT_EQ(r.empty_vectors, 1u);
    EXPECT_EQ(r.noise_after, 1u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(out.labels[i], f.a.labels[i]);
    EXPECT_GT(out.strengths[10], 0.0);
    EXPECT_LE(out.strengths[10], 1.0);
}

TEST(Reassign, DistributionsAgreeOnClearCase) {
    auto f = reassign_fixture();
    ReassignParams p;
    p.strategy = ReassignStrategy::distributions;
    auto out = reassign_outliers(f.a, f.corpus, f.vocab, f.w, p);
    EXPECT_EQ(out.labels[10], 3);
    EXPECT_EQ(out.labels[12], -1);
    EXPECT_NEAR(out.strengths[10], 1.0, 1e-12);
}

TEST(Reassign, DistributionWindowsByHand) {
    auto f = reassign_fixture();
    ReassignParams p;
    p.strategy = ReassignStrategy::distributions;
    p.window = 2;
    auto norms = row_norms(f.w);
    auto tokens = text::tokenize("alpha delta delta");
    auto scores = topic_scores(tokens, f.vocab, f.w, norms, p);
    // Windows: [alpha delta], [delta delta].
    auto cos = [&](const std::vector<std::string>& win, std::size_t c) {
        std::map<std::string, double> v, row;
        for (auto& t : win) v[t] += 1;
        for (std::size_t t = 0; t < f.vocab.size(); ++t)
            if (f.w(c, t) > 0) row[f.vocab.terms[t]] = f.w(c, t);
        return oracle::cosine(v, row);
    };
    std::vector<double> expect(5, 0.0);
    double total = 0;
    for (std::size_t c = 0; c < 5; ++c) {
        expect[c] = cos({"alpha", "delta"}, c) + cos({"delta", "delta"}, c);
        total += expect[c];
    }
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(scores[c], expect[c] / total, 1e-12);
}

TEST(Reassign, ThresholdKeepsWeakMatchesAsNoise) {
    auto f = reassign_fixture();
    ReassignParams p;
    p.threshold = 0.99;
    auto out = reassign_outliers(f.a, f.corpus, f.vocab, f.w, p);
    EXPECT_EQ(out.labels[11], -1);
    EXPECT_EQ(out.strengths[11], 0.0);
}

TEST(Reassign, ConservationAndMonotonicity) {
    auto f = reassign_fixture();
    for (auto strategy : {ReassignStrategy::ctfidf, ReassignStrategy::distributions}) {
        for (double th : {0.0, 0.3, 0.6, 1.0}) {
            ReassignParams p;
            p.strategy = strategy;
            p.threshold = th;
            auto out = reassign_outliers(f.a, f.corpus, f.vocab, f.w, p);
            EXPECT_LE(out.noise_count(), f.a.noise_count());
            std::size_t in_topics = 0;
            for (int c = 0; c < 5; ++c) in_topics += std::count(out.labels.begin(), out.labels.end(), c);
            EXPECT_EQ(in_topics + out.noise_count(), f.corpus.size());
            for (std::size_t i = 0; i < out.labels.size(); ++i)
                EXPECT_EQ(out.strengths[i] == 0.0, out.labels[i] == -1);
        }
    }
}

TEST(Reassign, UnknownStrategy) { EXPECT_THROW(parse_reassign_strategy("nearest"), InvalidArgument); }

TEST(Reassign, WorkersAgree) {
    auto f = reassign_fixture();
    ReassignParams p;
    auto one = reassign_outliers(f.a, f.corpus, f.vocab, f.w, p);
    p.workers = 3;
    auto many = reassign_outliers(f.a, f.corpus, f.vocab, f.w, p);
    EXPECT_EQ(one.labels, many.labels);
    EXPECT_EQ(one.strengths, many.strengths);
}

/**********************************
 *********** Topic model **********
 **********************************/

TEST(TopicModel, BuildsRowsWithCounts) {
    auto f = reassign_fixture();
    RepresentationParams p;
    p.vocab.max_df = 1.0;
    auto m = build_topic_model(f.corpus, f.a, p);
    ASSERT_EQ(m.topics.size(), 5u);
    EXPECT_EQ(m.topics[3].count, 3u);
    EXPECT_EQ(m.topics[1].count, 3u);
    EXPECT_EQ(m.total_assigned() + m.assignment.noise_count(), f.corpus.size());
    EXPECT_EQ(m.topics[3].top_terms.front(), "kappa");
    EXPECT_LE(m.topics[3].representative_doc_ids.size(), 10u);
    EXPECT_EQ(m.reassignment.reassigned, 2u);
    for (const auto& t : m.topics) {
        for (std::size_t i = 1; i < t.weights.size(); ++i) EXPECT_GE(t.weights[i - 1].second, t.weights[i].second);
    }
}

TEST(TopicModel, WithoutReassignment) {
    auto f = reassign_fixture();
    RepresentationParams p;
    p.reassign = false;
    p.vocab.max_df = 1.0;
    auto m = build_topic_model(f.corpus, f.a, p);
    EXPECT_EQ(m.assignment.noise_count(), 3u);
    EXPECT_EQ(m.total_assigned(), 10u);
}

/**********************************
 *********** Topic map ************
 **********************************/

TEST(TopicMap, ShapeAndConservation) {
    Matrix<double> w(6, 6, 0.0);
    for (std::size_t i = 0; i < 6; ++i) w(i, i) = 1 + static_cast<double>(i);
    std::vector<std::size_t> sizes{5, 4, 3, 2, 1, 7};
    auto pts = topic_map_coordinates(w, sizes, 3);
    ASSERT_EQ(pts.size(), 6u);
    std::size_t total = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(pts[i].topic_id, static_cast<int>(i));
        EXPECT_TRUE(std::isfinite(pts[i].x) && std::isfinite(pts[i].y));
        total += pts[i].size;
    }
    EXPECT_EQ(total, 22u);
    EXPECT_EQ(topic_map_coordinates(w, sizes, 3), pts);
}

TEST(TopicMap, SharedVocabularyPairIsCloser) {
    // Chain of 12 topics with 50% overlap between neighbours. Topics 0 and 11 are disjoint;
    // topic 12 shares 9 of its 10 terms with topic 5.
    Matrix<double> w(13, 80, 0.0);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t t = 5 * i; t < 5 * i + 10; ++t) w(i, t) = 1.0;
    for (std::size_t t = 26; t < 36; ++t) w(12, t) = 1.0;
    std::vector<std::size_t> sizes(13, 10);
    double far = 0, near = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto pts = topic_map_coordinates(w, sizes, seed);
        far += std::hypot(pts[0].x - pts[11].x, pts[0].y - pts[11].y);
        near += std::hypot(pts[5].x - pts[12].x, pts[5].y - pts[12].y);
    }
    EXPECT_GT(far / 20, near / 20);
}

TEST(TopicMap, DegenerateSizes) {
    Matrix<double> two(2, 3, {1, 0, 0, 0, 1, 0});
    auto p2 = topic_map_coordinates(two, {3, 4});
    EXPECT_NEAR(p2[1].x - p2[0].x, 1.0, 1e-12);

    std::vector<std::string> warnings;
    auto saved = log_sink();
    log_sink() = [&](LogLevel, std::string_view m) { warnings.emplace_back(m); };
    auto p1 = topic_map_coordinates(Matrix<double>(1, 3, {1, 0, 0}), {9});
    log_sink() = saved;
    ASSERT_EQ(p1.size(), 1u);
    EXPECT_EQ(p1[0].x, 0.0);
    EXPECT_EQ(p1[0].size, 9u);
    EXPECT_EQ(warnings.size(), 1u);
}
