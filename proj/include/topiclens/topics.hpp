#ifndef TOPICLENS_TOPICS_HPP
#define TOPICLENS_TOPICS_HPP

#include "common.hpp"
#include "corpus.hpp"
#include "hdbscan.hpp"
#include "text.hpp"
#include "umap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file topics.hpp
 *
 * @brief Topic representation: vocabulary, class term counts, c-TF-IDF weights, top
 * terms, representative documents, outlier reassignment and 2-D topic map coordinates.
 */

namespace topiclens {

struct VocabPolicy {
    std::set<std::string> stopwords = english_stopwords();
    /** Terms in more than this fraction of all documents are dropped. */
    double max_df = 0.5;
};

struct Vocabulary {
    /** Sorted bytewise; the index of a term is its column. */
    std::vector<std::string> terms;
    std::vector<std::size_t> doc_freq;
    std::set<std::string> stop_filtered;

    std::size_t size() const { return terms.size(); }

    std::optional<std::size_t> find(std::string_view term) const {
        auto it = std::lower_bound(terms.begin(), terms.end(), term);
        if (it != terms.end() && *it == term) {
            return static_cast<std::size_t>(it - terms.begin());
        }
        return std::nullopt;
    }
};

struct ClassTermCounts {
    /** classes x terms. */
    Matrix<std::int64_t> tf;
    std::vector<std::int64_t> class_total_words;
    /** Average words per class. */
    double A = 0;
    /** Total frequency of each term across classes. */
    std::vector<std::int64_t> f;
};

/** Sparse term-count vector in vocabulary space, ascending by term index. */
using TermVector = std::vector<std::pair<std::size_t, double>>;

inline TermVector term_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::map<std::size_t, double> counts;
    for (const auto& t : tokens) {
        if (auto idx = vocab.find(t)) {
            counts[*idx] += 1;
        }
    }
    return {counts.begin(), counts.end()};
}

/**
 * Concatenates each topic's documents into one class document and counts terms.
 * Terms are kept if not stop-listed and in at most max_df of all documents; only terms
 * occurring in some topic enter the vocabulary. Noise documents are excluded from counts.
 */
inline std::pair<Vocabulary, ClassTermCounts> build_class_counts(const Corpus& corpus, const ClusterAssignment& a,
                                                                 const VocabPolicy& policy = {}) {
    if (a.labels.size() != corpus.size()) {
        throw InvalidArgument("assignment has " + std::to_string(a.labels.size()) + " labels for " +
                              std::to_string(corpus.size()) + " documents");
    }
    if (a.n_clusters == 0 || a.noise_count() == corpus.size()) {
        throw InvalidArgument("no non-noise documents to represent");
    }
    if (!(policy.max_df > 0) || policy.max_df > 1) {
        throw InvalidArgument("max_df must lie in (0, 1]");
    }
    const std::size_t n = corpus.size(), k = a.n_clusters;

    std::map<std::string, std::size_t> df;
    std::set<std::string> in_topics;
    std::vector<std::vector<std::string>> tokens(n);
    for (std::size_t i = 0; i < n; ++i) {
        tokens[i] = text::tokenize(corpus[i].clean_text);
        std::set<std::string> uniq(tokens[i].begin(), tokens[i].end());
        for (const auto& t : uniq) {
            ++df[t];
            if (a.labels[i] >= 0) in_topics.insert(t);
        }
    }

    Vocabulary vocab;
    for (const auto& [term, count] : df) {
        bool listed = policy.stopwords.count(term) > 0;
        bool frequent = static_cast<double>(count) > policy.max_df * static_cast<double>(n);
        if (listed || frequent) {
            vocab.stop_filtered.insert(term);
        } else if (in_topics.count(term)) {
            vocab.terms.push_back(term);
            vocab.doc_freq.push_back(count);
        }
    }

    ClassTermCounts counts;
    counts.tf = Matrix<std::int64_t>(k, vocab.size(), 0);
    counts.class_total_words.assign(k, 0);
    counts.f.assign(vocab.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (a.labels[i] < 0) continue;
        auto c = static_cast<std::size_t>(a.labels[i]);
        for (const auto& t : tokens[i]) {
            if (auto idx = vocab.find(t)) {
                ++counts.tf(c, *idx);
                ++counts.class_total_words[c];
                ++counts.f[*idx];
            }
        }
    }
    std::int64_t words = 0;
    for (auto w : counts.class_total_words) words += w;
    counts.A = static_cast<double>(words) / static_cast<double>(k);
    return {std::move(vocab), std::move(counts)};
}

/** W(t, c) = tf(t, c) * ln(1 + A / f(t)); rows optionally L2-normalized. */
inline Matrix<double> compute_ctfidf(const ClassTermCounts& counts, bool l2_normalize = false) {
    const std::size_t k = counts.tf.rows(), t = counts.tf.cols();
    Matrix<double> w(k, t, 0.0);
    for (std::size_t term = 0; term < t; ++term) {
        if (counts.f[term] == 0) continue;
        double idf = std::log(1.0 + counts.A / static_cast<double>(counts.f[term]));
        for (std::size_t c = 0; c < k; ++c) {
            w(c, term) = static_cast<double>(counts.tf(c, term)) * idf;
        }
    }
    if (l2_normalize) {
        for (std::size_t c = 0; c < k; ++c) {
            double norm = 0;
            for (double v : w.row(c)) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 0) {
                for (double& v : w.row(c)) v /= norm;
            }
        }
    }
    return w;
}

/** The n highest positive weights per row, descending, ties alphabetical. */
inline std::vector<std::vector<std::pair<std::string, double>>> top_terms_weighted(const Matrix<double>& w,
                                                                                  const Vocabulary& vocab,
                                                                                  std::size_t n = 10) {
    if (n < 1) {
        throw InvalidArgument("top_terms needs n >= 1");
    }
    std::vector<std::vector<std::pair<std::string, double>>> out(w.rows());
    for (std::size_t c = 0; c < w.rows(); ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t t = 0; t < w.cols(); ++t) {
            if (w(c, t) > 0) idx.push_back(t);
        }
        std::size_t keep = std::min(n, idx.size());
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                          [&](std::size_t x, std::size_t y) { return w(c, x) != w(c, y) ? w(c, x) > w(c, y) : x < y; });
        for (std::size_t r = 0; r < keep; ++r) {
            out[c].emplace_back(vocab.terms[idx[r]], w(c, idx[r]));
        }
    }
    return out;
}

inline std::vector<std::vector<std::string>> top_terms(const Matrix<double>& w, const Vocabulary& vocab,
                                                       std::size_t n = 10) {
    std::vector<std::vector<std::string>> out;
    for (auto& row : top_terms_weighted(w, vocab, n)) {
        std::vector<std::string> terms;
        for (auto& [term, _] : row) terms.push_back(term);
        out.push_back(std::move(terms));
    }
    return out;
}

inline double cosine_to_row(const TermVector& v, const Matrix<double>& w, std::size_t row, double row_norm) {
    double dot = 0, norm = 0;
    for (const auto& [t, x] : v) {
        dot += x * w(row, t);
        norm += x * x;
    }
    if (norm == 0 || row_norm == 0) {
        return 0;
    }
    return dot / (std::sqrt(norm) * row_norm);
}

inline std::vector<double> row_norms(const Matrix<double>& w) {
    std::vector<double> out(w.rows());
    for (std::size_t c = 0; c < w.rows(); ++c) {
        double s = 0;
        for (double v : w.row(c)) s += v * v;
        out[c] = std::sqrt(s);
    }
    return out;
}

/**
 * Members of `topic` ranked by cosine between their term counts and the topic's weight
 * row; at most nr_docs corpus indices, ties in corpus order.
 */
inline std::vector<std::size_t> representative_documents(int topic, const Corpus& corpus, const ClusterAssignment& a,
                                                         const Vocabulary& vocab, const Matrix<double>& w,
                                                         std::size_t nr_docs = 10) {
    auto norms = row_norms(w);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (a.labels[i] != topic) continue;
        auto v = term_vector(text::tokenize(corpus[i].clean_text), vocab);
        scored.push_back({cosine_to_row(v, w, static_cast<std::size_t>(topic), norms[static_cast<std::size_t>(topic)]), i});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < std::min(nr_docs, scored.size()); ++r) {
        out.push_back(scored[r].second);
    }
    return out;
}

/**********************************
 ******* Outlier reassignment *****
 **********************************/

enum class ReassignStrategy { ctfidf, distributions };

inline ReassignStrategy parse_reassign_strategy(std::string_view s) {
    if (s == "ctfidf" || s == "c-tf-idf") return ReassignStrategy::ctfidf;
    if (s == "distributions") return ReassignStrategy::distributions;
    throw InvalidArgument("unknown outlier strategy '" + std::string(s) + "' (expected ctfidf or distributions)");
}

inline const char* to_string(ReassignStrategy s) {
    return s == ReassignStrategy::ctfidf ? "ctfidf" : "distributions";
}

struct ReassignParams {
    ReassignStrategy strategy = ReassignStrategy::ctfidf;
    double threshold = 0.0;
    std::size_t window = 4;
    std::size_t stride = 1;
    int workers = 1;
};

struct ReassignReport {
    std::size_t noise_before = 0;
    std::size_t reassigned = 0;
    /** Noise documents with no in-vocabulary term. */
    std::size_t empty_vectors = 0;
    std::size_t noise_after = 0;
};

/**
 * Per-topic scores for one document. ctfidf: cosine of its term vector to every row.
 * distributions: cosine of each token window to every row, summed and normalized.
 */
inline std::vector<double> topic_scores(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                        const Matrix<double>& w, const std::vector<double>& norms,
                                        const ReassignParams& p) {
    const std::size_t k = w.rows();
    std::vector<double> scores(k, 0.0);
    if (p.strategy == ReassignStrategy::ctfidf) {
        auto v = term_vector(tokens, vocab);
        for (std::size_t c = 0; c < k; ++c) scores[c] = cosine_to_row(v, w, c, norms[c]);
        return scores;
    }
    std::vector<std::string> kept;
    for (const auto& t : tokens) {
        if (vocab.find(t)) kept.push_back(t);
    }
    if (kept.empty()) {
        return scores;
    }
    const std::size_t len = std::min(p.window, kept.size());
    for (std::size_t start = 0; start + len <= kept.size(); start += p.stride) {
        std::vector<std::string> win(kept.begin() + static_cast<std::ptrdiff_t>(start),
                                     kept.begin() + static_cast<std::ptrdiff_t>(start + len));
        auto v = term_vector(win, vocab);
        for (std::size_t c = 0; c < k; ++c) scores[c] += cosine_to_row(v, w, c, norms[c]);
    }
    double total = 0;
    for (double s : scores) total += s;
    if (total > 0) {
        for (double& s : scores) s /= total;
    }
    return scores;
}

/**
 * Moves noise documents to their best-scoring topic when the score is positive and at
 * least `threshold`; strength becomes that score. Labels of non-noise documents never
 * change. Ties go to the lowest topic id.
 */
inline ClusterAssignment reassign_outliers(const ClusterAssignment& a, const Corpus& corpus, const Vocabulary& vocab,
                                           const Matrix<double>& w, const ReassignParams& p = {},
                                           ReassignReport* report = nullptr) {
    if (a.n_clusters == 0 || w.rows() != a.n_clusters) {
        throw InvalidArgument("reassign_outliers needs at least one topic and one weight row per topic");
    }
    if (p.window == 0 || p.stride == 0) {
        throw InvalidArgument("window and stride must be positive");
    }
    auto norms = row_norms(w);
    ClusterAssignment out = a;
    std::vector<std::size_t> noise;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (a.labels[i] < 0) noise.push_back(i);
    }
    std::vector<int> best(noise.size(), -1);
    std::vector<double> best_score(noise.size(), 0.0);
    std::vector<char> empty(noise.size(), 0);
    parallel_for(noise.size(), p.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            auto tokens = text::tokenize(corpus[noise[j]].clean_text);
            bool any = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return vocab.find(t).has_value(); });
            if (!any) {
                empty[j] = 1;
                continue;
            }
            auto scores = topic_scores(tokens, vocab, w, norms, p);
            auto it = std::max_element(scores.begin(), scores.end());
            if (*it > 0 && *it >= p.threshold) {
                best[j] = static_cast<int>(it - scores.begin());
                best_score[j] = std::min(*it, 1.0);
            }
        }
    });
    ReassignReport r;
    r.noise_before = noise.size();
    for (std::size_t j = 0; j < noise.size(); ++j) {
        r.empty_vectors += empty[j];
        if (best[j] >= 0) {
            out.labels[noise[j]] = best[j];
            out.strengths[noise[j]] = best_score[j];
            ++r.reassigned;
        }
    }
    r.noise_after = r.noise_before - r.reassigned;
    if (r.empty_vectors) {
        warn(std::to_string(r.empty_vectors) + " outlier document(s) have no vocabulary terms and stay unassigned");
    }
    if (report) *report = r;
    return out;
}

/**********************************
 *********** Topic model **********
 **********************************/

struct Topic {
    int id = 0;
    std::size_t count = 0;
    /** Positive weights, descending (ties alphabetical). */
    std::vector<std::pair<std::string, double>> weights;
    std::vector<std::string> top_terms;
    std::vector<std::string> representative_doc_ids;
    std::optional<std::string> label;
};

struct RepresentationParams {
    std::size_t n_terms = 10;
    std::size_t nr_docs = 10;
    VocabPolicy vocab;
    bool reassign = true;
    ReassignParams reassignment;
};

struct TopicModel {
    std::vector<Topic> topics;
    Vocabulary vocab;
    ClassTermCounts counts;
    Matrix<double> weights;
    /** Final assignment (after reassignment when enabled). */
    ClusterAssignment assignment;
    ReassignReport reassignment;

    std::size_t total_assigned() const {
        std::size_t s = 0;
        for (const auto& t : topics) s += t.count;
        return s;
    }
};

namespace detail {

inline void fill_topics(TopicModel& m, const Corpus& corpus, const RepresentationParams& p) {
    auto weighted = top_terms_weighted(m.weights, m.vocab, m.vocab.size() ? m.vocab.size() : 1);
    auto tops = top_terms(m.weights, m.vocab, p.n_terms);
    m.topics.clear();
    for (std::size_t c = 0; c < m.assignment.n_clusters; ++c) {
        Topic t;
        t.id = static_cast<int>(c);
        t.count = static_cast<std::size_t>(std::count(m.assignment.labels.begin(), m.assignment.labels.end(), t.id));
        t.weights = std::move(weighted[c]);
        t.top_terms = tops[c];
        for (auto i : representative_documents(t.id, corpus, m.assignment, m.vocab, m.weights, p.nr_docs)) {
            t.representative_doc_ids.push_back(corpus[i].id);
        }
        m.topics.push_back(std::move(t));
    }
}

} // namespace detail

/**
 * c-TF-IDF representation of a clustering. With reassignment enabled, outliers are
 * reassigned against the initial weights and the representation is recomputed.
 */
inline TopicModel build_topic_model(const Corpus& corpus, const ClusterAssignment& a,
                                    const RepresentationParams& p = {}) {
    TopicModel m;
    std::tie(m.vocab, m.counts) = build_class_counts(corpus, a, p.vocab);
    m.weights = compute_ctfidf(m.counts);
    m.assignment = a;
    m.reassignment.noise_before = m.reassignment.noise_after = a.noise_count();
    if (p.reassign && a.noise_count() > 0) {
        m.assignment = reassign_outliers(a, corpus, m.vocab, m.weights, p.reassignment, &m.reassignment);
        std::tie(m.vocab, m.counts) = build_class_counts(corpus, m.assignment, p.vocab);
        m.weights = compute_ctfidf(m.counts);
    }
    detail::fill_topics(m, corpus, p);
    return m;
}

/**********************************
 *********** Topic map ************
 **********************************/

struct MapPoint {
    int topic_id = 0;
    double x = 0, y = 0;
    std::size_t size = 0;

    bool operator==(const MapPoint&) const = default;
};

/**
 * 2-D coordinates of topics from their L2-normalized weight rows (cosine UMAP with
 * k = min(15, t - 1)). Two topics sit on the x axis at their cosine distance; one topic
 * sits at the origin.
 */
inline std::vector<MapPoint> topic_map_coordinates(const Matrix<double>& w, const std::vector<std::size_t>& sizes,
                                                   std::uint64_t seed = 42, int epochs = 0) {
    const std::size_t t = w.rows();
    if (sizes.size() != t) {
        throw InvalidArgument("topic map needs one size per topic");
    }
    std::vector<MapPoint> out(t);
    for (std::size_t c = 0; c < t; ++c) {
        out[c].topic_id = static_cast<int>(c);
        out[c].size = sizes[c];
    }
    if (t == 0) {
        return out;
    }
    if (t == 1) {
        warn("topic map: a single topic is placed at the origin");
        return out;
    }
    Matrix<double> rows = w;
    auto norms = row_norms(rows);
    for (std::size_t c = 0; c < t; ++c) {
        if (norms[c] > 0) {
            for (double& v : rows.row(c)) v /= norms[c];
        }
    }
    if (t == 2) {
        const auto& view = rows;
        double d = cosine_distance(view.row(0), view.row(1));
        out[0].x = -d / 2;
        out[1].x = d / 2;
        return out;
    }
    ReduceConfig cfg;
    cfg.n_neighbors = std::min<std::size_t>(15, t - 1);
    cfg.metric = Metric::cosine;
    cfg.layout.n_components = 2;
    cfg.layout.seed = seed;
    cfg.layout.epochs = epochs;
    auto emb = reduce(rows, cfg);
    for (std::size_t c = 0; c < t; ++c) {
        out[c].x = emb(c, 0);
        out[c].y = emb(c, 1);
    }
    return out;
}

inline std::vector<MapPoint> topic_map_coordinates(const TopicModel& m, std::uint64_t seed = 42) {
    std::vector<std::size_t> sizes;
    for (const auto& t : m.topics) sizes.push_back(t.count);
    return topic_map_coordinates(m.weights, sizes, seed);
}

} // namespace topiclens

#endif
