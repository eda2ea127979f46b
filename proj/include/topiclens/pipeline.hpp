#ifndef TOPICLENS_PIPELINE_HPP
#define TOPICLENS_PIPELINE_HPP

#include "common.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "hdbscan.hpp"
#include "labeling.hpp"
#include "report.hpp"
#include "themes.hpp"
#include "topics.hpp"
#include "umap.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

/**
 * @file pipeline.hpp
 *
 * @brief Stage-by-stage orchestration with on-disk caches under `<out>/cache`.
 *
 * ingest -> preprocess -> embed -> fit (reduce + cluster) -> represent (c-TF-IDF,
 * outlier reassignment, topic map) -> label -> themes -> report.
 */

namespace topiclens {

inline constexpr const char* tool_version = "0.1.0";

/** A stage failed; earlier caches are left as they were. */
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

enum class Stage { ingest, preprocess, embed, fit, represent, label, themes, report };

inline constexpr Stage all_stages[] = {Stage::ingest, Stage::preprocess, Stage::embed,  Stage::fit,
                                       Stage::represent, Stage::label,   Stage::themes, Stage::report};

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::preprocess: return "preprocess";
        case Stage::embed: return "embed";
        case Stage::fit: return "fit";
        case Stage::represent: return "represent";
        case Stage::label: return "label";
        case Stage::themes: return "themes";
        case Stage::report: return "report";
    }
    return "?";
}

namespace cache {
inline constexpr const char* corpus = "corpus.jsonl";
inline constexpr const char* clean = "clean.jsonl";
inline constexpr const char* embeddings = "embeddings.bin";
inline constexpr const char* reduced = "reduced.bin";
inline constexpr const char* clusters = "clusters.json";
inline constexpr const char* topics = "topics.json";
inline constexpr const char* map = "map.json";
inline constexpr const char* labels = "labels.json";
inline constexpr const char* themes = "themes.json";
inline constexpr const char* stages = "stages.json";
} // namespace cache

inline std::string crc_hex(std::uint32_t crc) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc);
    return buf;
}

/** Per-topic data handed from `represent` to the later stages. */
struct TopicsCache {
    TopicModel model;
    std::vector<std::string> doc_ids;
    std::vector<MapPoint> map;
};

inline nlohmann::ordered_json topics_cache_json(const TopicModel& m, const Corpus& corpus) {
    nlohmann::ordered_json j;
    j["n_topics"] = m.topics.size();
    j["reassignment"] = {{"noise_before", m.reassignment.noise_before},
                         {"reassigned", m.reassignment.reassigned},
                         {"empty_vectors", m.reassignment.empty_vectors},
                         {"noise_after", m.reassignment.noise_after}};
    auto topics = nlohmann::ordered_json::array();
    for (const auto& t : m.topics) {
        auto weights = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(t.weights.size(), 30); ++i) {
            weights.push_back({t.weights[i].first, t.weights[i].second});
        }
        topics.push_back({{"topic_id", t.id},
                          {"count", t.count},
                          {"top_terms", t.top_terms},
                          {"weights", weights},
                          {"representative_doc_ids", t.representative_doc_ids}});
    }
    j["topics"] = topics;
    auto docs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        docs.push_back({corpus[i].id, m.assignment.labels[i], m.assignment.strengths[i]});
    }
    j["documents"] = docs;
    return j;
}

inline TopicsCache load_topics_cache(const std::string& topics_text, const std::string& map_text) {
    TopicsCache c;
    auto j = nlohmann::json::parse(topics_text);
    for (const auto& t : j.at("topics")) {
        Topic topic;
        topic.id = t.at("topic_id").get<int>();
        topic.count = t.at("count").get<std::size_t>();
        topic.top_terms = t.at("top_terms").get<std::vector<std::string>>();
        for (const auto& w : t.at("weights")) {
            topic.weights.emplace_back(w.at(0).get<std::string>(), w.at(1).get<double>());
        }
        topic.representative_doc_ids = t.at("representative_doc_ids").get<std::vector<std::string>>();
        c.model.topics.push_back(std::move(topic));
    }
    for (const auto& d : j.at("documents")) {
        c.doc_ids.push_back(d.at(0).get<std::string>());
        c.model.assignment.labels.push_back(d.at(1).get<int>());
        c.model.assignment.strengths.push_back(d.at(2).get<double>());
    }
    c.model.assignment.n_clusters = c.model.topics.size();
    const auto& r = j.at("reassignment");
    c.model.reassignment = {r.at("noise_before").get<std::size_t>(), r.at("reassigned").get<std::size_t>(),
                            r.at("empty_vectors").get<std::size_t>(), r.at("noise_after").get<std::size_t>()};
    for (const auto& p : nlohmann::json::parse(map_text)) {
        c.map.push_back({p.at("topic_id").get<int>(), p.at("x").get<double>(), p.at("y").get<double>(),
                         p.at("size").get<std::size_t>()});
    }
    return c;
}

/**
 * Runs stages against one output directory. Each stage reads its predecessors' cache
 * files and writes its own, recording input/output checksums in `cache/stages.json`.
 */
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config) : config_(std::move(config)) {
        config_.propagate();
        load_ledger();
    }

    const PipelineConfig& config() const { return config_; }
    std::filesystem::path out_dir() const { return config_.resolve(config_.out_dir); }
    std::filesystem::path cache_dir() const { return out_dir() / "cache"; }
    std::filesystem::path cache_file(const char* name) const { return cache_dir() / name; }

    void set_embedding_provider(std::unique_ptr<EmbeddingProvider> p) { embedder_ = std::move(p); }
    void set_label_provider(std::unique_ptr<LabelProvider> p) { labeler_ = std::move(p); }

    /** Runs one stage unconditionally. */
    void run_stage(Stage s) {
        log(LogLevel::info, std::string("stage ") + to_string(s) + ": start");
        try {
            switch (s) {
                case Stage::ingest: ingest(); break;
                case Stage::preprocess: preprocess(); break;
                case Stage::embed: embed(); break;
                case Stage::fit: fit(); break;
                case Stage::represent: represent(); break;
                case Stage::label: label(); break;
                case Stage::themes: themes(); break;
                case Stage::report: report(); break;
            }
        } catch (const StageError&) {
            throw;
        } catch (const AuthError& e) {
            throw StageError(to_string(s), e.what());
        } catch (const std::exception& e) {
            throw StageError(to_string(s), e.what());
        }
        log(LogLevel::info, std::string("stage ") + to_string(s) + ": done");
    }

    /**
     * Every stage in order. With `reuse`, a stage whose settings and input checksums
     * match the previous run, and whose outputs are intact, is skipped.
     */
    void run(bool reuse = true) {
        for (Stage s : all_stages) {
            if (reuse && s != Stage::report && up_to_date(s)) {
                log(LogLevel::info, std::string("stage ") + to_string(s) + ": cached, reusing");
                continue;
            }
            run_stage(s);
        }
    }

    /** True when the recorded fingerprint and output checksums still hold. */
    bool up_to_date(Stage s) const {
        auto it = ledger_.find(to_string(s));
        if (it == ledger_.end()) {
            return false;
        }
        std::string fp;
        try {
            fp = fingerprint(s);
        } catch (const std::exception&) {
            return false;
        }
        if (it->at("fingerprint") != fp) {
            return false;
        }
        for (const auto& [name, crc] : it->at("outputs").items()) {
            auto path = cache_file(name.c_str());
            std::error_code ec;
            if (!std::filesystem::is_regular_file(path, ec) || crc_hex(file_crc32(path)) != crc.get<std::string>()) {
                return false;
            }
        }
        return true;
    }

    const nlohmann::ordered_json& ledger() const { return ledger_; }

private:
    PipelineConfig config_;
    std::unique_ptr<EmbeddingProvider> embedder_;
    std::unique_ptr<LabelProvider> labeler_;
    nlohmann::ordered_json ledger_ = nlohmann::ordered_json::object();

    /**********************************
     ************ Ledger **************
     **********************************/

    void load_ledger() {
        auto path = cache_file(cache::stages);
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) {
            return;
        }
        auto j = nlohmann::ordered_json::parse(read_file(path), nullptr, false);
        if (j.is_object()) {
            ledger_ = std::move(j);
        }
    }

    static std::vector<const char*> stage_inputs(Stage s) {
        switch (s) {
            case Stage::ingest: return {};
            case Stage::preprocess: return {cache::corpus};
            case Stage::embed: return {cache::clean};
            case Stage::fit: return {cache::embeddings};
            case Stage::represent: return {cache::clean, cache::clusters};
            case Stage::label: return {cache::clean, cache::topics};
            case Stage::themes: return {cache::topics};
            case Stage::report: return {cache::topics, cache::map, cache::labels, cache::themes};
        }
        return {};
    }

    /** Settings of the stage plus checksums of every file it reads. */
    std::string fingerprint(Stage s) const {
        auto cfg = config_to_json(config_);
        nlohmann::ordered_json j;
        auto external = [&](const std::filesystem::path& p) -> std::string {
            if (p.empty()) {
                return "";
            }
            return crc_hex(file_crc32(config_.resolve(p)));
        };
        switch (s) {
            case Stage::ingest:
                j["settings"] = cfg["corpus"];
                j["corpus"] = external(config_.corpus_path);
                j["keywords"] = external(config_.keywords_path);
                break;
            case Stage::preprocess:
                j["settings"] = cfg["cleaning"];
                for (const auto& [lang, path] : config_.stopword_files) {
                    j["stopwords"][lang] = external(path);
                }
                break;
            case Stage::embed:
                j["settings"] = cfg["embedding"];
                j["embed_on"] = cfg["cleaning"]["embed_on"];
                if (config_.embedding.kind == ProviderKind::file) {
                    j["file"] = external(config_.embedding.location);
                }
                break;
            case Stage::fit:
                j["settings"] = {cfg["reduce"], cfg["cluster"], cfg["run"]};
                break;
            case Stage::represent:
                j["settings"] = {cfg["topics"], cfg["run"]};
                if (config_.topic_stopwords != "english" && config_.topic_stopwords != "none") {
                    j["stopwords"] = external(config_.topic_stopwords);
                }
                break;
            case Stage::label:
                j["settings"] = cfg["labeling"];
                j["nr_docs"] = cfg["topics"]["nr_docs"];
                j["n_terms"] = cfg["topics"]["n_terms"];
                if (!config_.prompt_dir.empty()) {
                    for (const char* f : {"system.txt", "example.txt", "main.txt"}) {
                        j["prompt"][f] = external(config_.prompt_dir / f);
                    }
                }
                break;
            case Stage::themes:
                j["mapping"] = external(config_.theme_mapping);
                break;
            case Stage::report:
                break;
        }
        for (const char* in : stage_inputs(s)) {
            j["inputs"][in] = crc_hex(file_crc32(cache_file(in)));
        }
        return crc_hex(detail::crc32_of(j.dump()));
    }

    void record(Stage s, const std::vector<const char*>& outputs, nlohmann::ordered_json counts) {
        nlohmann::ordered_json entry;
        entry["fingerprint"] = fingerprint(s);
        entry["inputs"] = nlohmann::ordered_json::object();
        for (const char* in : stage_inputs(s)) {
            entry["inputs"][in] = crc_hex(file_crc32(cache_file(in)));
        }
        entry["outputs"] = nlohmann::ordered_json::object();
        for (const char* out : outputs) {
            entry["outputs"][out] = crc_hex(file_crc32(cache_file(out)));
        }
        entry["counts"] = std::move(counts);
        ledger_[to_string(s)] = std::move(entry);
        // Later stages now rest on changed inputs.
        bool after = false;
        for (Stage t : all_stages) {
            if (after) {
                ledger_.erase(to_string(t));
            }
            after = after || t == s;
        }
        write_file(cache_file(cache::stages), ledger_.dump(2) + "\n");
    }

    void need(const char* name, Stage producer) const {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(cache_file(name), ec)) {
            throw Error(std::string("missing cache file ") + name + "; run the '" + to_string(producer) +
                        "' stage first");
        }
    }

    void ensure_dirs() const {
        std::error_code ec;
        std::filesystem::create_directories(cache_dir(), ec);
        if (ec) {
            throw Error("cannot create '" + cache_dir().string() + "': " + ec.message());
        }
    }

    Corpus load_cached_corpus(const char* name, Stage producer) const {
        need(name, producer);
        IngestOptions strict;
        strict.max_malformed_fraction = 0.0;
        return ingest_corpus(cache_file(name), strict);
    }

    /**********************************
     ************ Stages **************
     **********************************/

    void ingest() {
        ensure_dirs();
        IngestOptions opts;
        opts.max_malformed_fraction = config_.max_malformed_fraction;
        IngestReport rep;
        auto corpus = ingest_corpus(config_.resolve(config_.corpus_path), opts, &rep);
        nlohmann::ordered_json counts;
        counts["read"] = corpus.size() + rep.malformed_lines.size();
        counts["malformed"] = rep.malformed_lines.size();
        counts["ingested"] = corpus.size();
        if (config_.start || config_.end) {
            auto lo = config_.start.value_or(Timestamp::min());
            auto hi = config_.end.value_or(Timestamp::max());
            corpus = filter_by_daterange(corpus, lo, hi);
        }
        counts["after_dates"] = corpus.size();
        if (!config_.keywords_path.empty()) {
            corpus = filter_by_keywords(corpus, load_keyword_file(config_.resolve(config_.keywords_path)));
        }
        counts["after_keywords"] = corpus.size();
        if (corpus.empty()) {
            throw Error("no documents after filtering");
        }
        write_corpus(corpus, cache_file(cache::corpus));
        record(Stage::ingest, {cache::corpus}, counts);
    }

    void preprocess() {
        auto corpus = load_cached_corpus(cache::corpus, Stage::ingest);
        auto rules = config_.cleaning;
        for (const auto& [lang, path] : config_.stopword_files) {
            auto words = load_stopword_file(config_.resolve(path));
            rules.stopword_lists[lang].insert(words.begin(), words.end());
        }
        PreprocessReport rep;
        auto clean = topiclens::preprocess(corpus, rules, config_.workers, &rep);
        if (clean.empty()) {
            throw Error("no documents after preprocessing");
        }
        write_corpus(clean, cache_file(cache::clean));
        record(Stage::preprocess, {cache::clean},
               {{"input", corpus.size()},
                {"dropped_empty", rep.dropped_empty},
                {"dropped_duplicates", rep.dropped_duplicates},
                {"documents", clean.size()}});
    }

    EmbeddingProvider& embedder() {
        if (!embedder_) {
            auto spec = config_.embedding;
            if (spec.kind == ProviderKind::file) {
                spec.location = config_.resolve(spec.location).string();
            }
            embedder_ = make_provider(spec);
        }
        return *embedder_;
    }

    void embed() {
        auto corpus = load_cached_corpus(cache::clean, Stage::preprocess);
        EmbedReport rep;
        auto m = embed_corpus(corpus, embedder(), config_.embedding.batch_size, config_.workers, config_.embed_on_raw,
                              &rep);
        save_embeddings(m, cache_file(cache::embeddings));
        record(Stage::embed, {cache::embeddings},
               {{"documents", m.size()},
                {"dim", m.dim()},
                {"zero_rows", rep.zero_rows.size()},
                {"provider", embedder().identifier()}});
    }

    void fit() {
        need(cache::embeddings, Stage::embed);
        auto emb = load_embeddings(cache_file(cache::embeddings));
        const std::size_t n = emb.size(), dim = emb.dim();

        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < n; ++i) {
            auto row = emb.row(i);
            if (std::any_of(row.begin(), row.end(), [](float v) { return v != 0.0f; })) {
                kept.push_back(i);
            }
        }
        if (kept.size() < 3) {
            throw Error("need at least 3 documents with non-zero embeddings, have " + std::to_string(kept.size()));
        }
        std::vector<std::string> ids;
        std::vector<float> values;
        for (auto i : kept) {
            ids.push_back(emb.doc_ids()[i]);
            auto row = emb.row(i);
            values.insert(values.end(), row.begin(), row.end());
        }
        Matrix<float> x(kept.size(), dim, std::move(values));

        auto rc = config_.reduce;
        if (rc.n_neighbors >= kept.size()) {
            warn("fit: n_neighbors " + std::to_string(rc.n_neighbors) + " reduced to " +
                 std::to_string(kept.size() - 1) + " for " + std::to_string(kept.size()) + " documents");
            rc.n_neighbors = kept.size() - 1;
        }
        auto reduced = reduce(x, rc);
        save_embeddings(EmbeddingMatrix(ids, reduced.cols(), reduced.values()), cache_file(cache::reduced));

        auto a = cluster(reduced, config_.density);
        ClusterAssignment full;
        full.labels.assign(n, -1);
        full.strengths.assign(n, 0.0);
        full.n_clusters = a.n_clusters;
        for (std::size_t k = 0; k < kept.size(); ++k) {
            full.labels[kept[k]] = a.labels[k];
            full.strengths[kept[k]] = a.strengths[k];
        }
        nlohmann::ordered_json j;
        j["n_clusters"] = full.n_clusters;
        j["noise"] = full.noise_count();
        j["excluded_zero_rows"] = n - kept.size();
        auto docs = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < n; ++i) {
            docs.push_back({emb.doc_ids()[i], full.labels[i], full.strengths[i]});
        }
        j["documents"] = docs;
        write_file(cache_file(cache::clusters), j.dump(1) + "\n");
        record(Stage::fit, {cache::reduced, cache::clusters},
               {{"documents", n}, {"clusters", full.n_clusters}, {"noise", full.noise_count()}});
    }

    void represent() {
        auto corpus = load_cached_corpus(cache::clean, Stage::preprocess);
        need(cache::clusters, Stage::fit);
        auto j = nlohmann::json::parse(read_file(cache_file(cache::clusters)));
        ClusterAssignment a;
        a.n_clusters = j.at("n_clusters").get<std::size_t>();
        const auto& docs = j.at("documents");
        if (docs.size() != corpus.size()) {
            throw Error("cluster cache has " + std::to_string(docs.size()) + " documents, corpus has " +
                        std::to_string(corpus.size()) + "; rerun embed and fit");
        }
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (docs[i].at(0).get<std::string>() != corpus[i].id) {
                throw Error("cluster cache does not match the corpus; rerun embed and fit");
            }
            a.labels.push_back(docs[i].at(1).get<int>());
            a.strengths.push_back(docs[i].at(2).get<double>());
        }
        if (a.n_clusters == 0) {
            throw Error("clustering found no topics (every document is an outlier); lower cluster.min_cluster_size");
        }
        auto params = config_.representation;
        params.vocab.stopwords = topic_stopword_set(config_);
        auto model = build_topic_model(corpus, a, params);

        std::vector<std::size_t> sizes;
        for (const auto& t : model.topics) {
            sizes.push_back(t.count);
        }
        auto points = topic_map_coordinates(model.weights, sizes, config_.seed, static_cast<int>(config_.map_epochs));

        write_file(cache_file(cache::topics), topics_cache_json(model, corpus).dump(1) + "\n");
        nlohmann::ordered_json map = nlohmann::ordered_json::array();
        for (const auto& p : points) {
            map.push_back({{"topic_id", p.topic_id}, {"x", p.x}, {"y", p.y}, {"size", p.size}});
        }
        write_file(cache_file(cache::map), map.dump(1) + "\n");
        record(Stage::represent, {cache::topics, cache::map},
               {{"documents", corpus.size()},
                {"topics", model.topics.size()},
                {"noise_before", model.reassignment.noise_before},
                {"reassigned", model.reassignment.reassigned},
                {"empty_vectors", model.reassignment.empty_vectors},
                {"noise_after", model.assignment.noise_count()},
                {"assigned", model.total_assigned()},
                {"vocabulary", model.vocab.size()}});
    }

    TopicsCache topics_cache() const {
        need(cache::topics, Stage::represent);
        need(cache::map, Stage::represent);
        return load_topics_cache(read_file(cache_file(cache::topics)), read_file(cache_file(cache::map)));
    }

    LabelProvider& labeler() {
        if (!labeler_) {
            if (config_.labeler == LabelerKind::stub) {
                labeler_ = std::make_unique<StubLabelProvider>();
            } else {
                labeler_ = std::make_unique<ChatCompletionProvider>(LlmSettings::from_env());
            }
        }
        return *labeler_;
    }

    void label() {
        auto corpus = load_cached_corpus(cache::clean, Stage::preprocess);
        auto tc = topics_cache();
        auto tmpl = config_.prompt_dir.empty() ? default_prompt_template()
                                               : PromptTemplate::load(config_.resolve(config_.prompt_dir));
        auto outcomes = label_topics(tc.model.topics, corpus, tmpl, labeler(), config_.labeling);
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        std::size_t fallbacks = 0;
        for (const auto& o : outcomes) {
            j.push_back({{"topic_id", o.topic_id}, {"label", o.label}, {"fallback", o.fallback}, {"error", o.error}});
            fallbacks += o.fallback;
        }
        write_file(cache_file(cache::labels), j.dump(1) + "\n");
        record(Stage::label, {cache::labels},
               {{"topics", outcomes.size()}, {"fallbacks", fallbacks}, {"provider", labeler().identifier()}});
    }

    void themes() {
        auto tc = topics_cache();
        ThemeMapping mapping;
        if (!config_.theme_mapping.empty()) {
            mapping = ThemeMapping::load(config_.resolve(config_.theme_mapping));
        }
        auto summary = aggregate_themes(tc.model, mapping);
        nlohmann::ordered_json j;
        j["total"] = summary.total;
        auto rows = nlohmann::ordered_json::array();
        for (const auto& r : summary.rows()) {
            rows.push_back({{"theme", r.name},
                            {"topic_ids", r.topic_ids},
                            {"count", r.count},
                            {"hundredths", r.percentage.hundredths}});
        }
        j["rows"] = rows;
        write_file(cache_file(cache::themes), j.dump(1) + "\n");
        record(Stage::themes, {cache::themes}, {{"themes", summary.themes.size()}, {"total", summary.total}});
    }

    void report() {
        auto tc = topics_cache();
        need(cache::labels, Stage::label);
        need(cache::themes, Stage::themes);
        std::map<int, std::string> labels;
        for (const auto& l : nlohmann::json::parse(read_file(cache_file(cache::labels)))) {
            labels[l.at("topic_id").get<int>()] = l.at("label").get<std::string>();
        }
        ThemeSummary summary;
        auto tj = nlohmann::json::parse(read_file(cache_file(cache::themes)));
        summary.total = tj.at("total").get<std::size_t>();
        for (const auto& r : tj.at("rows")) {
            ThemeRow row{r.at("theme").get<std::string>(), r.at("topic_ids").get<std::vector<int>>(),
                         r.at("count").get<std::size_t>(), Percentage{r.at("hundredths").get<std::int64_t>()}};
            if (row.name == unmapped_theme) {
                summary.unmapped = row;
            } else {
                summary.themes.push_back(row);
            }
        }
        auto bundle = make_report(tc.model, labels, summary, tc.map);
        auto files = write_report(bundle, out_dir());
        write_manifest(files, bundle);
    }

    void write_manifest(const std::vector<std::filesystem::path>& files, const ReportBundle& b) {
        nlohmann::ordered_json m;
        m["tool"] = "topiclens";
        m["version"] = tool_version;
        m["seed"] = config_.seed;
        m["workers"] = config_.workers;
        m["config"] = config_to_json(config_);
        nlohmann::ordered_json providers;
        if (ledger_.contains("embed")) {
            providers["embedding"] = ledger_["embed"]["counts"]["provider"];
        }
        if (ledger_.contains("label")) {
            providers["labeler"] = ledger_["label"]["counts"]["provider"];
        }
        m["providers"] = providers;
        m["summary"] = {{"documents", b.total_documents},
                        {"topics", b.topics.size()},
                        {"assigned", b.total_documents - b.noise},
                        {"outliers", b.noise}};
        m["stages"] = ledger_;
        nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
        for (const auto& f : files) {
            outputs[f.filename().string()] = crc_hex(file_crc32(f));
        }
        m["outputs"] = outputs;
        write_file(out_dir() / "run_manifest.json", m.dump(2) + "\n");
    }
};

} // namespace topiclens

#endif
