#ifndef TOPICLENS_CONFIG_HPP
#define TOPICLENS_CONFIG_HPP

#include "common.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "hdbscan.hpp"
#include "labeling.hpp"
#include "topics.hpp"
#include "umap.hpp"

#include "json.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

/**
 * @file config.hpp
 *
 * @brief Pipeline configuration: an INI-style file of `[section]` and `key = value` lines.
 */

namespace topiclens {

enum class LabelerKind { stub, live };

inline LabelerKind parse_labeler_kind(std::string_view s) {
    if (s == "stub") return LabelerKind::stub;
    if (s == "live") return LabelerKind::live;
    throw InvalidArgument("unknown labeler '" + std::string(s) + "' (expected stub or live)");
}

inline const char* to_string(LabelerKind k) { return k == LabelerKind::stub ? "stub" : "live"; }

struct PipelineConfig {
    /** Directory relative paths are resolved against (the config file's directory). */
    std::filesystem::path base_dir = ".";

    std::filesystem::path corpus_path;
    std::optional<Timestamp> start, end;
    std::filesystem::path keywords_path;
    double max_malformed_fraction = 0.10;

    CleaningRules cleaning;
    std::map<std::string, std::filesystem::path> stopword_files;
    bool embed_on_raw = false;

    EmbeddingProviderSpec embedding;
    ReduceConfig reduce;
    DensityParams density;

    RepresentationParams representation;
    std::string topic_stopwords = "english";
    std::size_t map_epochs = 0;

    LabelerKind labeler = LabelerKind::stub;
    LabelingParams labeling;
    std::size_t label_concurrency = 4;
    std::filesystem::path prompt_dir;

    std::filesystem::path theme_mapping;
    std::filesystem::path out_dir = "out";

    std::uint64_t seed = 42;
    int workers = 1;

    std::filesystem::path resolve(const std::filesystem::path& p) const {
        if (p.empty() || p.is_absolute()) {
            return p;
        }
        return base_dir / p;
    }

    /** Pushes the global seed and worker cap into every stage. */
    void propagate() {
        reduce.layout.seed = seed;
        reduce.layout.workers = workers;
        density.workers = workers;
        representation.reassignment.workers = workers;
        embedding.workers = workers;
        labeling.nr_docs = representation.nr_docs;
        labeling.n_keywords = representation.n_terms;
        labeling.concurrency = std::min(label_concurrency, static_cast<std::size_t>(std::max(1, workers)));
    }
};

struct ConfigResult {
    std::optional<PipelineConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return config.has_value() && errors.empty(); }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
    auto s = text::to_lower(v);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw InvalidArgument("expected a boolean, got '" + v + "'");
}

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

inline long long parse_integer(const std::string& v) {
    try {
        std::size_t used = 0;
        auto x = std::stoll(v, &used);
        if (used == v.size()) {
            return x;
        }
    } catch (const std::exception&) {
    }
    throw InvalidArgument("expected an integer, got '" + v + "'");
}

inline std::size_t parse_count(const std::string& v, long long min) {
    auto x = parse_integer(v);
    if (x < min) {
        throw InvalidArgument("must be at least " + std::to_string(min) + ", got " + v);
    }
    return static_cast<std::size_t>(x);
}

inline double parse_real(const std::string& v, double lo, double hi) {
    double x = 0;
    try {
        std::size_t used = 0;
        x = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
    } catch (const std::exception&) {
        throw InvalidArgument("expected a number, got '" + v + "'");
    }
    if (!(x >= lo && x <= hi)) {
        std::ostringstream o;
        o << "must be in [" << lo << ", " << hi << "], got " << v;
        throw InvalidArgument(o.str());
    }
    return x;
}

inline std::string real_str(double x) {
    std::ostringstream o;
    o << x;
    auto s = o.str();
    if (s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline std::optional<Timestamp> parse_date(const std::string& v, bool end_of_day) {
    if (v.empty()) {
        return std::nullopt;
    }
    auto t = parse_timestamp(v);
    if (!t) {
        throw InvalidArgument("expected an ISO-8601 date or instant, got '" + v + "'");
    }
    if (end_of_day && v.size() == 10) {
        *t += std::chrono::milliseconds(86'399'999);
    }
    return t;
}

inline std::string stopword_files_str(const std::map<std::string, std::filesystem::path>& m) {
    std::string out;
    for (const auto& [lang, path] : m) {
        out += (out.empty() ? "" : ", ") + lang + ":" + path.string();
    }
    return out;
}

inline std::map<std::string, std::filesystem::path> parse_stopword_files(const std::string& v) {
    std::map<std::string, std::filesystem::path> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = text::trim(item);
        if (item.empty()) {
            continue;
        }
        auto colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
            throw InvalidArgument("expected lang:path entries, got '" + item + "'");
        }
        out[text::to_lower(text::trim(item.substr(0, colon)))] = text::trim(item.substr(colon + 1));
    }
    return out;
}

struct Key {
    const char* section;
    const char* name;
    const char* doc;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

inline const std::vector<Key>& config_keys() {
    using C = PipelineConfig;
    static const std::vector<Key> keys = {
        {"corpus", "path", "JSON-lines corpus (id, text, ts, likes, retweets, optional lang); required",
         [](const C& c) { return c.corpus_path.string(); }, [](C& c, const std::string& v) { c.corpus_path = v; }},
        {"corpus", "start", "first instant kept (ISO-8601); empty keeps everything",
         [](const C& c) { return c.start ? format_timestamp(*c.start) : std::string(); },
         [](C& c, const std::string& v) { c.start = parse_date(v, false); }},
        {"corpus", "end", "last instant kept; a bare date includes that whole day",
         [](const C& c) { return c.end ? format_timestamp(*c.end) : std::string(); },
         [](C& c, const std::string& v) { c.end = parse_date(v, true); }},
        {"corpus", "keywords", "keyword file, one phrase per line; empty disables keyword filtering",
         [](const C& c) { return c.keywords_path.string(); }, [](C& c, const std::string& v) { c.keywords_path = v; }},
        {"corpus", "max_malformed_fraction", "ingestion fails above this share of malformed lines",
         [](const C& c) { return real_str(c.max_malformed_fraction); },
         [](C& c, const std::string& v) { c.max_malformed_fraction = parse_real(v, 0.0, 1.0); }},

        {"cleaning", "remove_urls", "", [](const C& c) { return bool_str(c.cleaning.remove_urls); },
         [](C& c, const std::string& v) { c.cleaning.remove_urls = parse_bool(v); }},
        {"cleaning", "remove_mentions", "", [](const C& c) { return bool_str(c.cleaning.remove_mentions); },
         [](C& c, const std::string& v) { c.cleaning.remove_mentions = parse_bool(v); }},
        {"cleaning", "remove_emoji", "", [](const C& c) { return bool_str(c.cleaning.remove_emoji); },
         [](C& c, const std::string& v) { c.cleaning.remove_emoji = parse_bool(v); }},
        {"cleaning", "remove_punctuation", "", [](const C& c) { return bool_str(c.cleaning.remove_punctuation); },
         [](C& c, const std::string& v) { c.cleaning.remove_punctuation = parse_bool(v); }},
        {"cleaning", "remove_digits", "", [](const C& c) { return bool_str(c.cleaning.remove_digits); },
         [](C& c, const std::string& v) { c.cleaning.remove_digits = parse_bool(v); }},
        {"cleaning", "remove_stopwords", "", [](const C& c) { return bool_str(c.cleaning.remove_stopwords); },
         [](C& c, const std::string& v) { c.cleaning.remove_stopwords = parse_bool(v); }},
        {"cleaning", "lowercase", "", [](const C& c) { return bool_str(c.cleaning.lowercase); },
         [](C& c, const std::string& v) { c.cleaning.lowercase = parse_bool(v); }},
        {"cleaning", "keep_hashtag_word", "drop only the '#'",
         [](const C& c) { return bool_str(c.cleaning.keep_hashtag_word); },
         [](C& c, const std::string& v) { c.cleaning.keep_hashtag_word = parse_bool(v); }},
        {"cleaning", "stopword_files", "extra per-language lists, e.g. en:data/stopwords/en.txt, es:data/stopwords/es.txt",
         [](const C& c) { return stopword_files_str(c.stopword_files); },
         [](C& c, const std::string& v) { c.stopword_files = parse_stopword_files(v); }},
        {"cleaning", "embed_on", "clean or raw text goes to the embedder",
         [](const C& c) { return std::string(c.embed_on_raw ? "raw" : "clean"); },
         [](C& c, const std::string& v) {
             if (v != "clean" && v != "raw") throw InvalidArgument("expected clean or raw, got '" + v + "'");
             c.embed_on_raw = v == "raw";
         }},

        {"embedding", "provider", "file, http or hash-test",
         [](const C& c) { return std::string(to_string(c.embedding.kind)); },
         [](C& c, const std::string& v) { c.embedding.kind = parse_provider_kind(v); }},
        {"embedding", "location", "embedding file for 'file', service URL for 'http'",
         [](const C& c) { return c.embedding.location; }, [](C& c, const std::string& v) { c.embedding.location = v; }},
        {"embedding", "model", "", [](const C& c) { return c.embedding.model_name; },
         [](C& c, const std::string& v) { c.embedding.model_name = v; }},
        {"embedding", "dim", "", [](const C& c) { return std::to_string(c.embedding.dim); },
         [](C& c, const std::string& v) { c.embedding.dim = parse_count(v, 2); }},
        {"embedding", "batch_size", "", [](const C& c) { return std::to_string(c.embedding.batch_size); },
         [](C& c, const std::string& v) { c.embedding.batch_size = parse_count(v, 1); }},
        {"embedding", "seed", "hash-test provider seed", [](const C& c) { return std::to_string(c.embedding.seed); },
         [](C& c, const std::string& v) { c.embedding.seed = parse_count(v, 0); }},

        {"reduce", "n_neighbors", "", [](const C& c) { return std::to_string(c.reduce.n_neighbors); },
         [](C& c, const std::string& v) { c.reduce.n_neighbors = parse_count(v, 2); }},
        {"reduce", "n_components", "", [](const C& c) { return std::to_string(c.reduce.layout.n_components); },
         [](C& c, const std::string& v) { c.reduce.layout.n_components = parse_count(v, 1); }},
        {"reduce", "min_dist", "", [](const C& c) { return real_str(c.reduce.layout.min_dist); },
         [](C& c, const std::string& v) { c.reduce.layout.min_dist = parse_real(v, 0.0, 1e6); }},
        {"reduce", "spread", "", [](const C& c) { return real_str(c.reduce.layout.spread); },
         [](C& c, const std::string& v) { c.reduce.layout.spread = parse_real(v, 1e-9, 1e6); }},
        {"reduce", "metric", "cosine or euclidean", [](const C& c) { return std::string(to_string(c.reduce.metric)); },
         [](C& c, const std::string& v) { c.reduce.metric = parse_metric(v); }},
        {"reduce", "epochs", "0 picks 500 (200 above 10,000 documents)",
         [](const C& c) { return std::to_string(c.reduce.layout.epochs); },
         [](C& c, const std::string& v) { c.reduce.layout.epochs = static_cast<int>(parse_count(v, 0)); }},

        {"cluster", "min_cluster_size", "", [](const C& c) { return std::to_string(c.density.min_cluster_size); },
         [](C& c, const std::string& v) { c.density.min_cluster_size = parse_count(v, 2); }},
        {"cluster", "min_samples", "", [](const C& c) { return std::to_string(c.density.min_samples); },
         [](C& c, const std::string& v) { c.density.min_samples = parse_count(v, 1); }},
        {"cluster", "metric", "", [](const C& c) { return std::string(to_string(c.density.metric)); },
         [](C& c, const std::string& v) { c.density.metric = parse_metric(v); }},
        {"cluster", "selection", "eom or leaf", [](const C& c) { return std::string(to_string(c.density.selection)); },
         [](C& c, const std::string& v) { c.density.selection = parse_selection(v); }},
        {"cluster", "allow_single_cluster", "",
         [](const C& c) { return bool_str(c.density.allow_single_cluster); },
         [](C& c, const std::string& v) { c.density.allow_single_cluster = parse_bool(v); }},

        {"topics", "n_terms", "terms per topic", [](const C& c) { return std::to_string(c.representation.n_terms); },
         [](C& c, const std::string& v) { c.representation.n_terms = parse_count(v, 1); }},
        {"topics", "nr_docs", "representative documents per topic",
         [](const C& c) { return std::to_string(c.representation.nr_docs); },
         [](C& c, const std::string& v) { c.representation.nr_docs = parse_count(v, 1); }},
        {"topics", "stopwords", "english, none, or a stopword file",
         [](const C& c) { return c.topic_stopwords; }, [](C& c, const std::string& v) { c.topic_stopwords = v; }},
        {"topics", "max_df", "drop terms in more than this share of documents",
         [](const C& c) { return real_str(c.representation.vocab.max_df); },
         [](C& c, const std::string& v) { c.representation.vocab.max_df = parse_real(v, 1e-9, 1.0); }},
        {"topics", "reassign", "reassign outliers to topics",
         [](const C& c) { return bool_str(c.representation.reassign); },
         [](C& c, const std::string& v) { c.representation.reassign = parse_bool(v); }},
        {"topics", "strategy", "ctfidf or distributions",
         [](const C& c) { return std::string(to_string(c.representation.reassignment.strategy)); },
         [](C& c, const std::string& v) { c.representation.reassignment.strategy = parse_reassign_strategy(v); }},
        {"topics", "threshold", "minimum score to reassign",
         [](const C& c) { return real_str(c.representation.reassignment.threshold); },
         [](C& c, const std::string& v) { c.representation.reassignment.threshold = parse_real(v, 0.0, 1.0); }},
        {"topics", "window", "distributions strategy window",
         [](const C& c) { return std::to_string(c.representation.reassignment.window); },
         [](C& c, const std::string& v) { c.representation.reassignment.window = parse_count(v, 1); }},
        {"topics", "stride", "", [](const C& c) { return std::to_string(c.representation.reassignment.stride); },
         [](C& c, const std::string& v) { c.representation.reassignment.stride = parse_count(v, 1); }},
        {"topics", "map_epochs", "topic map layout epochs; 0 picks the default",
         [](const C& c) { return std::to_string(c.map_epochs); },
         [](C& c, const std::string& v) { c.map_epochs = parse_count(v, 0); }},

        {"labeling", "labeler", "stub or live (chat-completions endpoint from TOPICLENS_LLM_URL)",
         [](const C& c) { return std::string(to_string(c.labeler)); },
         [](C& c, const std::string& v) { c.labeler = parse_labeler_kind(v); }},
        {"labeling", "model", "", [](const C& c) { return c.labeling.model.model; },
         [](C& c, const std::string& v) { c.labeling.model.model = v; }},
        {"labeling", "temperature", "", [](const C& c) { return real_str(c.labeling.model.temperature); },
         [](C& c, const std::string& v) { c.labeling.model.temperature = parse_real(v, 0.0, 2.0); }},
        {"labeling", "max_tokens", "", [](const C& c) { return std::to_string(c.labeling.model.max_tokens); },
         [](C& c, const std::string& v) { c.labeling.model.max_tokens = static_cast<int>(parse_count(v, 1)); }},
        {"labeling", "concurrency", "parallel label requests",
         [](const C& c) { return std::to_string(c.label_concurrency); },
         [](C& c, const std::string& v) { c.label_concurrency = parse_count(v, 1); }},
        {"labeling", "prompt_dir", "directory with system.txt, example.txt, main.txt; empty uses the built-in prompt",
         [](const C& c) { return c.prompt_dir.string(); }, [](C& c, const std::string& v) { c.prompt_dir = v; }},

        {"themes", "mapping", "JSON list of {name, topic_ids}; empty puts every topic under (unmapped)",
         [](const C& c) { return c.theme_mapping.string(); }, [](C& c, const std::string& v) { c.theme_mapping = v; }},

        {"output", "dir", "report and cache directory", [](const C& c) { return c.out_dir.string(); },
         [](C& c, const std::string& v) {
             if (v.empty()) throw InvalidArgument("must not be empty");
             c.out_dir = v;
         }},

        {"run", "seed", "", [](const C& c) { return std::to_string(c.seed); },
         [](C& c, const std::string& v) { c.seed = parse_count(v, 0); }},
        {"run", "workers", "1 is deterministic", [](const C& c) { return std::to_string(c.workers); },
         [](C& c, const std::string& v) { c.workers = static_cast<int>(parse_count(v, 1)); }},
    };
    return keys;
}

} // namespace detail

/**
 * Structural check only: syntax, unknown keys, types and ranges. Every problem is
 * reported, not just the first.
 */
inline ConfigResult parse_config(const std::string& content, const std::filesystem::path& base_dir = ".") {
    ConfigResult r;
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(content);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        r.errors.push_back("line " + std::to_string(e.line()) + ": " + e.message());
        return r;
    }

    PipelineConfig c;
    c.base_dir = base_dir;
    const auto& keys = detail::config_keys();
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            r.errors.push_back("'" + section + "' is outside any [section]");
            continue;
        }
        for (const auto& [name, value] : body) {
            auto it = std::find_if(keys.begin(), keys.end(),
                                   [&](const detail::Key& k) { return section == k.section && name == k.name; });
            if (it == keys.end()) {
                r.errors.push_back(section + "." + name + ": unknown key");
                continue;
            }
            try {
                it->set(c, text::trim(value.data()));
            } catch (const std::exception& e) {
                r.errors.push_back(section + "." + name + ": " + e.what());
            }
        }
    }
    if (c.corpus_path.empty()) {
        r.errors.push_back("corpus.path: required");
    }
    if (c.start && c.end && *c.start > *c.end) {
        r.errors.push_back("corpus.start: after corpus.end");
    }
    if (c.density.min_samples >= 1 && c.density.min_cluster_size >= 2) {
        try {
            c.density.validate();
        } catch (const std::exception& e) {
            r.errors.push_back(std::string("cluster: ") + e.what());
        }
    }
    if (c.embedding.kind != ProviderKind::hash_test && c.embedding.location.empty()) {
        r.errors.push_back("embedding.location: required for the " + std::string(to_string(c.embedding.kind)) +
                           " provider");
    }
    c.propagate();
    r.config = std::move(c);
    return r;
}

/** Files the configuration points at must exist. */
inline std::vector<std::string> check_references(const PipelineConfig& c) {
    std::vector<std::string> errors;
    auto need_file = [&](const std::filesystem::path& p, const std::string& key) {
        if (p.empty()) {
            return;
        }
        std::error_code ec;
        if (!std::filesystem::is_regular_file(c.resolve(p), ec)) {
            errors.push_back(key + ": file not found: " + c.resolve(p).string());
        }
    };
    need_file(c.corpus_path, "corpus.path");
    need_file(c.keywords_path, "corpus.keywords");
    for (const auto& [lang, path] : c.stopword_files) {
        need_file(path, "cleaning.stopword_files[" + lang + "]");
    }
    if (c.embedding.kind == ProviderKind::file) {
        need_file(c.embedding.location, "embedding.location");
    }
    if (c.topic_stopwords != "english" && c.topic_stopwords != "none") {
        need_file(c.topic_stopwords, "topics.stopwords");
    }
    if (!c.prompt_dir.empty()) {
        for (const char* f : {"system.txt", "example.txt", "main.txt"}) {
            need_file(c.prompt_dir / f, "labeling.prompt_dir");
        }
    }
    need_file(c.theme_mapping, "themes.mapping");
    return errors;
}

/** Reads, parses and checks references in one go. */
inline ConfigResult validate_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return {std::nullopt, {"cannot read config file '" + path.string() + "'"}};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    auto r = parse_config(ss.str(), base);
    if (r.config) {
        auto refs = check_references(*r.config);
        r.errors.insert(r.errors.end(), refs.begin(), refs.end());
    }
    return r;
}

/** Every key with its default, grouped by section and commented. */
inline std::string default_config_text() {
    PipelineConfig defaults;
    std::string out = "# topiclens pipeline configuration. Relative paths are resolved against this file's directory.\n";
    std::string section;
    for (const auto& k : detail::config_keys()) {
        if (section != k.section) {
            section = k.section;
            out += "\n[" + section + "]\n";
        }
        if (*k.doc) {
            out += "# " + std::string(k.doc) + "\n";
        }
        out += std::string(k.name) + " = " + k.get(defaults) + "\n";
    }
    return out;
}

/** Effective settings as {section: {key: value}}, for the run manifest. */
inline nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : detail::config_keys()) {
        j[k.section][k.name] = k.get(c);
    }
    return j;
}

/** Effective settings in config-file syntax. */
inline std::string config_to_text(const PipelineConfig& c) {
    std::string out, section;
    for (const auto& k : detail::config_keys()) {
        if (section != k.section) {
            section = k.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += std::string(k.name) + " = " + k.get(c) + "\n";
    }
    return out;
}

/** Stopword set for representation-time pruning. */
inline std::set<std::string> topic_stopword_set(const PipelineConfig& c) {
    if (c.topic_stopwords == "english") {
        return english_stopwords();
    }
    if (c.topic_stopwords == "none") {
        return {};
    }
    return load_stopword_file(c.resolve(c.topic_stopwords));
}

} // namespace topiclens

#endif
