#ifndef TOPICLENS_CORPUS_HPP
#define TOPICLENS_CORPUS_HPP

#include "common.hpp"
#include "text.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

/**
 * @file corpus.hpp
 *
 * @brief Post records, corpus ingestion, cleaning, keyword and date filters, and the
 * keyword-saturation step.
 */

namespace topiclens {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/**
 * Parses an ISO-8601 instant: `YYYY-MM-DD`, optionally followed by `THH:MM[:SS[.fff]]`
 * and a `Z` or `+HH:MM` offset. A missing offset means UTC.
 */
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    auto digits = [&](std::size_t pos, std::size_t count, int& out) {
        if (pos + count > s.size()) {
            return false;
        }
        int v = 0;
        for (std::size_t i = pos; i < pos + count; ++i) {
            if (s[i] < '0' || s[i] > '9') {
                return false;
            }
            v = v * 10 + (s[i] - '0');
        }
        out = v;
        return true;
    };

    int year, month, day;
    if (!digits(0, 4, year) || s.size() < 10 || s[4] != '-' || !digits(5, 2, month) || s[7] != '-' ||
        !digits(8, 2, day)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                    std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }

    int hour = 0, minute = 0, second = 0, millis = 0, offset_minutes = 0;
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        if (!digits(pos + 1, 2, hour) || pos + 3 >= s.size() || s[pos + 3] != ':' || !digits(pos + 4, 2, minute)) {
            return std::nullopt;
        }
        pos += 6;
        if (pos < s.size() && s[pos] == ':') {
            if (!digits(pos + 1, 2, second)) {
                return std::nullopt;
            }
            pos += 3;
            if (pos < s.size() && s[pos] == '.') {
                ++pos;
                std::size_t start = pos;
                int scale = 100;
                while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                    if (scale > 0) {
                        millis += (s[pos] - '0') * scale;
                        scale /= 10;
                    }
                    ++pos;
                }
                if (pos == start) {
                    return std::nullopt;
                }
            }
        }
        if (hour > 23 || minute > 59 || second > 60) {
            return std::nullopt;
        }
        if (pos < s.size()) {
            if (s[pos] == 'Z' || s[pos] == 'z') {
                ++pos;
            } else if (s[pos] == '+' || s[pos] == '-') {
                int oh, om;
                int sign = s[pos] == '+' ? 1 : -1;
                if (!digits(pos + 1, 2, oh)) {
                    return std::nullopt;
                }
                std::size_t mpos = pos + 3;
                if (mpos < s.size() && s[mpos] == ':') {
                    ++mpos;
                }
                if (!digits(mpos, 2, om)) {
                    return std::nullopt;
                }
                offset_minutes = sign * (oh * 60 + om);
                pos = mpos + 2;
            }
        }
    }
    if (pos != s.size()) {
        return std::nullopt;
    }

    using namespace std::chrono;
    auto t = sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} + milliseconds{millis} -
             minutes{offset_minutes};
    return time_point_cast<milliseconds>(t);
}

/** Canonical UTC form, `YYYY-MM-DDTHH:MM:SS.mmmZ`. */
inline std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    auto day = floor<days>(t);
    year_month_day ymd{day};
    hh_mm_ss<milliseconds> hms{t - day};
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
    return buf;
}

struct Document {
    std::string id;
    std::string raw_text;
    std::string clean_text;
    Timestamp timestamp{};
    std::int64_t likes = 0;
    std::int64_t retweets = 0;
    std::optional<std::string> lang_hint;

    bool operator==(const Document&) const = default;
};

/**
 * Ordered, immutable collection of documents with unique ids.
 */
class Corpus {
public:
    Corpus() = default;

    explicit Corpus(std::vector<Document> documents, std::string provenance = "")
        : documents_(std::move(documents)), provenance_(std::move(provenance)) {
        std::unordered_set<std::string> seen;
        seen.reserve(documents_.size());
        for (const auto& d : documents_) {
            if (!seen.insert(d.id).second) {
                throw InvalidArgument("duplicate document id '" + d.id + "'");
            }
        }
    }

    const std::vector<Document>& documents() const { return documents_; }
    const Document& operator[](std::size_t i) const { return documents_[i]; }
    std::size_t size() const { return documents_.size(); }
    bool empty() const { return documents_.empty(); }
    const std::string& provenance() const { return provenance_; }

    auto begin() const { return documents_.begin(); }
    auto end() const { return documents_.end(); }

private:
    std::vector<Document> documents_;
    std::string provenance_;
};

/**********************************
 ********** Ingestion *************
 **********************************/

struct IngestOptions {
    /** Fraction of malformed non-blank lines above which ingestion fails. */
    double max_malformed_fraction = 0.10;
};

struct IngestReport {
    std::size_t lines = 0;
    std::vector<std::size_t> malformed_lines;
};

namespace detail {

inline std::optional<Document> parse_post(const std::string& line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    auto get_string = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            return std::nullopt;
        }
        return it->get<std::string>();
    };
    auto get_count = [&](const char* key) -> std::optional<std::int64_t> {
        auto it = j.find(key);
        if (it == j.end() || !it->is_number_integer()) {
            return std::nullopt;
        }
        auto v = it->get<std::int64_t>();
        if (v < 0) {
            return std::nullopt;
        }
        return v;
    };

    auto id = get_string("id");
    auto textv = get_string("text");
    auto ts = get_string("ts");
    auto likes = get_count("likes");
    auto retweets = get_count("retweets");
    if (!id || id->empty() || !textv || !ts || !likes || !retweets) {
        return std::nullopt;
    }
    auto parsed = parse_timestamp(*ts);
    if (!parsed) {
        return std::nullopt;
    }

    Document doc;
    doc.id = std::move(*id);
    doc.raw_text = std::move(*textv);
    doc.timestamp = *parsed;
    doc.likes = *likes;
    doc.retweets = *retweets;
    if (auto it = j.find("lang"); it != j.end()) {
        if (it->is_string()) {
            doc.lang_hint = it->get<std::string>();
        } else if (!it->is_null()) {
            return std::nullopt;
        }
    }
    if (auto it = j.find("clean"); it != j.end() && it->is_string()) {
        doc.clean_text = it->get<std::string>();
    }
    return doc;
}

} // namespace detail

/**
 * Reads a JSON-lines corpus file. Blank lines are skipped. Malformed records are
 * dropped and their line numbers reported; if they exceed the configured fraction
 * the whole file is rejected.
 */
inline Corpus ingest_corpus(const std::filesystem::path& path, const IngestOptions& options = {},
                            IngestReport* report = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read corpus file '" + path.string() + "'");
    }

    IngestReport local;
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0, nonblank = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        ++nonblank;
        auto doc = detail::parse_post(line);
        if (!doc) {
            local.malformed_lines.push_back(lineno);
            continue;
        }
        docs.push_back(std::move(*doc));
    }
    local.lines = lineno;

    if (nonblank == 0) {
        warn("corpus file '" + path.string() + "' contains no documents");
    }
    if (!local.malformed_lines.empty()) {
        std::string where;
        for (std::size_t i = 0; i < local.malformed_lines.size(); ++i) {
            where += (i ? "," : "") + std::to_string(local.malformed_lines[i]);
        }
        double fraction = static_cast<double>(local.malformed_lines.size()) / static_cast<double>(nonblank);
        if (fraction > options.max_malformed_fraction) {
            throw FormatError("corpus file '" + path.string() + "': " + std::to_string(local.malformed_lines.size()) +
                              " of " + std::to_string(nonblank) + " lines malformed (lines " + where + ")");
        }
        warn("skipped " + std::to_string(local.malformed_lines.size()) + " malformed line(s) in '" + path.string() +
             "': " + where);
    }

    if (report) {
        *report = std::move(local);
    }
    return Corpus(std::move(docs), "file:" + path.string());
}

/** Serializes one document in the corpus file format (plus `clean` when populated). */
inline std::string to_json_line(const Document& d) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.raw_text;
    j["ts"] = format_timestamp(d.timestamp);
    j["likes"] = d.likes;
    j["retweets"] = d.retweets;
    if (d.lang_hint) {
        j["lang"] = *d.lang_hint;
    }
    if (!d.clean_text.empty()) {
        j["clean"] = d.clean_text;
    }
    return j.dump();
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write corpus file '" + path.string() + "'");
    }
    for (const auto& d : corpus) {
        out << to_json_line(d) << '\n';
    }
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

/**********************************
 *********** Cleaning *************
 **********************************/

using StopwordLists = std::map<std::string, std::set<std::string>>;

/** English list shipped with the library (also in data/stopwords/en.txt). */
inline const std::set<std::string>& english_stopwords() {
    static const std::set<std::string> words = [] {
        std::istringstream in(
            "i me my myself we our ours ourselves you youre youve youll youd your yours yourself yourselves he him "
            "his himself she shes her hers herself it its itself they them their theirs themselves what which who "
            "whom this that thatll these those am is are was were be been being have has had having do does did "
            "doing a an the and but if or because as until while of at by for with about against between into "
            "through during before after above below to from up down in out on off over under again further then "
            "once here there when where why how all any both each few more most other some such no nor not only "
            "own same so than too very s t can will just don dont should shouldve now d ll m o re ve y ain aren "
            "arent couldn couldnt didn didnt doesn doesnt hadn hadnt hasn hasnt haven havent isn isnt ma mightn "
            "mightnt mustn mustnt needn neednt shan shant shouldn shouldnt wasn wasnt weren werent won wont wouldn "
            "wouldnt rt amp via");
        std::set<std::string> s;
        std::string w;
        while (in >> w) {
            s.insert(w);
        }
        return s;
    }();
    return words;
}

/** Reads a stopword file: one word per line, blank lines and `#` comments ignored. */
inline std::set<std::string> load_stopword_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read stopword file '" + path.string() + "'");
    }
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto w = text::to_lower(text::trim(line));
        if (!w.empty() && w[0] != '#') {
            words.insert(std::move(w));
        }
    }
    return words;
}

/**
 * Cleaning switches. There is intentionally no stemming or lemmatization option:
 * tokens keep their surface form.
 */
struct CleaningRules {
    bool remove_urls = true;
    bool remove_mentions = true;
    bool remove_emoji = true;
    bool remove_punctuation = true;
    bool remove_digits = true;
    bool remove_stopwords = true;
    bool lowercase = true;
    bool keep_hashtag_word = true;
    StopwordLists stopword_lists = {{"en", english_stopwords()}};

    /** List for a language hint, or the union of all lists when the hint is absent/unknown. */
    std::set<std::string> stopwords_for(const std::optional<std::string>& lang) const {
        if (lang) {
            if (auto it = stopword_lists.find(text::to_lower(*lang)); it != stopword_lists.end()) {
                return it->second;
            }
        }
        std::set<std::string> all;
        for (const auto& [_, words] : stopword_lists) {
            all.insert(words.begin(), words.end());
        }
        return all;
    }
};

namespace detail {

inline bool is_handle_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Removes every http(s):// or www. run up to the next ASCII whitespace.
inline std::string strip_urls(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    auto starts = [&](std::size_t at, std::string_view p) {
        if (at + p.size() > s.size()) {
            return false;
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            char c = s[at + k];
            if (c >= 'A' && c <= 'Z') {
                c = static_cast<char>(c + 32);
            }
            if (c != p[k]) {
                return false;
            }
        }
        return true;
    };
    while (i < s.size()) {
        bool boundary = i == 0 || !is_handle_char(s[i - 1]);
        if (starts(i, "http://") || starts(i, "https://") || (boundary && starts(i, "www."))) {
            while (i < s.size() && !is_ascii_space(s[i])) {
                ++i;
            }
            out.push_back(' ');
            continue;
        }
        out.push_back(s[i++]);
    }
    return out;
}

// Drops "@handle" and a retweet marker "RT" that directly precedes one.
inline std::string strip_mentions(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        bool boundary = i == 0 || !is_handle_char(s[i - 1]);
        if (boundary && s[i] == '@' && i + 1 < s.size() && is_handle_char(s[i + 1])) {
            ++i;
            while (i < s.size() && is_handle_char(s[i])) {
                ++i;
            }
            out.push_back(' ');
            continue;
        }
        if (boundary && s.substr(i, 2) == "RT") {
            std::size_t j = i + 2;
            if (j < s.size() && (s[j] == ':' || is_ascii_space(s[j]))) {
                while (j < s.size() && (s[j] == ':' || is_ascii_space(s[j]))) {
                    ++j;
                }
                if (j + 1 < s.size() && s[j] == '@' && is_handle_char(s[j + 1])) {
                    i = j;
                    continue;
                }
            }
        }
        out.push_back(s[i++]);
    }
    return out;
}

// With keep_word the '#' goes and the word stays; otherwise the whole tag goes.
inline std::string handle_hashtags(std::string_view s, bool keep_word) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '#' && i + 1 < s.size() && !is_ascii_space(s[i + 1]) && s[i + 1] != '#') {
            ++i;
            if (keep_word) {
                out.push_back(' ');
            } else {
                while (i < s.size() && !is_ascii_space(s[i])) {
                    ++i;
                }
                out.push_back(' ');
            }
            continue;
        }
        out.push_back(s[i++]);
    }
    return out;
}

} // namespace detail

/**
 * Applies the cleaning rules to one post. The result is a single-space-separated token
 * string; applying the same rules to it again changes nothing.
 */
inline std::string clean_text(std::string_view raw, const CleaningRules& rules, const std::set<std::string>& stopwords) {
    std::string s(raw);
    if (rules.remove_urls) {
        s = detail::strip_urls(s);
    }
    if (rules.remove_mentions) {
        s = detail::strip_mentions(s);
    }
    s = detail::handle_hashtags(s, rules.keep_hashtag_word);

    std::string mapped;
    mapped.reserve(s.size());
    for (char32_t cp : text::decode_utf8(s)) {
        if (text::is_control(cp) && !text::is_whitespace(cp)) {
            mapped.push_back(' ');
            continue;
        }
        if (rules.remove_emoji) {
            if (text::is_emoji_format(cp)) {
                continue;
            }
            if (text::is_emoji(cp)) {
                mapped.push_back(' ');
                continue;
            }
        }
        if (rules.remove_punctuation) {
            if (text::is_apostrophe(cp)) {
                continue;
            }
            if (text::is_punctuation(cp)) {
                mapped.push_back(' ');
                continue;
            }
        }
        if (rules.remove_digits && text::is_digit(cp)) {
            continue;
        }
        text::append_utf8(mapped, rules.lowercase ? text::to_lower(cp) : cp);
    }

    auto tokens = text::tokenize(mapped);
    if (rules.remove_stopwords && !stopwords.empty()) {
        std::vector<std::string> kept;
        kept.reserve(tokens.size());
        for (auto& t : tokens) {
            const auto& probe = rules.lowercase ? t : text::to_lower(t);
            if (!stopwords.count(probe)) {
                kept.push_back(std::move(t));
            }
        }
        tokens = std::move(kept);
    }
    return text::join(tokens, " ");
}

inline std::string clean_text(std::string_view raw, const CleaningRules& rules,
                              const std::optional<std::string>& lang = std::nullopt) {
    return clean_text(raw, rules, rules.stopwords_for(lang));
}

struct PreprocessReport {
    std::size_t dropped_empty = 0;
    std::size_t dropped_duplicates = 0;
};

/**
 * Cleans every document, drops those that become empty, then collapses exact
 * duplicate clean texts onto their first occurrence.
 */
inline Corpus preprocess(const Corpus& corpus, const CleaningRules& rules, int workers = 1,
                         PreprocessReport* report = nullptr) {
    std::vector<std::string> cleaned(corpus.size());
    auto union_list = rules.stopwords_for(std::nullopt);
    std::map<std::string, std::set<std::string>> per_lang;
    for (const auto& d : corpus) {
        if (d.lang_hint && !per_lang.count(*d.lang_hint)) {
            per_lang.emplace(*d.lang_hint, rules.stopwords_for(d.lang_hint));
        }
    }

    parallel_for(corpus.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& d = corpus[i];
            const auto& stop = d.lang_hint ? per_lang.at(*d.lang_hint) : union_list;
            cleaned[i] = clean_text(d.raw_text, rules, stop);
        }
    });

    PreprocessReport local;
    std::vector<Document> out;
    out.reserve(corpus.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (cleaned[i].empty()) {
            ++local.dropped_empty;
            continue;
        }
        if (!seen.insert(cleaned[i]).second) {
            ++local.dropped_duplicates;
            continue;
        }
        Document d = corpus[i];
        d.clean_text = std::move(cleaned[i]);
        out.push_back(std::move(d));
    }
    if (local.dropped_empty) {
        log(LogLevel::info, "preprocess: dropped " + std::to_string(local.dropped_empty) + " empty document(s)");
    }
    if (local.dropped_duplicates) {
        log(LogLevel::info,
            "preprocess: collapsed " + std::to_string(local.dropped_duplicates) + " duplicate document(s)");
    }
    if (report) {
        *report = local;
    }
    return Corpus(std::move(out), corpus.provenance());
}

/**********************************
 ******* Keywords and dates *******
 **********************************/

/**
 * Set of lowercase, whitespace-normalized keyword phrases.
 */
class KeywordSet {
public:
    KeywordSet() = default;
    KeywordSet(std::initializer_list<std::string_view> phrases) {
        for (auto p : phrases) {
            insert(p);
        }
    }

    /** Normalizes and inserts a phrase. Returns false for blanks and duplicates. */
    bool insert(std::string_view phrase) {
        auto normalized = text::join(text::tokenize(text::to_lower(phrase)), " ");
        if (normalized.empty()) {
            return false;
        }
        return phrases_.insert(std::move(normalized)).second;
    }

    const std::set<std::string>& phrases() const { return phrases_; }
    std::size_t size() const { return phrases_.size(); }
    bool empty() const { return phrases_.empty(); }
    bool contains(const std::string& p) const { return phrases_.count(p) > 0; }

    bool includes(const KeywordSet& other) const {
        return std::includes(phrases_.begin(), phrases_.end(), other.phrases_.begin(), other.phrases_.end());
    }

    bool operator==(const KeywordSet&) const = default;

private:
    std::set<std::string> phrases_;
};

/** Seed keywords the discovery loop starts from. */
inline KeywordSet seed_keywords() { return KeywordSet{"asian games", "esports"}; }

inline KeywordSet load_keyword_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read keyword file '" + path.string() + "'");
    }
    KeywordSet set;
    std::string line;
    while (std::getline(in, line)) {
        set.insert(line);
    }
    return set;
}

namespace detail {

inline bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) {
        return false;
    }
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
        if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
            return true;
        }
    }
    return false;
}

// Tokens used for keyword matching: the clean text when present, else the raw text
// normalized by the cleaning rules minus stopword removal.
inline std::vector<std::string> match_tokens(const Document& d) {
    if (!d.clean_text.empty()) {
        return text::tokenize(d.clean_text);
    }
    CleaningRules rules;
    rules.remove_stopwords = false;
    return text::tokenize(clean_text(d.raw_text, rules, std::set<std::string>{}));
}

} // namespace detail

/**
 * Keeps documents containing any keyword as a whole-token phrase, case-insensitively.
 */
inline Corpus filter_by_keywords(const Corpus& corpus, const KeywordSet& keywords) {
    if (keywords.empty()) {
        throw InvalidArgument("keyword set is empty");
    }
    std::vector<std::vector<std::string>> phrases;
    for (const auto& p : keywords.phrases()) {
        phrases.push_back(text::tokenize(p));
    }
    std::vector<Document> kept;
    for (const auto& d : corpus) {
        auto tokens = detail::match_tokens(d);
        for (const auto& p : phrases) {
            if (detail::contains_phrase(tokens, p)) {
                kept.push_back(d);
                break;
            }
        }
    }
    return Corpus(std::move(kept), corpus.provenance());
}

struct SaturationResult {
    KeywordSet updated;
    bool saturated = false;
};

/**
 * One round of keyword discovery: merge the proposals, and report saturation when
 * nothing new was proposed.
 */
inline SaturationResult saturation_step(const KeywordSet& known, const KeywordSet& proposed) {
    SaturationResult result{known, known.includes(proposed)};
    for (const auto& p : proposed.phrases()) {
        result.updated.insert(p);
    }
    return result;
}

/**
 * Co-occurrence proposal heuristic: tokens appearing in at least `min_share` of the
 * documents that match the known keywords, most frequent first.
 */
inline KeywordSet propose_cooccurring(const Corpus& corpus, const KeywordSet& known, double min_share = 0.2,
                                      std::size_t max_new = 5) {
    auto matched = filter_by_keywords(corpus, known);
    KeywordSet proposals;
    if (matched.empty()) {
        return proposals;
    }
    // Words of a known phrase are not new keywords either.
    std::set<std::string> known_words;
    for (const auto& p : known.phrases()) {
        for (auto& w : text::tokenize(p)) {
            known_words.insert(std::move(w));
        }
    }
    std::map<std::string, std::size_t> df;
    for (const auto& d : matched) {
        auto tokens = detail::match_tokens(d);
        std::set<std::string> uniq(tokens.begin(), tokens.end());
        for (const auto& t : uniq) {
            if (!known_words.count(t) && !english_stopwords().count(t)) {
                ++df[t];
            }
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [term, count] : ranked) {
        if (proposals.size() >= max_new) {
            break;
        }
        if (static_cast<double>(count) >= min_share * static_cast<double>(matched.size())) {
            proposals.insert(term);
        }
    }
    return proposals;
}

/** Keeps documents with start <= timestamp <= end. */
inline Corpus filter_by_daterange(const Corpus& corpus, Timestamp start, Timestamp end) {
    if (start > end) {
        throw InvalidArgument("date range start " + format_timestamp(start) + " is after end " + format_timestamp(end));
    }
    std::vector<Document> kept;
    for (const auto& d : corpus) {
        if (d.timestamp >= start && d.timestamp <= end) {
            kept.push_back(d);
        }
    }
    return Corpus(std::move(kept), corpus.provenance());
}

} // namespace topiclens

#endif
