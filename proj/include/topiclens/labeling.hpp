#ifndef TOPICLENS_LABELING_HPP
#define TOPICLENS_LABELING_HPP

#include "common.hpp"
#include "corpus.hpp"
#include "http.hpp"
#include "retry.hpp"
#include "text.hpp"
#include "topics.hpp"

#include "json.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file labeling.hpp
 *
 * @brief Topic labels from a chat-completion model, plus dual-rater agreement.
 */

namespace topiclens {

/**********************************
 ************ Prompts *************
 **********************************/

inline constexpr std::string_view keywords_tag = "[KEYWORDS]";
inline constexpr std::string_view documents_tag = "[DOCUMENTS]";

/**
 * Three prompt parts sent as one string, in order system + example + main.
 * Only `main_prompt` is scanned for the two tags.
 */
struct PromptTemplate {
    std::string system_prompt;
    std::string example_prompt;
    std::string main_prompt;

    void validate() const {
        auto count = [&](std::string_view tag) {
            std::size_t n = 0;
            for (auto pos = main_prompt.find(tag); pos != std::string::npos; pos = main_prompt.find(tag, pos + 1)) {
                ++n;
            }
            return n;
        };
        for (auto tag : {keywords_tag, documents_tag}) {
            auto n = count(tag);
            if (n != 1) {
                throw InvalidArgument("prompt template: main prompt must contain " + std::string(tag) +
                                      " exactly once (found " + std::to_string(n) + ")");
            }
        }
    }

    /** Reads system.txt, example.txt and main.txt from `dir`, byte for byte. */
    static PromptTemplate load(const std::filesystem::path& dir) {
        auto slurp = [&](const char* name) {
            auto path = dir / name;
            std::ifstream in(path, std::ios::binary);
            if (!in) {
                throw Error("cannot read prompt file '" + path.string() + "'");
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        PromptTemplate t{slurp("system.txt"), slurp("example.txt"), slurp("main.txt")};
        t.validate();
        return t;
    }

    bool operator==(const PromptTemplate&) const = default;
};

/** Built-in copy of data/prompts/. */
inline PromptTemplate default_prompt_template() {
    PromptTemplate t;
    t.system_prompt = "\n<s>[INST] <<SYS>>\n"
                      "You are a helpful, respectful and honest assistant for labeling topics.\n"
                      "<</SYS>>\n";
    t.example_prompt =
        "\nI have a topic that contains the following documents:\n"
        "- Traditional diets in most cultures were primarily plant-based with a little meat on top, but with the "
        "rise of industrial style meat production and factory farming, meat has become a staple food.\n"
        "- Meat, but especially beef, is the word food in terms of emissions.\n"
        "- Eating meat doesn't make you a bad person, not eating meat doesn't make you a good one.\n"
        "\nThe topic is described by the following keywords: 'meat, beef, eat, eating, emissions, steak, food, "
        "health, processed, chicken'.\n"
        "Based on the information about the topic above, please create a short label of this topic. Make sure you "
        "to only return the label and nothing more.\n"
        "[INST] Environmental impacts of eating meat\n";
    t.main_prompt = "\n[INST]\nI have a topic that contains the following documents:\n[DOCUMENTS]\n"
                    "\nThe topic is described by the following keywords: '[KEYWORDS]'.\n"
                    "\nBased on the information about the topic above, create a short label of this topic, "
                    "ensuring comprehension across languages. Make sure you to only return the label and nothing "
                    "more.\n"
                    "[/INST]\n";
    return t;
}

struct ModelParams {
    std::string model = "gpt-4-turbo-preview";
    double temperature = 0.0;
    int max_tokens = 64;
};

struct LabelRequest {
    int topic_id = 0;
    std::vector<std::string> keywords;
    std::vector<std::string> documents;
    ModelParams params;

    void validate() const {
        if (keywords.empty()) {
            throw InvalidArgument("label request for topic " + std::to_string(topic_id) + " has no keywords");
        }
        if (documents.empty()) {
            throw InvalidArgument("label request for topic " + std::to_string(topic_id) + " has no documents");
        }
    }
};

/** Line breaks inside a document become spaces so each document stays on one "- " line. */
inline std::string one_line(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
            continue;
        }
        out += (s[i] == '\n' || s[i] == '\r') ? ' ' : s[i];
    }
    return out;
}

inline std::string render_documents(const std::vector<std::string>& docs) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i) {
            out += '\n';
        }
        out += "- ";
        out += one_line(docs[i]);
    }
    return out;
}

/**
 * Substitutes the tags in one left-to-right pass over the template, so tag text inside
 * keywords or documents is copied through untouched.
 */
inline std::string build_prompt(const PromptTemplate& t, const LabelRequest& req) {
    t.validate();
    req.validate();
    const std::string docs = render_documents(req.documents);
    const std::string keywords = text::join(req.keywords, ", ");

    std::string out = t.system_prompt + t.example_prompt;
    const std::string& m = t.main_prompt;
    std::size_t pos = 0;
    while (pos < m.size()) {
        auto k = m.find(keywords_tag, pos), d = m.find(documents_tag, pos);
        auto next = std::min(k, d);
        if (next == std::string::npos) {
            out.append(m, pos, std::string::npos);
            break;
        }
        out.append(m, pos, next - pos);
        if (next == k) {
            out += keywords;
            pos = next + keywords_tag.size();
        } else {
            out += docs;
            pos = next + documents_tag.size();
        }
    }
    return out;
}

/**********************************
 *********** Providers ************
 **********************************/

class LabelProvider {
public:
    virtual ~LabelProvider() = default;
    virtual std::string complete(const LabelRequest& req, const std::string& prompt) = 0;
    virtual std::string identifier() const = 0;
};

/** Deterministic: the first four keywords joined by spaces. */
class StubLabelProvider : public LabelProvider {
public:
    std::string complete(const LabelRequest& req, const std::string&) override {
        std::vector<std::string> first(req.keywords.begin(),
                                       req.keywords.begin() + std::min<std::size_t>(4, req.keywords.size()));
        return text::join(first, " ");
    }
    std::string identifier() const override { return "stub"; }
};

/**
 * Environment:
 *   TOPICLENS_LLM_URL      chat-completions endpoint (default https://api.openai.com/v1/chat/completions)
 *   TOPICLENS_LLM_API_KEY  bearer token, optional for local endpoints
 *   TOPICLENS_LLM_MODEL    overrides the configured model id
 */
struct LlmSettings {
    std::string url = "https://api.openai.com/v1/chat/completions";
    std::string api_key;
    std::optional<std::string> model;
    int timeout_seconds = 60;
    RetryPolicy retry;

    static LlmSettings from_env() {
        LlmSettings s;
        if (const char* v = std::getenv("TOPICLENS_LLM_URL"); v && *v) {
            s.url = v;
        }
        if (const char* v = std::getenv("TOPICLENS_LLM_API_KEY"); v && *v) {
            s.api_key = v;
        }
        if (const char* v = std::getenv("TOPICLENS_LLM_MODEL"); v && *v) {
            s.model = v;
        }
        return s;
    }
};

/** Extracts choices[0].message.content (or choices[0].text) from a completion response. */
inline std::string completion_text(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty()) {
        throw FormatError("language model returned a malformed response");
    }
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].is_object() && c["message"].contains("content") &&
        c["message"]["content"].is_string()) {
        return c["message"]["content"].get<std::string>();
    }
    if (c.contains("text") && c["text"].is_string()) {
        return c["text"].get<std::string>();
    }
    throw FormatError("language model response has no text");
}

class ChatCompletionProvider : public LabelProvider {
public:
    explicit ChatCompletionProvider(LlmSettings settings) : settings_(std::move(settings)) {}

    std::string complete(const LabelRequest& req, const std::string& prompt) override {
        nlohmann::json body;
        body["model"] = settings_.model.value_or(req.params.model);
        body["temperature"] = req.params.temperature;
        body["max_tokens"] = req.params.max_tokens;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
        auto payload = body.dump();

        auto endpoint = http::split_url(settings_.url);
        httplib::Headers headers;
        if (!settings_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + settings_.api_key);
        }
        auto response = with_retries(
            settings_.retry,
            [&]() {
                httplib::Client client(endpoint.base);
                client.set_connection_timeout(10);
                client.set_read_timeout(settings_.timeout_seconds);
                return http::expect_ok(client.Post(endpoint.path, headers, payload, "application/json"),
                                       "language model");
            },
            "label request for topic " + std::to_string(req.topic_id));
        return completion_text(response);
    }

    std::string identifier() const override {
        return "chat(" + settings_.url + "," + settings_.model.value_or("config") + ")";
    }

private:
    LlmSettings settings_;
};

/**********************************
 ************ Labels **************
 **********************************/

inline constexpr std::size_t max_label_length = 120;

/** Cuts to at most `limit` code points at a word boundary, ending with an ellipsis. */
inline std::string truncate_label(std::string_view label, std::size_t limit = max_label_length) {
    auto cps = text::decode_utf8(label);
    if (cps.size() <= limit) {
        return std::string(label);
    }
    std::size_t keep = limit - 1;
    std::size_t cut = keep;
    while (cut > 0 && !text::is_whitespace(cps[cut])) {
        --cut;
    }
    if (cut == 0) {
        cut = keep;
    }
    while (cut > 0 && text::is_whitespace(cps[cut - 1])) {
        --cut;
    }
    return text::encode_utf8(std::u32string_view(cps).substr(0, cut)) + "…";
}

/**
 * Trims, joins lines with spaces, and strips one layer of matching quotes or brackets.
 * Throws FormatError when nothing is left.
 */
inline std::string parse_label(std::string_view raw) {
    auto s = text::trim(one_line(raw));
    auto cps = text::decode_utf8(s);
    static const std::pair<char32_t, char32_t> pairs[] = {
        {U'\'', U'\''}, {U'"', U'"'},   {U'`', U'`'},   {0x2018, 0x2019}, {0x201C, 0x201D},
        {U'[', U']'},   {U'(', U')'},   {U'{', U'}'},   {U'<', U'>'},     {0xAB, 0xBB},
    };
    if (cps.size() >= 2) {
        for (auto [open, close] : pairs) {
            if (cps.front() == open && cps.back() == close) {
                s = text::trim(text::encode_utf8(std::u32string_view(cps).substr(1, cps.size() - 2)));
                break;
            }
        }
    }
    if (s.empty()) {
        throw FormatError("empty label");
    }
    return truncate_label(s);
}

inline std::string fallback_label(const std::vector<std::string>& top_terms) {
    std::vector<std::string> first(top_terms.begin(), top_terms.begin() + std::min<std::size_t>(4, top_terms.size()));
    auto s = text::join(first, " ");
    return s.empty() ? std::string("(unlabeled)") : s;
}

struct LabelOutcome {
    int topic_id = 0;
    std::string label;
    bool fallback = false;
    std::string error;
};

struct LabelingParams {
    std::size_t nr_docs = 10;
    std::size_t n_keywords = 10;
    std::size_t concurrency = 4;
    ModelParams model;
};

/** Representative documents of a topic, in rank order, as raw text. */
inline std::vector<std::string> topic_documents(const Topic& topic, const Corpus& corpus, std::size_t nr_docs) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        index.emplace(corpus[i].id, i);
    }
    std::vector<std::string> docs;
    for (const auto& id : topic.representative_doc_ids) {
        if (docs.size() >= nr_docs) {
            break;
        }
        auto it = index.find(id);
        if (it != index.end()) {
            const auto& d = corpus[it->second];
            docs.push_back(d.raw_text.empty() ? d.clean_text : d.raw_text);
        }
    }
    return docs;
}

inline LabelRequest make_label_request(const Topic& topic, const Corpus& corpus, const LabelingParams& p) {
    LabelRequest req;
    req.topic_id = topic.id;
    req.keywords.assign(topic.top_terms.begin(),
                        topic.top_terms.begin() + std::min(p.n_keywords, topic.top_terms.size()));
    req.documents = topic_documents(topic, corpus, p.nr_docs);
    req.params = p.model;
    return req;
}

/**
 * Labels every topic. Provider failures other than authentication fall back to the top
 * terms with a warning; an AuthError aborts the whole run.
 */
inline std::vector<LabelOutcome> label_topics(const std::vector<Topic>& topics, const Corpus& corpus,
                                              const PromptTemplate& tmpl, LabelProvider& provider,
                                              const LabelingParams& p = {}) {
    tmpl.validate();
    std::vector<LabelOutcome> out(topics.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> auth_failed{false};
    std::exception_ptr auth_error;
    std::mutex auth_mutex;

    auto work = [&]() {
        for (;;) {
            auto i = next.fetch_add(1);
            if (i >= topics.size() || auth_failed.load()) {
                return;
            }
            const auto& topic = topics[i];
            auto& o = out[i];
            o.topic_id = topic.id;
            try {
                auto req = make_label_request(topic, corpus, p);
                o.label = parse_label(provider.complete(req, build_prompt(tmpl, req)));
            } catch (const AuthError&) {
                std::lock_guard<std::mutex> lock(auth_mutex);
                auth_failed = true;
                auth_error = std::current_exception();
                return;
            } catch (const std::exception& e) {
                o.fallback = true;
                o.error = e.what();
                o.label = fallback_label(topic.top_terms);
                warn("topic " + std::to_string(topic.id) + ": labeling failed (" + o.error +
                     "), using top terms '" + o.label + "'");
            }
        }
    };

    std::size_t threads = std::max<std::size_t>(1, std::min(p.concurrency, topics.size()));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (auth_error) {
        std::rethrow_exception(auth_error);
    }
    return out;
}

/**********************************
 ************ Ratings *************
 **********************************/

enum class Verdict { accept, reject };

inline Verdict parse_verdict(std::string_view s) {
    auto v = text::to_lower(text::trim(s));
    if (v == "accept") {
        return Verdict::accept;
    }
    if (v == "reject") {
        return Verdict::reject;
    }
    throw FormatError("unknown verdict '" + std::string(s) + "' (expected accept or reject)");
}

inline const char* to_string(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

struct RatingSheet {
    std::string rater;
    std::map<int, Verdict> verdicts;

    void set(int topic_id, Verdict v) {
        if (!verdicts.emplace(topic_id, v).second) {
            throw InvalidArgument("rating sheet '" + rater + "' has two verdicts for topic " +
                                  std::to_string(topic_id));
        }
    }
};

/** CSV with `topic_id,verdict` rows; a header row is optional. */
inline RatingSheet parse_rating_sheet(std::istream& in, std::string rater) {
    RatingSheet sheet{std::move(rater), {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto trimmed = text::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        auto comma = trimmed.find(',');
        if (comma == std::string::npos) {
            throw FormatError("rating sheet line " + std::to_string(lineno) + ": expected topic_id,verdict");
        }
        auto id = text::trim(trimmed.substr(0, comma));
        if (lineno == 1 && text::to_lower(id) == "topic_id") {
            continue;
        }
        int topic = 0;
        try {
            std::size_t used = 0;
            topic = std::stoi(id, &used);
            if (used != id.size()) {
                throw std::invalid_argument(id);
            }
        } catch (const std::exception&) {
            throw FormatError("rating sheet line " + std::to_string(lineno) + ": bad topic id '" + id + "'");
        }
        sheet.set(topic, parse_verdict(trimmed.substr(comma + 1)));
    }
    return sheet;
}

inline RatingSheet load_rating_sheet(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read rating sheet '" + path.string() + "'");
    }
    return parse_rating_sheet(in, path.stem().string());
}

/** Fraction of topics on which the two sheets agree. */
inline double rate_agreement(const RatingSheet& a, const RatingSheet& b) {
    if (a.verdicts.empty() || b.verdicts.empty()) {
        throw InvalidArgument("rate_agreement: empty rating sheet");
    }
    std::size_t same = 0;
    for (const auto& [id, v] : a.verdicts) {
        auto it = b.verdicts.find(id);
        if (it == b.verdicts.end()) {
            throw InvalidArgument("rate_agreement: topic " + std::to_string(id) + " rated by '" + a.rater +
                                  "' but not by '" + b.rater + "'");
        }
        same += it->second == v;
    }
    for (const auto& [id, v] : b.verdicts) {
        if (!a.verdicts.count(id)) {
            throw InvalidArgument("rate_agreement: topic " + std::to_string(id) + " rated by '" + b.rater +
                                  "' but not by '" + a.rater + "'");
        }
    }
    return static_cast<double>(same) / static_cast<double>(a.verdicts.size());
}

} // namespace topiclens

#endif
