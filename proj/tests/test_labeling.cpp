#include <topiclens/labeling.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace topiclens;

namespace {

const std::filesystem::path source_dir = TOPICLENS_SOURCE_DIR;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LabelRequest request(std::vector<std::string> keywords, std::vector<std::string> docs) {
    LabelRequest r;
    r.keywords = std::move(keywords);
    r.documents = std::move(docs);
    return r;
}

struct Capture {
    std::vector<std::string> warnings;
    LogSink saved = log_sink();
    Capture() {
        log_sink() = [this](LogLevel level, std::string_view m) {
            if (level == LogLevel::warning) warnings.emplace_back(m);
        };
    }
    ~Capture() { log_sink() = saved; }
};

RetryPolicy no_sleep() {
    RetryPolicy r;
    r.sleep = nullptr;
    return r;
}

} // namespace

/**********************************
 ************ Prompts *************
 **********************************/

TEST(Prompt, SubstitutionContract) {
    auto out = build_prompt(default_prompt_template(), request({"a", "b"}, {"d1", "d2"}));
    EXPECT_NE(out.find("'a, b'"), std::string::npos);
    EXPECT_NE(out.find("\n- d1\n- d2\n"), std::string::npos);
    EXPECT_EQ(out.find("[KEYWORDS]"), std::string::npos);
    EXPECT_EQ(out.find("[DOCUMENTS]"), std::string::npos);
}

TEST(Prompt, StoredTemplateMatchesGolden) {
    auto t = PromptTemplate::load(source_dir / "data/prompts");
    auto req = request({"event", "medal", "esports", "debut", "hangzhou", "medals", "first", "asiangames", "make",
                        "sport"},
                       {"esports makes its medal debut at the hangzhou asian games",
                        "first esports medals awarded at asiangames hangzhou",
                        "is esports a sport? the medal event says yes"});
    EXPECT_EQ(build_prompt(t, req), slurp(source_dir / "tests/data/prompt_golden.txt"));
}

TEST(Prompt, BuiltinTemplateEqualsStoredFiles) {
    EXPECT_EQ(default_prompt_template(), PromptTemplate::load(source_dir / "data/prompts"));
}

TEST(Prompt, TemplateStartsWithSystemRole) {
    auto t = default_prompt_template();
    EXPECT_NE(t.system_prompt.find("You are a helpful, respectful and honest assistant for labeling topics"),
              std::string::npos);
    auto out = build_prompt(t, request({"k"}, {"d"}));
    EXPECT_EQ(out.rfind(t.system_prompt + t.example_prompt, 0), 0u);
}

TEST(Prompt, TagTextInsideDocumentsIsNotExpanded) {
    auto out = build_prompt(default_prompt_template(), request({"x"}, {"see [KEYWORDS] and [DOCUMENTS]"}));
    EXPECT_NE(out.find("- see [KEYWORDS] and [DOCUMENTS]\n"), std::string::npos);
    EXPECT_NE(out.find("keywords: 'x'."), std::string::npos);
}

TEST(Prompt, MultiLineDocumentsStayOnOneLine) {
    auto out = build_prompt(default_prompt_template(), request({"x"}, {"first\nsecond\r\nthird"}));
    EXPECT_NE(out.find("- first second third\n"), std::string::npos);
}

TEST(Prompt, InvalidTemplatesAndRequests) {
    auto t = default_prompt_template();
    auto bad = t;
    bad.main_prompt = "no tags";
    EXPECT_THROW(build_prompt(bad, request({"a"}, {"d"})), InvalidArgument);
    bad.main_prompt = "[KEYWORDS] [DOCUMENTS] [KEYWORDS]";
    EXPECT_THROW(bad.validate(), InvalidArgument);
    EXPECT_THROW(build_prompt(t, request({}, {"d"})), InvalidArgument);
    EXPECT_THROW(build_prompt(t, request({"a"}, {})), InvalidArgument);
    EXPECT_THROW(PromptTemplate::load(source_dir / "no-such-dir"), Error);
}

TEST(Prompt, FuzzedRequestsLeaveNoTags) {
    std::mt19937_64 rng(99);
    const std::string alphabet = "abc xyz[]KEYWORDSdocuments,'\"\n-\xc3\xa9\xe7\x8e\x8b";
    auto word = [&](std::size_t max) {
        std::string s;
        std::size_t len = 1 + rng() % max;
        for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        return s;
    };
    auto t = default_prompt_template();
    for (int trial = 0; trial < 200; ++trial) {
        LabelRequest r;
        for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) r.keywords.push_back(word(12));
        for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) r.documents.push_back(word(80));
        bool tag_in_input = false;
        for (const auto* v : {&r.keywords, &r.documents})
            for (const auto& s : *v)
                tag_in_input |= s.find("[KEYWORDS]") != std::string::npos || s.find("[DOCUMENTS]") != std::string::npos;
        if (tag_in_input) continue;
        auto out = build_prompt(t, r);
        ASSERT_EQ(out.find("[KEYWORDS]"), std::string::npos);
        ASSERT_EQ(out.find("[DOCUMENTS]"), std::string::npos);
        ASSERT_EQ(out, build_prompt(t, r));
    }
}

/**********************************
 *********** Providers ************
 **********************************/

TEST(Stub, FirstFourKeywords) {
    StubLabelProvider stub;
    auto req = request({"esports", "medal", "debut", "hangzhou", "medals"}, {"d"});
    EXPECT_EQ(stub.complete(req, ""), "esports medal debut hangzhou");
    EXPECT_EQ(stub.complete(request({"solo"}, {"d"}), ""), "solo");
}

namespace {

struct FakeChatService {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> calls{0};
    int fail_first = 0;
    int fail_status = 500;
    int delay_ms = 0;
    std::string reply = "  'Esports at the Asian Games'\n";
    nlohmann::json last_body;
    std::string last_auth;
    std::mutex mutex;

    FakeChatService() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            int n = ++calls;
            if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            {
                std::lock_guard<std::mutex> lock(mutex);
                last_body = nlohmann::json::parse(req.body);
                last_auth = req.get_header_value("Authorization");
            }
            if (n <= fail_first) {
                res.status = fail_status;
                return;
            }
            nlohmann::json out = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", reply}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeChatService() {
        server.stop();
        thread.join();
    }
    LlmSettings settings() const {
        LlmSettings s;
        s.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        s.api_key = "sk-test";
        s.retry = no_sleep();
        return s;
    }
};

} // namespace

TEST(ChatProvider, SendsChatCompletionRequest) {
    FakeChatService svc;
    ChatCompletionProvider p(svc.settings());
    auto req = request({"a"}, {"d"});
    auto prompt = build_prompt(default_prompt_template(), req);
    EXPECT_EQ(parse_label(p.complete(req, prompt)), "Esports at the Asian Games");
    EXPECT_EQ(svc.last_body["model"], "gpt-4-turbo-preview");
    EXPECT_EQ(svc.last_body["temperature"], 0.0);
    EXPECT_EQ(svc.last_body["messages"][0]["role"], "user");
    EXPECT_EQ(svc.last_body["messages"][0]["content"], prompt);
    EXPECT_EQ(svc.last_auth, "Bearer sk-test");
}

TEST(ChatProvider, TransientFailuresRetried) {
    FakeChatService svc;
    svc.fail_first = 2;
    Capture log;
    ChatCompletionProvider p(svc.settings());
    EXPECT_EQ(parse_label(p.complete(request({"a"}, {"d"}), "prompt")), "Esports at the Asian Games");
    EXPECT_EQ(svc.calls.load(), 3);
    EXPECT_EQ(log.warnings.size(), 2u);
}

TEST(ChatProvider, TimeoutsFallBackToTopTerms) {
    FakeChatService svc;
    svc.delay_ms = 1500;
    auto s = svc.settings();
    s.timeout_seconds = 1;
    ChatCompletionProvider p(s);
    Topic t;
    t.id = 3;
    t.top_terms = {"games", "asian", "play", "lpl", "lolesports"};
    t.representative_doc_ids = {"x"};
    Corpus corpus({Document{"x", "asian games play", "asian games play", {}, 0, 0, {}}});
    Capture log;
    auto out = label_topics({t}, corpus, default_prompt_template(), p);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_TRUE(out[0].fallback);
    EXPECT_EQ(out[0].label, "games asian play lpl");
    EXPECT_EQ(svc.calls.load(), 3);
    EXPECT_FALSE(log.warnings.empty());
}

TEST(ChatProvider, AuthFailureIsFatal) {
    FakeChatService svc;
    svc.fail_first = 100;
    svc.fail_status = 401;
    ChatCompletionProvider p(svc.settings());
    Topic t;
    t.top_terms = {"a"};
    t.representative_doc_ids = {"x"};
    Corpus corpus({Document{"x", "a", "a", {}, 0, 0, {}}});
    EXPECT_THROW(label_topics({t}, corpus, default_prompt_template(), p), AuthError);
    EXPECT_EQ(svc.calls.load(), 1);
}

TEST(ChatProvider, MalformedResponse) {
    EXPECT_THROW(completion_text("{}"), FormatError);
    EXPECT_THROW(completion_text("not json"), FormatError);
    EXPECT_EQ(completion_text(R"({"choices":[{"text":"legacy"}]})"), "legacy");
}

TEST(ChatProvider, SettingsFromEnvironment) {
    ::setenv("TOPICLENS_LLM_URL", "http://localhost:9/v1/chat/completions", 1);
    ::setenv("TOPICLENS_LLM_MODEL", "local-model", 1);
    ::unsetenv("TOPICLENS_LLM_API_KEY");
    auto s = LlmSettings::from_env();
    EXPECT_EQ(s.url, "http://localhost:9/v1/chat/completions");
    EXPECT_EQ(s.model, "local-model");
    EXPECT_TRUE(s.api_key.empty());
    ::unsetenv("TOPICLENS_LLM_URL");
    ::unsetenv("TOPICLENS_LLM_MODEL");
    EXPECT_EQ(LlmSettings::from_env().url, "https://api.openai.com/v1/chat/completions");
}

/**********************************
 ************ Labels **************
 **********************************/

TEST(ParseLabel, TrimAndUnquote) {
    EXPECT_EQ(parse_label("  'Esports at the Asian Games'\n"), "Esports at the Asian Games");
    EXPECT_EQ(parse_label("Esports as a Medal Event at the Asian Games"),
              "Esports as a Medal Event at the Asian Games");
    EXPECT_EQ(parse_label("[\"Nested\"]"), "\"Nested\"");
    EXPECT_EQ(parse_label("\xe2\x80\x9c" "Curly" "\xe2\x80\x9d"), "Curly");
    EXPECT_EQ(parse_label("Line one\nline two"), "Line one line two");
    EXPECT_EQ(parse_label("'unbalanced"), "'unbalanced");
}

TEST(ParseLabel, EmptyIsError) {
    EXPECT_THROW(parse_label(""), FormatError);
    EXPECT_THROW(parse_label(" \n\t "), FormatError);
    EXPECT_THROW(parse_label("''"), FormatError);
}

TEST(ParseLabel, LongLabelsTruncatedAtWordBoundary) {
    std::string words;
    for (int i = 0; i < 40; ++i) words += "word" + std::to_string(i) + " ";
    auto out = parse_label(words);
    auto cps = text::decode_utf8(out);
    EXPECT_LE(cps.size(), 120u);
    EXPECT_EQ(cps.back(), U'…');
    auto body = out.substr(0, out.size() - 3);
    EXPECT_EQ(words.rfind(body, 0), 0u);
    EXPECT_EQ(words[body.size()], ' ');

    std::string one_word(200, 'x');
    EXPECT_EQ(text::decode_utf8(parse_label(one_word)).size(), 120u);
    EXPECT_EQ(parse_label(std::string(120, 'y')), std::string(120, 'y'));
}

TEST(LabelTopics, StubLabelsEveryTopic) {
    std::vector<Document> docs;
    std::vector<Topic> topics;
    for (int t = 0; t < 9; ++t) {
        Topic topic;
        topic.id = t;
        topic.top_terms = {"k" + std::to_string(t), "shared", "more", "terms", "extra"};
        for (int d = 0; d < 3; ++d) {
            std::string id = std::to_string(t) + "-" + std::to_string(d);
            docs.push_back(Document{id, "text " + id, "text " + id, {}, 0, 0, {}});
            topic.representative_doc_ids.push_back(id);
        }
        topics.push_back(topic);
    }
    Topic empty;
    empty.id = 9;
    empty.top_terms = {"lonely"};
    topics.push_back(empty);
    Corpus corpus(docs);
    StubLabelProvider stub;
    Capture log;
    LabelingParams p;
    auto many = label_topics(topics, corpus, default_prompt_template(), stub, p);
    p.concurrency = 1;
    auto one = label_topics(topics, corpus, default_prompt_template(), stub, p);
    ASSERT_EQ(many.size(), topics.size());
    for (std::size_t i = 0; i < many.size(); ++i) {
        EXPECT_EQ(many[i].topic_id, topics[i].id);
        EXPECT_EQ(many[i].label, one[i].label);
        EXPECT_FALSE(many[i].label.empty());
    }
    EXPECT_EQ(many[0].label, "k0 shared more terms");
    EXPECT_TRUE(many[9].fallback);
    EXPECT_EQ(many[9].label, "lonely");
}

TEST(LabelTopics, RequestUsesTopTenKeywordsAndDocs) {
    Topic t;
    t.id = 1;
    for (int i = 0; i < 12; ++i) t.top_terms.push_back("t" + std::to_string(i));
    std::vector<Document> docs;
    for (int i = 0; i < 12; ++i) {
        docs.push_back(Document{"d" + std::to_string(i), "raw " + std::to_string(i), "clean", {}, 0, 0, {}});
        t.representative_doc_ids.push_back("d" + std::to_string(i));
    }
    auto req = make_label_request(t, Corpus(docs), {});
    EXPECT_EQ(req.keywords.size(), 10u);
    ASSERT_EQ(req.documents.size(), 10u);
    EXPECT_EQ(req.documents[0], "raw 0");
}

/**********************************
 ************ Ratings *************
 **********************************/

namespace {

RatingSheet sheet(const std::string& rater, int n, int flip = -1, int offset = 0) {
    RatingSheet s{rater, {}};
    for (int i = 0; i < n; ++i) s.set(i + offset, i == flip ? Verdict::reject : Verdict::accept);
    return s;
}

} // namespace

TEST(Agreement, Examples) {
    EXPECT_DOUBLE_EQ(rate_agreement(sheet("a", 35), sheet("b", 35)), 1.0);
    EXPECT_NEAR(rate_agreement(sheet("a", 35), sheet("b", 35, 7)), 34.0 / 35.0, 1e-15);
    EXPECT_NEAR(34.0 / 35.0, 0.971, 5e-4);
    EXPECT_THROW(rate_agreement(sheet("a", 5), sheet("b", 5, -1, 100)), InvalidArgument);
    EXPECT_THROW(rate_agreement(sheet("a", 5), sheet("b", 6)), InvalidArgument);
    EXPECT_THROW(rate_agreement(sheet("a", 0), sheet("b", 0)), InvalidArgument);
}

TEST(Agreement, Symmetric) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        RatingSheet a{"a", {}}, b{"b", {}};
        for (int i = 0; i < 30; ++i) {
            a.set(i, rng() % 2 ? Verdict::accept : Verdict::reject);
            b.set(i, rng() % 2 ? Verdict::accept : Verdict::reject);
        }
        EXPECT_EQ(rate_agreement(a, b), rate_agreement(b, a));
    }
}

TEST(Agreement, CsvSheets) {
    std::istringstream in("topic_id,verdict\n0,accept\n1, Reject\n\n2,accept\n");
    auto s = parse_rating_sheet(in, "r1");
    ASSERT_EQ(s.verdicts.size(), 3u);
    EXPECT_EQ(s.verdicts.at(1), Verdict::reject);

    std::istringstream dup("0,accept\n0,reject\n");
    EXPECT_THROW(parse_rating_sheet(dup, "r"), InvalidArgument);
    std::istringstream bad("0,maybe\n");
    EXPECT_THROW(parse_rating_sheet(bad, "r"), FormatError);
    std::istringstream bad_id("x1,accept\n");
    EXPECT_THROW(parse_rating_sheet(bad_id, "r"), FormatError);
}
