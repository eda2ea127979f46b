// topiclens: command-line front end for the topic pipeline.

#include <topiclens/topiclens.hpp>

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace tl = topiclens;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_stage = 2;

struct Options {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string provider;
    std::string labeler;
    bool log_json = false;
    bool quiet = false;
    bool verbose = false;
};

void install_logger(const Options& o) {
    auto min = o.verbose ? tl::LogLevel::debug : o.quiet ? tl::LogLevel::warning : tl::LogLevel::info;
    bool json = o.log_json;
    tl::log_sink() = [min, json](tl::LogLevel level, std::string_view msg) {
        if (level < min) return;
        if (json) {
            nlohmann::ordered_json j{{"level", tl::to_string(level)}, {"message", msg}};
            std::cerr << j.dump() << '\n';
        } else {
            std::cerr << "topiclens: " << tl::to_string(level) << ": " << msg << '\n';
        }
    };
}

void report_errors(const std::vector<std::string>& errors) {
    for (const auto& e : errors) {
        tl::log(tl::LogLevel::error, e);
    }
}

/** Config file plus command-line overrides; nullopt after printing errors. */
std::optional<tl::PipelineConfig> load_config(const Options& o) {
    if (o.config_path.empty()) {
        report_errors({"--config is required"});
        return std::nullopt;
    }
    auto r = tl::validate_config(o.config_path);
    if (!r.config) {
        report_errors(r.errors);
        return std::nullopt;
    }
    auto c = *r.config;
    std::vector<std::string> errors = r.errors;
    if (!o.out.empty()) {
        c.out_dir = std::filesystem::absolute(o.out);
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.workers) {
        c.workers = *o.workers;
    }
    if (!o.labeler.empty()) {
        c.labeler = tl::parse_labeler_kind(o.labeler);
    }
    if (!o.provider.empty()) {
        c.embedding.kind = tl::parse_provider_kind(o.provider);
        if (c.embedding.kind != tl::ProviderKind::hash_test && c.embedding.location.empty()) {
            errors.push_back("--provider " + o.provider + " needs embedding.location in the config");
        }
    }
    if (!errors.empty()) {
        report_errors(errors);
        return std::nullopt;
    }
    c.propagate();
    return c;
}

int run_stages(const Options& o, const std::vector<tl::Stage>& stages, bool reuse) {
    auto cfg = load_config(o);
    if (!cfg) return exit_usage;
    try {
        tl::Pipeline p(*cfg);
        if (stages.size() > 1) {
            p.run(reuse);
        } else {
            p.run_stage(stages.front());
        }
        tl::log(tl::LogLevel::info, "output in " + p.out_dir().string());
    } catch (const tl::StageError& e) {
        tl::log(tl::LogLevel::error, std::string("stage failed: ") + e.what());
        return exit_stage;
    } catch (const std::exception& e) {
        tl::log(tl::LogLevel::error, e.what());
        return exit_stage;
    }
    return exit_ok;
}

/**
 * Keyword discovery: each round shows co-occurring candidates among matching posts and
 * reads extra keywords from stdin (comma separated; empty line accepts the candidates).
 */
int saturate(const std::string& corpus_path, const std::string& keywords_path, const std::string& write_path,
             bool automatic, std::size_t max_rounds, double min_share) {
    try {
        auto corpus = tl::ingest_corpus(corpus_path);
        auto known = keywords_path.empty() ? tl::seed_keywords() : tl::load_keyword_file(keywords_path);
        for (std::size_t round = 1; round <= max_rounds; ++round) {
            auto candidates = tl::propose_cooccurring(corpus, known, min_share);
            std::cout << "round " << round << ": " << known.size() << " keywords, "
                      << tl::filter_by_keywords(corpus, known).size() << " matching posts\n";
            tl::KeywordSet proposed;
            for (const auto& c : candidates.phrases()) {
                if (!known.contains(c)) proposed.insert(c);
            }
            if (!proposed.empty()) {
                std::cout << "  candidates: " << tl::text::join({proposed.phrases().begin(), proposed.phrases().end()}, ", ")
                          << '\n';
            }
            if (!automatic) {
                std::cout << "  add keywords (comma separated, '-' rejects candidates, empty accepts): " << std::flush;
                std::string line;
                if (!std::getline(std::cin, line)) {
                    std::cout << '\n';
                    break;
                }
                line = tl::text::trim(line);
                if (line == "-") {
                    proposed = {};
                } else {
                    std::istringstream parts(line);
                    std::string part;
                    while (std::getline(parts, part, ',')) proposed.insert(part);
                }
            }
            auto step = tl::saturation_step(known, proposed);
            known = step.updated;
            if (step.saturated) {
                std::cout << "saturated after " << round << " round(s)\n";
                break;
            }
        }
        std::string out;
        for (const auto& k : known.phrases()) out += k + "\n";
        if (write_path.empty()) {
            std::cout << out;
        } else {
            tl::write_file(write_path, out);
            std::cout << "wrote " << known.size() << " keywords to " << write_path << '\n';
        }
    } catch (const std::exception& e) {
        tl::log(tl::LogLevel::error, e.what());
        return exit_stage;
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"topiclens: topic modeling pipeline for short social media posts"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", tl::tool_version);

    Options o;
    app.add_option("-c,--config", o.config_path, "pipeline configuration file");
    app.add_option("--out", o.out, "output directory (overrides output.dir)");
    app.add_option("--seed", o.seed, "global seed");
    app.add_option("--workers", o.workers, "parallelism cap; 1 is deterministic")->check(CLI::PositiveNumber);
    app.add_option("--provider", o.provider, "embedding provider")
        ->check(CLI::IsMember({"file", "http", "hash-test"}));
    app.add_option("--labeler", o.labeler, "label provider")->check(CLI::IsMember({"stub", "live"}));
    app.add_flag("--log-json", o.log_json, "JSON-lines logs on stderr");
    app.add_flag("-q,--quiet", o.quiet, "warnings and errors only");
    app.add_flag("-v,--verbose", o.verbose, "debug output");

    std::vector<std::pair<CLI::App*, tl::Stage>> stage_cmds;
    const std::map<tl::Stage, std::string> blurbs{
        {tl::Stage::ingest, "read the corpus and apply date and keyword filters"},
        {tl::Stage::preprocess, "clean and deduplicate posts"},
        {tl::Stage::embed, "embed posts"},
        {tl::Stage::fit, "reduce dimensionality and cluster"},
        {tl::Stage::represent, "c-TF-IDF topics, outlier reassignment, topic map"},
        {tl::Stage::label, "label topics"},
        {tl::Stage::themes, "aggregate topics into themes"},
        {tl::Stage::report, "write the report bundle"},
    };
    for (auto s : tl::all_stages) {
        stage_cmds.emplace_back(app.add_subcommand(tl::to_string(s), blurbs.at(s)), s);
    }

    auto* run = app.add_subcommand("run", "every stage in order, reusing up-to-date caches");
    bool force = false;
    run->add_flag("--force", force, "ignore caches");

    auto* sat = app.add_subcommand("saturate", "interactive keyword discovery loop");
    std::string sat_corpus, sat_keywords, sat_write;
    bool sat_auto = false;
    std::size_t sat_rounds = 10;
    double sat_share = 0.2;
    sat->add_option("--corpus", sat_corpus, "JSON-lines corpus")->required()->check(CLI::ExistingFile);
    sat->add_option("--keywords", sat_keywords, "starting keywords (default: the seed pair)")
        ->check(CLI::ExistingFile);
    sat->add_option("--write", sat_write, "write the final keyword set here");
    sat->add_flag("--auto", sat_auto, "accept candidates without prompting");
    sat->add_option("--max-rounds", sat_rounds, "")->check(CLI::PositiveNumber);
    sat->add_option("--min-share", sat_share, "candidate must occur in this share of matching posts")
        ->check(CLI::Range(0.0, 1.0));

    auto* config = app.add_subcommand("config", "print configuration");
    bool print_defaults = false, print_effective = false;
    auto* defaults_flag = config->add_flag("--print-defaults", print_defaults, "every key with its documented default");
    config->add_flag("--print-effective", print_effective, "settings after overrides, as JSON")
        ->excludes(defaults_flag);

    auto* validate = app.add_subcommand("validate", "check the configuration and referenced files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }
    install_logger(o);

    try {
        for (auto& [cmd, stage] : stage_cmds) {
            if (*cmd) return run_stages(o, {stage}, false);
        }
        if (*run) {
            return run_stages(o, {std::begin(tl::all_stages), std::end(tl::all_stages)}, !force);
        }
        if (*sat) {
            return saturate(sat_corpus, sat_keywords, sat_write, sat_auto, sat_rounds, sat_share);
        }
        if (*config) {
            if (print_effective) {
                auto cfg = load_config(o);
                if (!cfg) return exit_usage;
                std::cout << tl::config_to_json(*cfg).dump(2) << '\n';
            } else {
                std::cout << tl::default_config_text();
            }
            return exit_ok;
        }
        if (*validate) {
            auto cfg = load_config(o);
            if (!cfg) return exit_usage;
            std::cout << "ok: " << o.config_path << '\n';
            return exit_ok;
        }
    } catch (const std::exception& e) {
        tl::log(tl::LogLevel::error, e.what());
        return exit_usage;
    }
    return exit_usage;
}
