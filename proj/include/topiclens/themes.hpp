#ifndef TOPICLENS_THEMES_HPP
#define TOPICLENS_THEMES_HPP

#include "common.hpp"
#include "topics.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

/**
 * @file themes.hpp
 *
 * @brief Grouping topics into hand-assigned macro-themes.
 */

namespace topiclens {

inline constexpr const char* unmapped_theme = "(unmapped)";

struct Theme {
    std::string name;
    std::vector<int> topic_ids;

    bool operator==(const Theme&) const = default;
};

struct ThemeMapping {
    std::vector<Theme> themes;

    /** Accepts `[{"name": ..., "topic_ids": [...]}, ...]` or the same list under a "themes" key. */
    static ThemeMapping parse(std::string_view json_text) {
        auto j = nlohmann::json::parse(json_text, nullptr, false);
        if (j.is_discarded()) {
            throw FormatError("theme mapping is not valid JSON");
        }
        if (j.is_object() && j.contains("themes")) {
            j = j["themes"];
        }
        if (!j.is_array()) {
            throw FormatError("theme mapping must be a JSON list of {name, topic_ids}");
        }
        ThemeMapping m;
        for (const auto& item : j) {
            if (!item.is_object() || !item.contains("name") || !item["name"].is_string() ||
                !item.contains("topic_ids") || !item["topic_ids"].is_array()) {
                throw FormatError("theme mapping entry needs a string 'name' and a list 'topic_ids'");
            }
            Theme t;
            t.name = item["name"].get<std::string>();
            for (const auto& id : item["topic_ids"]) {
                if (!id.is_number_integer()) {
                    throw FormatError("theme '" + t.name + "': topic ids must be integers");
                }
                t.topic_ids.push_back(id.get<int>());
            }
            m.themes.push_back(std::move(t));
        }
        return m;
    }

    static ThemeMapping load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw Error("cannot read theme mapping '" + path.string() + "'");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }
};

/** Percentage held as integer hundredths so that text output is exact. */
struct Percentage {
    std::int64_t hundredths = 0;

    double value() const { return static_cast<double>(hundredths) / 100.0; }

    std::string str() const {
        std::string frac = std::to_string(hundredths % 100);
        return std::to_string(hundredths / 100) + "." + (frac.size() < 2 ? "0" : "") + frac;
    }

    /** 100 * count / total rounded half away from zero to two decimals. */
    static Percentage of(std::size_t count, std::size_t total) {
        if (total == 0) {
            return {};
        }
        auto c = static_cast<std::int64_t>(count), t = static_cast<std::int64_t>(total);
        return {(20000 * c + t) / (2 * t)};
    }

    bool operator==(const Percentage&) const = default;
};

struct ThemeRow {
    std::string name;
    std::vector<int> topic_ids;
    std::size_t count = 0;
    Percentage percentage;

    bool operator==(const ThemeRow&) const = default;
};

struct ThemeSummary {
    std::vector<ThemeRow> themes;
    /** Topics in no theme, under the reserved name; absent when the mapping covers everything. */
    std::optional<ThemeRow> unmapped;
    std::size_t total = 0;

    /** Mapped rows followed by the unmapped row, if any. */
    std::vector<ThemeRow> rows() const {
        auto out = themes;
        if (unmapped) {
            out.push_back(*unmapped);
        }
        return out;
    }
};

/**
 * `topic_counts` maps topic id to document count; the total is their sum.
 * Throws on a topic id claimed twice or not present in `topic_counts`.
 */
inline ThemeSummary aggregate_themes(const std::map<int, std::size_t>& topic_counts, const ThemeMapping& mapping) {
    ThemeSummary s;
    for (const auto& [id, c] : topic_counts) {
        s.total += c;
    }
    std::map<int, std::string> owner;
    std::set<std::string> names;
    for (const auto& theme : mapping.themes) {
        if (theme.name.empty()) {
            throw InvalidArgument("theme mapping: empty theme name");
        }
        if (theme.name == unmapped_theme) {
            throw InvalidArgument(std::string("theme mapping: '") + unmapped_theme + "' is reserved");
        }
        if (!names.insert(theme.name).second) {
            throw InvalidArgument("theme mapping: theme '" + theme.name + "' listed twice");
        }
        ThemeRow row;
        row.name = theme.name;
        row.topic_ids = theme.topic_ids;
        for (int id : theme.topic_ids) {
            auto it = topic_counts.find(id);
            if (it == topic_counts.end()) {
                throw InvalidArgument("theme mapping: unknown topic id " + std::to_string(id) + " in theme '" +
                                      theme.name + "'");
            }
            auto [prev, fresh] = owner.emplace(id, theme.name);
            if (!fresh) {
                throw InvalidArgument("theme mapping: topic id " + std::to_string(id) + " appears in '" +
                                      prev->second + "' and '" + theme.name + "'");
            }
            row.count += it->second;
        }
        row.percentage = Percentage::of(row.count, s.total);
        s.themes.push_back(std::move(row));
    }
    ThemeRow rest;
    rest.name = unmapped_theme;
    for (const auto& [id, c] : topic_counts) {
        if (!owner.count(id)) {
            rest.topic_ids.push_back(id);
            rest.count += c;
        }
    }
    if (!rest.topic_ids.empty()) {
        rest.percentage = Percentage::of(rest.count, s.total);
        s.unmapped = std::move(rest);
    }
    return s;
}

inline ThemeSummary aggregate_themes(const TopicModel& model, const ThemeMapping& mapping) {
    std::map<int, std::size_t> counts;
    for (const auto& t : model.topics) {
        counts[t.id] = t.count;
    }
    return aggregate_themes(counts, mapping);
}

} // namespace topiclens

#endif
