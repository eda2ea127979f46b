#ifndef TOPICLENS_REPORT_HPP
#define TOPICLENS_REPORT_HPP

#include "common.hpp"
#include "labeling.hpp"
#include "text.hpp"
#include "themes.hpp"
#include "topics.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

/**
 * @file report.hpp
 *
 * @brief Topic, label, theme and map tables, written as CSV, JSON and Markdown.
 */

namespace topiclens {

/**********************************
 ************* CSV ****************
 **********************************/

namespace csv {

inline std::string quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

inline std::string row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += quote(fields[i]);
    }
    return out + "\n";
}

/** RFC 4180 reader; quoted fields may contain commas, quotes and line breaks. */
inline std::vector<std::vector<std::string>> parse(std::string_view s) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < s.size() && s[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
                ++i;
            }
            if (any || !field.empty()) {
                fields.push_back(std::move(field));
                rows.push_back(std::move(fields));
            }
            fields.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) {
        throw FormatError("CSV: unterminated quoted field");
    }
    if (any || !field.empty()) {
        fields.push_back(std::move(field));
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace csv

/**********************************
 ************ Records *************
 **********************************/

struct TopicRecord {
    int topic_id = 0;
    std::size_t count = 0;
    std::vector<std::string> terms;

    bool operator==(const TopicRecord&) const = default;
};

struct LabelRecord {
    int topic_id = 0;
    std::size_t count = 0;
    std::string label;

    bool operator==(const LabelRecord&) const = default;
};

struct MapRecord {
    int topic_id = 0;
    double x = 0, y = 0;
    std::size_t size = 0;
    std::string label;

    bool operator==(const MapRecord&) const = default;
};

struct ReportBundle {
    std::vector<TopicRecord> topics;
    std::vector<LabelRecord> labels;
    std::vector<ThemeRow> themes;
    std::vector<MapRecord> map;
    std::size_t total_documents = 0;
    std::size_t noise = 0;
};

/**
 * Assembles the tables. Topics without an entry in `labels` fall back to their top
 * terms; `map_points` must hold one point per topic.
 */
inline ReportBundle make_report(const TopicModel& model, const std::map<int, std::string>& labels,
                                const ThemeSummary& themes, const std::vector<MapPoint>& map_points) {
    ReportBundle b;
    b.noise = model.assignment.noise_count();
    b.total_documents = model.total_assigned() + b.noise;
    std::map<int, std::string> label_of;
    for (const auto& t : model.topics) {
        auto it = labels.find(t.id);
        label_of[t.id] = it != labels.end() ? it->second : t.label.value_or(fallback_label(t.top_terms));
        b.topics.push_back({t.id, t.count, t.top_terms});
        b.labels.push_back({t.id, t.count, label_of[t.id]});
    }
    b.themes = themes.rows();
    if (map_points.size() != model.topics.size()) {
        throw InvalidArgument("report: " + std::to_string(map_points.size()) + " map points for " +
                              std::to_string(model.topics.size()) + " topics");
    }
    for (const auto& p : map_points) {
        auto it = label_of.find(p.topic_id);
        if (it == label_of.end()) {
            throw InvalidArgument("report: map point for unknown topic " + std::to_string(p.topic_id));
        }
        b.map.push_back({p.topic_id, p.x, p.y, p.size, it->second});
    }
    return b;
}

/**********************************
 ********** Serializers ***********
 **********************************/

using ojson = nlohmann::ordered_json;

inline std::string join_ids(const std::vector<int>& ids, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += std::to_string(ids[i]);
    }
    return out;
}

inline std::string topics_csv(const ReportBundle& b) {
    std::string out = csv::row({"topic_id", "count", "terms"});
    for (const auto& t : b.topics) {
        out += csv::row({std::to_string(t.topic_id), std::to_string(t.count), text::join(t.terms, " ")});
    }
    return out;
}

inline std::string topics_json(const ReportBundle& b) {
    ojson j = ojson::array();
    for (const auto& t : b.topics) {
        j.push_back({{"topic_id", t.topic_id}, {"count", t.count}, {"terms", t.terms}});
    }
    return j.dump(2) + "\n";
}

inline std::string labels_csv(const ReportBundle& b) {
    std::string out = csv::row({"topic_id", "count", "label"});
    for (const auto& l : b.labels) {
        out += csv::row({std::to_string(l.topic_id), std::to_string(l.count), l.label});
    }
    return out;
}

inline std::string labels_json(const ReportBundle& b) {
    ojson j = ojson::array();
    for (const auto& l : b.labels) {
        j.push_back({{"topic_id", l.topic_id}, {"count", l.count}, {"label", l.label}});
    }
    return j.dump(2) + "\n";
}

inline std::string themes_csv(const ReportBundle& b) {
    std::string out = csv::row({"theme", "topic_ids", "count", "percentage"});
    for (const auto& t : b.themes) {
        out += csv::row({t.name, join_ids(t.topic_ids, " "), std::to_string(t.count), t.percentage.str()});
    }
    return out;
}

inline std::string themes_json(const ReportBundle& b) {
    ojson j = ojson::array();
    for (const auto& t : b.themes) {
        j.push_back({{"theme", t.name},
                     {"topic_ids", t.topic_ids},
                     {"count", t.count},
                     {"percentage", t.percentage.value()}});
    }
    return j.dump(2) + "\n";
}

inline std::string map_json(const ReportBundle& b) {
    ojson j = ojson::array();
    for (const auto& m : b.map) {
        j.push_back({{"topic_id", m.topic_id}, {"x", m.x}, {"y", m.y}, {"size", m.size}, {"label", m.label}});
    }
    return j.dump(2) + "\n";
}

inline std::string md_cell(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += '\\';
        }
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out;
}

inline std::string report_markdown(const ReportBundle& b) {
    std::ostringstream o;
    o << "# Topic report\n\n";
    o << b.topics.size() << " topics over " << b.total_documents << " documents, " << b.noise
      << " left as outliers.\n\n";
    o << "## Topics\n\n| Topic | Count | c-TF-IDF |\n|---:|---:|---|\n";
    for (const auto& t : b.topics) {
        o << "| " << t.topic_id << " | " << t.count << " | " << md_cell(text::join(t.terms, ", ")) << " |\n";
    }
    o << "\n## Labels\n\n| Topic | Count | Label |\n|---:|---:|---|\n";
    for (const auto& l : b.labels) {
        o << "| " << l.topic_id << " | " << l.count << " | " << md_cell(l.label) << " |\n";
    }
    o << "\n## Themes\n\n| Theme | Topics | Count | % |\n|---|---|---:|---:|\n";
    for (const auto& t : b.themes) {
        o << "| " << md_cell(t.name) << " | " << join_ids(t.topic_ids, ", ") << " | " << t.count << " | "
          << t.percentage.str() << " |\n";
    }
    return o.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/** Fixed file names, all in `dir`. */
inline std::vector<std::filesystem::path> write_report(const ReportBundle& b, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create report directory '" + dir.string() + "': " + ec.message());
    }
    const std::pair<const char*, std::string> files[] = {
        {"topics.csv", topics_csv(b)}, {"topics.json", topics_json(b)}, {"labels.csv", labels_csv(b)},
        {"labels.json", labels_json(b)}, {"themes.csv", themes_csv(b)}, {"themes.json", themes_json(b)},
        {"map.json", map_json(b)},     {"report.md", report_markdown(b)},
    };
    std::vector<std::filesystem::path> written;
    for (const auto& [name, content] : files) {
        write_file(dir / name, content);
        written.push_back(dir / name);
    }
    return written;
}

/**********************************
 ************ Readers *************
 **********************************/

namespace detail {

inline std::vector<std::vector<std::string>> csv_body(const std::string& s, std::size_t columns, const char* what) {
    auto rows = csv::parse(s);
    if (rows.empty()) {
        throw FormatError(std::string(what) + ": missing header");
    }
    rows.erase(rows.begin());
    for (const auto& r : rows) {
        if (r.size() != columns) {
            throw FormatError(std::string(what) + ": expected " + std::to_string(columns) + " columns");
        }
    }
    return rows;
}

inline std::vector<std::string> split_spaces(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) {
        out.push_back(w);
    }
    return out;
}

inline Percentage parse_percentage(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos || s.size() - dot != 3) {
        throw FormatError("bad percentage '" + s + "'");
    }
    return {std::stoll(s.substr(0, dot)) * 100 + std::stoll(s.substr(dot + 1))};
}

} // namespace detail

inline std::vector<TopicRecord> read_topics_csv(const std::string& s) {
    std::vector<TopicRecord> out;
    for (auto& r : detail::csv_body(s, 3, "topics.csv")) {
        out.push_back({std::stoi(r[0]), std::stoul(r[1]), detail::split_spaces(r[2])});
    }
    return out;
}

inline std::vector<TopicRecord> read_topics_json(const std::string& s) {
    std::vector<TopicRecord> out;
    for (const auto& j : nlohmann::json::parse(s)) {
        out.push_back({j.at("topic_id").get<int>(), j.at("count").get<std::size_t>(),
                       j.at("terms").get<std::vector<std::string>>()});
    }
    return out;
}

inline std::vector<LabelRecord> read_labels_csv(const std::string& s) {
    std::vector<LabelRecord> out;
    for (auto& r : detail::csv_body(s, 3, "labels.csv")) {
        out.push_back({std::stoi(r[0]), std::stoul(r[1]), r[2]});
    }
    return out;
}

inline std::vector<LabelRecord> read_labels_json(const std::string& s) {
    std::vector<LabelRecord> out;
    for (const auto& j : nlohmann::json::parse(s)) {
        out.push_back(
            {j.at("topic_id").get<int>(), j.at("count").get<std::size_t>(), j.at("label").get<std::string>()});
    }
    return out;
}

inline std::vector<ThemeRow> read_themes_csv(const std::string& s) {
    std::vector<ThemeRow> out;
    for (auto& r : detail::csv_body(s, 4, "themes.csv")) {
        ThemeRow t;
        t.name = r[0];
        for (const auto& id : detail::split_spaces(r[1])) {
            t.topic_ids.push_back(std::stoi(id));
        }
        t.count = std::stoul(r[2]);
        t.percentage = detail::parse_percentage(r[3]);
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<ThemeRow> read_themes_json(const std::string& s) {
    std::vector<ThemeRow> out;
    for (const auto& j : nlohmann::json::parse(s)) {
        ThemeRow t;
        t.name = j.at("theme").get<std::string>();
        t.topic_ids = j.at("topic_ids").get<std::vector<int>>();
        t.count = j.at("count").get<std::size_t>();
        t.percentage = {std::llround(j.at("percentage").get<double>() * 100.0)};
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<MapRecord> read_map_json(const std::string& s) {
    std::vector<MapRecord> out;
    for (const auto& j : nlohmann::json::parse(s)) {
        out.push_back({j.at("topic_id").get<int>(), j.at("x").get<double>(), j.at("y").get<double>(),
                       j.at("size").get<std::size_t>(), j.at("label").get<std::string>()});
    }
    return out;
}

} // namespace topiclens

#endif
