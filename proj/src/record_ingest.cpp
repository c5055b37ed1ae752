#include "sosg/record_ingest.hpp"

#include "sosg/parallel.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

namespace sosg {

using nlohmann::json;

SourceRegistry SourceRegistry::defaults() {
    SourceRegistry r;
    for (const char* s : {"DB", "Libvirt", "Ovs", "Cephimage", "Cephfile"}) r.add(s, VertexCategory::State);
    for (const char* s : {"Cephlog", "Log"}) r.add(s, VertexCategory::Event);
    return r;
}

void SourceRegistry::add(std::string name, VertexCategory category) {
    if (name.empty()) fail(ErrorKind::Config, "source registry: empty source label");
    if (category == VertexCategory::Entity) {
        fail(ErrorKind::Config, "source registry: source '" + name + "' cannot produce entity vertices");
    }
    entries_[std::move(name)] = category;
}

bool SourceRegistry::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

VertexCategory SourceRegistry::category_of(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail(ErrorKind::Config, "unknown source label '" + std::string(name) + "'");
    return it->second;
}

std::optional<FormatKind> parse_format_kind(std::string_view name) {
    if (name == "jsonl") return FormatKind::Jsonl;
    if (name == "csv") return FormatKind::Csv;
    if (name == "dbdump") return FormatKind::DbDump;
    if (name == "syslog") return FormatKind::Syslog;
    return std::nullopt;
}

std::string_view to_string(FormatKind kind) {
    switch (kind) {
    case FormatKind::Jsonl: return "jsonl";
    case FormatKind::Csv: return "csv";
    case FormatKind::DbDump: return "dbdump";
    case FormatKind::Syslog: return "syslog";
    }
    return "jsonl";
}

ParseStats& ParseStats::operator+=(const ParseStats& other) {
    total += other.total;
    parsed += other.parsed;
    skipped_malformed += other.skipped_malformed;
    skipped_no_timestamp += other.skipped_no_timestamp;
    return *this;
}

void flatten_json(const json& value, const std::string& prefix, Props& out) {
    auto child = [&](const std::string& key) { return prefix.empty() ? key : prefix + "." + key; };
    switch (value.type()) {
    case json::value_t::object:
        for (auto it = value.begin(); it != value.end(); ++it) flatten_json(it.value(), child(it.key()), out);
        break;
    case json::value_t::array:
        for (std::size_t i = 0; i < value.size(); ++i) flatten_json(value[i], child(std::to_string(i)), out);
        break;
    case json::value_t::null:
    case json::value_t::discarded:
        break;
    case json::value_t::string:
        if (!prefix.empty()) out[prefix] = value.get<std::string>();
        break;
    default:
        if (!prefix.empty()) out[prefix] = value.dump();
        break;
    }
}

namespace {

enum class LineOutcome { Parsed, Malformed, NoTimestamp };

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::optional<Micros> timestamp_from_json(const json& v, TimestampFormat format) {
    if (v.is_string()) return parse_timestamp(v.get_ref<const std::string&>(), format);
    if (v.is_number()) return parse_timestamp(v.dump(), format);
    return std::nullopt;
}

LineOutcome parse_jsonl_line(std::string_view line, const FormatSpec& fmt, Record& rec) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return LineOutcome::Malformed;
    std::optional<Micros> ts;
    if (auto it = doc.find(fmt.timestamp_key); it != doc.end()) {
        ts = timestamp_from_json(*it, fmt.timestamp_format);
        doc.erase(it);
    }
    flatten_json(doc, "", rec.props);
    if (rec.props.empty()) return LineOutcome::Malformed;
    if (!ts) return LineOutcome::NoTimestamp;
    rec.timestamp = *ts;
    return LineOutcome::Parsed;
}

/// RFC 4180-style field splitting; returns false on an unterminated quote.
bool split_csv(std::string_view line, char delim, std::vector<std::string>& fields) {
    fields.clear();
    std::string cur;
    bool quoted = false;
    bool field_started_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty() && !field_started_quoted) {
            quoted = true;
            field_started_quoted = true;
        } else if (c == delim) {
            fields.push_back(std::move(cur));
            cur.clear();
            field_started_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) return false;
    fields.push_back(std::move(cur));
    return true;
}

LineOutcome parse_dbdump_line(std::string_view line, const FormatSpec& fmt, Record& rec) {
    std::size_t t1 = line.find('\t');
    if (t1 == std::string_view::npos) return LineOutcome::Malformed;
    std::size_t t2 = line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) return LineOutcome::Malformed;
    std::size_t t3 = line.find('\t', t2 + 1);
    if (t3 == std::string_view::npos) return LineOutcome::Malformed;
    std::string_view ts_text = line.substr(0, t1);
    std::string_view table = line.substr(t1 + 1, t2 - t1 - 1);
    std::string_view op = line.substr(t2 + 1, t3 - t2 - 1);
    std::string_view payload = line.substr(t3 + 1);
    if (table.empty() || (op != "INSERT" && op != "UPDATE" && op != "DELETE")) return LineOutcome::Malformed;
    json doc = json::parse(payload, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return LineOutcome::Malformed;
    flatten_json(doc, "", rec.props);
    rec.props["table"] = std::string(table);
    rec.props["op"] = std::string(op);
    auto ts = parse_timestamp(ts_text, fmt.timestamp_format);
    if (!ts) return LineOutcome::NoTimestamp;
    rec.timestamp = *ts;
    return LineOutcome::Parsed;
}

LineOutcome parse_syslog_line(std::string_view line, const FormatSpec& fmt, Record& rec) {
    std::string_view rest = line;
    std::string_view parts[3];
    for (auto& part : parts) {
        std::size_t start = rest.find_first_not_of(' ');
        if (start == std::string_view::npos) return LineOutcome::Malformed;
        rest.remove_prefix(start);
        std::size_t end = rest.find(' ');
        if (end == std::string_view::npos) return LineOutcome::Malformed;
        part = rest.substr(0, end);
        rest.remove_prefix(end);
    }
    std::size_t msg = rest.find_first_not_of(' ');
    if (msg == std::string_view::npos) return LineOutcome::Malformed;
    rest.remove_prefix(msg);
    rec.props["severity"] = std::string(parts[1]);
    rec.props["component"] = std::string(parts[2]);
    rec.props["message"] = std::string(rest);
    auto ts = parse_timestamp(parts[0], fmt.timestamp_format);
    if (!ts) return LineOutcome::NoTimestamp;
    rec.timestamp = *ts;
    return LineOutcome::Parsed;
}

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
        if (len == 0 || i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return false;
        }
        i += len;
    }
    return true;
}

void tally(ParseStats& stats, LineOutcome outcome) {
    ++stats.total;
    switch (outcome) {
    case LineOutcome::Parsed: ++stats.parsed; break;
    case LineOutcome::Malformed: ++stats.skipped_malformed; break;
    case LineOutcome::NoTimestamp: ++stats.skipped_no_timestamp; break;
    }
}

}  // namespace

ParseResult parse_source(std::istream& in, std::string_view source, const FormatSpec& format,
                         std::string_view origin_file) {
    ParseResult result;
    std::string line;
    std::uint64_t line_no = 0;

    std::vector<std::string> header;
    std::optional<std::size_t> ts_column;
    std::vector<std::string> fields;

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim_cr(line);
        if (is_blank(view)) continue;

        if (format.kind == FormatKind::Csv && header.empty()) {
            if (!split_csv(view, format.delimiter, header) || header.empty()) {
                fail(ErrorKind::Input, std::string(origin_file) + ": unreadable csv header");
            }
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i] == format.timestamp_key) ts_column = i;
            }
            continue;
        }

        Record rec;
        rec.source = std::string(source);
        rec.origin = Origin{std::string(origin_file), line_no};
        LineOutcome outcome = LineOutcome::Malformed;
        if (!valid_utf8(view)) {
            tally(result.stats, outcome);
            continue;
        }
        switch (format.kind) {
        case FormatKind::Jsonl: outcome = parse_jsonl_line(view, format, rec); break;
        case FormatKind::DbDump: outcome = parse_dbdump_line(view, format, rec); break;
        case FormatKind::Syslog: outcome = parse_syslog_line(view, format, rec); break;
        case FormatKind::Csv: {
            if (!split_csv(view, format.delimiter, fields) || fields.size() != header.size()) break;
            std::optional<Micros> ts;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (ts_column && i == *ts_column) {
                    ts = parse_timestamp(fields[i], format.timestamp_format);
                } else if (!fields[i].empty() && !header[i].empty()) {
                    rec.props[header[i]] = fields[i];
                }
            }
            if (rec.props.empty()) break;
            if (!ts) {
                outcome = LineOutcome::NoTimestamp;
                break;
            }
            rec.timestamp = *ts;
            outcome = LineOutcome::Parsed;
            break;
        }
        }
        tally(result.stats, outcome);
        if (outcome == LineOutcome::Parsed) result.records.push_back(std::move(rec));
    }
    if (in.bad()) fail(ErrorKind::Input, std::string(origin_file) + ": read error");
    return result;
}

std::vector<Record> dedupe_snapshots(std::vector<Record> records) {
    std::vector<Record> out;
    out.reserve(records.size());
    for (auto& r : records) {
        if (!out.empty() && out.back().source == r.source && out.back().props == r.props) continue;
        out.push_back(std::move(r));
    }
    return out;
}

IngestConfig IngestConfig::defaults() {
    IngestConfig cfg;
    auto rule = [&](std::string glob, std::string source, FormatKind kind) {
        SourceRule r;
        r.glob = std::move(glob);
        r.source = std::move(source);
        r.format.kind = kind;
        r.dedupe = cfg.registry.category_of(r.source) == VertexCategory::State && r.source != "DB";
        cfg.rules.push_back(std::move(r));
    };
    rule("DB/*/*.log", "DB", FormatKind::DbDump);
    rule("Libvirt/*/*.jsonl", "Libvirt", FormatKind::Jsonl);
    rule("Ovs/*/*.jsonl", "Ovs", FormatKind::Jsonl);
    rule("Cephimage/*/*.jsonl", "Cephimage", FormatKind::Jsonl);
    rule("Cephfile/*/*.csv", "Cephfile", FormatKind::Csv);
    rule("Cephlog/*/*.log", "Cephlog", FormatKind::Syslog);
    rule("Log/*/*.log", "Log", FormatKind::Syslog);
    return cfg;
}

IngestConfig IngestConfig::from_json(const json& doc) {
    if (!doc.is_object()) fail(ErrorKind::Config, "config: top level must be an object");
    IngestConfig cfg;
    try {
        if (auto it = doc.find("source_types"); it != doc.end()) {
            cfg.registry = SourceRegistry{};
            for (auto st = it->begin(); st != it->end(); ++st) {
                std::string cat = st.value().get<std::string>();
                if (cat == "state") {
                    cfg.registry.add(st.key(), VertexCategory::State);
                } else if (cat == "event") {
                    cfg.registry.add(st.key(), VertexCategory::Event);
                } else {
                    fail(ErrorKind::Config, "config: source type '" + st.key() + "' has category '" + cat +
                                                "' (expected state|event)");
                }
            }
        }
        auto sources = doc.find("sources");
        if (sources == doc.end() || !sources->is_array()) fail(ErrorKind::Config, "config: missing 'sources' list");
        for (const auto& entry : *sources) {
            SourceRule rule;
            rule.glob = entry.at("glob").get<std::string>();
            rule.source = entry.at("source").get<std::string>();
            VertexCategory cat = cfg.registry.category_of(rule.source);
            std::string fmt = entry.at("format").get<std::string>();
            auto kind = parse_format_kind(fmt);
            if (!kind) fail(ErrorKind::Config, "config: unknown format '" + fmt + "'");
            rule.format.kind = *kind;
            rule.format.timestamp_key = entry.value("timestamp_key", std::string("ts"));
            std::string tsf = entry.value("timestamp_format", std::string("iso8601"));
            auto parsed_tsf = parse_timestamp_format(tsf);
            if (!parsed_tsf) fail(ErrorKind::Config, "config: unknown timestamp_format '" + tsf + "'");
            rule.format.timestamp_format = *parsed_tsf;
            std::string delim = entry.value("delimiter", std::string(","));
            if (delim.size() != 1) fail(ErrorKind::Config, "config: delimiter must be one character");
            rule.format.delimiter = delim[0];
            rule.dedupe = entry.value("dedupe", cat == VertexCategory::State && rule.source != "DB");
            cfg.rules.push_back(std::move(rule));
        }
        if (auto it = doc.find("identifiers"); it != doc.end()) cfg.identifiers = *it;
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("config: ") + e.what());
    }
    return cfg;
}

IngestConfig IngestConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "config: cannot open " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) fail(ErrorKind::Config, "config: " + path.string() + " is not valid JSON");
    return from_json(doc);
}

IngestResult ingest_corpus(const std::filesystem::path& corpus_dir, const IngestConfig& config, unsigned threads) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(corpus_dir, ec)) fail(ErrorKind::Input, "corpus directory not found: " + corpus_dir.string());

    struct Task {
        std::string rel;
        const SourceRule* rule;
    };
    std::vector<std::string> paths;
    for (fs::recursive_directory_iterator it(corpus_dir, ec), end; it != end; it.increment(ec)) {
        if (ec) fail(ErrorKind::Input, "cannot scan " + corpus_dir.string() + ": " + ec.message());
        if (it->is_regular_file()) paths.push_back(fs::relative(it->path(), corpus_dir).generic_string());
    }
    std::sort(paths.begin(), paths.end());

    IngestResult result;
    std::vector<Task> tasks;
    for (const auto& rel : paths) {
        const SourceRule* match = nullptr;
        for (const auto& rule : config.rules) {
            if (::fnmatch(rule.glob.c_str(), rel.c_str(), FNM_PATHNAME) == 0) {
                match = &rule;
                break;
            }
        }
        if (match) {
            tasks.push_back({rel, match});
        } else {
            result.unmatched_files.push_back(rel);
        }
    }

    std::vector<ParseResult> parsed(tasks.size());
    std::vector<FileParseStats> file_stats(tasks.size());
    parallel_for(tasks.size(), resolve_threads(threads), [&](std::size_t i) {
        const Task& t = tasks[i];
        std::ifstream in(corpus_dir / t.rel, std::ios::binary);
        if (!in) fail(ErrorKind::Input, "cannot open " + (corpus_dir / t.rel).string());
        parsed[i] = parse_source(in, t.rule->source, t.rule->format, t.rel);
        file_stats[i] = FileParseStats{t.rel, t.rule->source, parsed[i].stats, 0};
        if (t.rule->dedupe) {
            std::size_t before = parsed[i].records.size();
            parsed[i].records = dedupe_snapshots(std::move(parsed[i].records));
            file_stats[i].deduped_away = before - parsed[i].records.size();
        }
    });

    std::size_t total = 0;
    for (const auto& p : parsed) total += p.records.size();
    result.records.reserve(total);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        result.stats += parsed[i].stats;
        std::move(parsed[i].records.begin(), parsed[i].records.end(), std::back_inserter(result.records));
    }
    result.files = std::move(file_stats);
    return result;
}

}  // namespace sosg
