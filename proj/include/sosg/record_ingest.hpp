#pragma once

// Parsing of heterogeneous operations data (DB trigger logs, snapshot dumps,
// component logs) into uniform timestamped key-value records. Values are kept
// verbatim; nothing here interprets what a key means.

#include "sosg/common.hpp"
#include "sosg/time_util.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sosg {

struct Origin {
    std::string file;
    std::uint64_t line = 0;

    bool operator==(const Origin&) const = default;
};

using Props = std::map<std::string, std::string>;

struct Record {
    std::string source;  // SourceType label, validated against a SourceRegistry
    Micros timestamp = 0;
    Props props;
    Origin origin;

    bool operator==(const Record&) const = default;
};

/// Known source labels and whether their records become State or Event
/// vertices. Defaults to the seven OpenStack/Ceph sources.
class SourceRegistry {
public:
    static SourceRegistry defaults();

    void add(std::string name, VertexCategory category);
    bool contains(std::string_view name) const;
    /// Throws Error(Config) for unknown labels.
    VertexCategory category_of(std::string_view name) const;
    const std::map<std::string, VertexCategory, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, VertexCategory, std::less<>> entries_;
};

enum class FormatKind : std::uint8_t { Jsonl, Csv, DbDump, Syslog };

std::optional<FormatKind> parse_format_kind(std::string_view name);
std::string_view to_string(FormatKind kind);

struct FormatSpec {
    FormatKind kind = FormatKind::Jsonl;
    std::string timestamp_key = "ts";  // jsonl key or csv column
    TimestampFormat timestamp_format = TimestampFormat::Iso8601;
    char delimiter = ',';
};

struct ParseStats {
    std::uint64_t total = 0;
    std::uint64_t parsed = 0;
    std::uint64_t skipped_malformed = 0;
    std::uint64_t skipped_no_timestamp = 0;

    ParseStats& operator+=(const ParseStats& other);
    bool operator==(const ParseStats&) const = default;
};

struct ParseResult {
    std::vector<Record> records;
    ParseStats stats;
};

/// Parses one input stream. Blank lines are not records. Structurally broken
/// records count as malformed; well-formed records whose timestamp is absent
/// or unparseable count as skipped_no_timestamp. The timestamp field is moved
/// out of the props. Nested JSON is flattened to dotted keys.
ParseResult parse_source(std::istream& in, std::string_view source, const FormatSpec& format,
                         std::string_view origin_file = {});

/// Collapses runs of consecutive records whose source and props are equal,
/// keeping the first (earliest) record of each run.
std::vector<Record> dedupe_snapshots(std::vector<Record> records);

/// Flattens a JSON object into dotted keys. Strings are taken verbatim, other
/// scalars use their JSON text, nulls are dropped, arrays use numeric indices.
void flatten_json(const nlohmann::json& value, const std::string& prefix, Props& out);

struct SourceRule {
    std::string glob;  // matched against the corpus-relative path with '/' separators
    std::string source;
    FormatSpec format;
    bool dedupe = false;
};

struct IngestConfig {
    SourceRegistry registry = SourceRegistry::defaults();
    std::vector<SourceRule> rules;
    /// Raw "identifiers" section, consumed by the builder.
    std::optional<nlohmann::json> identifiers;

    /// Layout written by the synthetic workload generator.
    static IngestConfig defaults();
    static IngestConfig from_json(const nlohmann::json& doc);
    static IngestConfig load(const std::filesystem::path& path);
};

struct FileParseStats {
    std::string path;
    std::string source;
    ParseStats stats;
    std::uint64_t deduped_away = 0;
};

struct IngestResult {
    std::vector<Record> records;  // ordered by corpus-relative path, then input order
    ParseStats stats;
    std::vector<FileParseStats> files;
    std::vector<std::string> unmatched_files;
};

/// Parses every file under `corpus_dir` that matches a rule (first match
/// wins), one file per task, and merges in sorted path order.
IngestResult ingest_corpus(const std::filesystem::path& corpus_dir, const IngestConfig& config,
                           unsigned threads = 0);

}  // namespace sosg
