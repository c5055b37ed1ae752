#pragma once

// Canonical on-disk form of a sealed StateGraph: manifest.json plus
// vertices.jsonl and edges.jsonl, one object per line, sorted.

#include "sosg/state_graph.hpp"

#include <filesystem>
#include <string>

namespace sosg {

inline constexpr int kGraphFormatVersion = 1;

class CorruptGraphError : public Error {
public:
    CorruptGraphError(std::string section, std::uint64_t offset, const std::string& detail)
        : Error(ErrorKind::Corrupt, section + " at byte " + std::to_string(offset) + ": " + detail),
          section_(std::move(section)),
          offset_(offset) {}

    const std::string& section() const noexcept { return section_; }
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::string section_;
    std::uint64_t offset_;
};

std::string vertex_line(const Vertex& v);
std::string edge_line(const Edge& e);
std::string serialize_vertices(const StateGraph& g);
std::string serialize_edges(const StateGraph& g);

/// Writes the three files into a fresh sibling directory and renames it into
/// place. An existing `dir` is replaced only when `overwrite` is set.
void save_graph(const StateGraph& g, const std::filesystem::path& dir, bool overwrite = false);

/// Throws CorruptGraphError naming the section and byte offset of the first
/// problem; Error(Input) when the directory or a file is missing.
StateGraph load_graph(const std::filesystem::path& dir);

/// JSON string literal for `s`; invalid UTF-8 is replaced with U+FFFD.
std::string json_quote(std::string_view s);

}  // namespace sosg
