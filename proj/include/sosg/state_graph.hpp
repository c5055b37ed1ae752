#pragma once

// Property multigraph of entity, state and event vertices joined by spatial
// (entity -> state/event) and temporal (state/event -> later state/event)
// edges. Built once, sealed, then read concurrently.

#include "sosg/common.hpp"
#include "sosg/record_ingest.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sosg {

struct Vertex {
    VertexId id = 0;
    VertexCategory category = VertexCategory::State;
    std::string dtype;           // source label, or identifier key for entities
    std::optional<Micros> ts;    // absent on entities
    Props props;                 // entities: {"value": v}

    const std::string& value() const;  // entity identifier value
    bool operator==(const Vertex&) const = default;
};

enum class EdgeKind : std::uint8_t { Spatial, Temporal };

std::string_view to_string(EdgeKind kind);

struct Edge {
    VertexId src = 0;
    VertexId dst = 0;
    EdgeKind kind = EdgeKind::Spatial;

    bool operator==(const Edge&) const = default;
    auto operator<=>(const Edge&) const = default;
};

constexpr VertexId kVertexIdMask = (VertexId{1} << 53) - 1;

/// Deterministic id from category, dtype, props, timestamp and origin.
/// Entities hash only (dtype, value).
VertexId compute_vertex_id(const Vertex& v, const Origin& origin = {});

Vertex make_entity(std::string dtype, std::string value);

/// Throws Error(Invariant) when `v` is not a well-formed vertex.
void validate_vertex(const Vertex& v);

class StateGraph {
public:
    using Index = std::uint32_t;
    static constexpr Index npos = ~Index{0};

    struct TimeSlice {
        std::string dtype;
        Index begin = 0;  // into time_order()
        Index end = 0;
    };

    /// Assigns the id. Entities are upserted by (dtype, value).
    VertexId add_vertex(Vertex v, const Origin& origin = {});
    /// Inserts a vertex whose id was assigned elsewhere (graph loading).
    void restore_vertex(Vertex v);
    void add_edge(const Edge& e);
    void reserve(std::size_t vertices, std::size_t edges);

    /// Sorts vertices by id and edges by (src, dst, kind), then builds the
    /// adjacency, entity and time indexes. The graph is immutable afterwards.
    void seal();
    bool sealed() const { return sealed_; }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Vertex& vertex(Index i) const { return vertices_[i]; }
    bool contains(VertexId id) const { return id_index_.count(id) != 0; }

    // Available after seal().
    Index index_of(VertexId id) const;
    Index edge_src(std::size_t e) const { return edge_src_[e]; }
    Index edge_dst(std::size_t e) const { return edge_dst_[e]; }
    /// Outgoing edges of `v` are the contiguous edge indices [first, second).
    std::pair<Index, Index> out_range(Index v) const;
    std::span<const Index> in_edges(Index v) const;
    /// Neighbors across spatial edges in either direction, sorted by index
    /// (parallel edges repeat a neighbor).
    std::span<const Index> spatial_neighbors(Index v) const;
    Index find_entity(std::string_view dtype, std::string_view value) const;
    /// All entities carrying `value`, sorted by id.
    std::vector<Index> entities_with_value(std::string_view value) const;
    std::vector<Index> entities_of_dtype(std::string_view dtype) const;
    /// Per-dtype slices of an entity's associated states/events, each sorted
    /// by (timestamp, id).
    const std::vector<TimeSlice>& time_slices(Index entity) const;
    std::span<const Index> time_order(const TimeSlice& s) const;
    std::optional<Micros> max_time() const { return max_time_; }

    std::size_t count(VertexCategory c) const;
    std::size_t count(EdgeKind k) const;

    /// Full scan of the data-model invariants; throws Error(Invariant).
    void check_invariants() const;

private:
    void require_unsealed() const;
    void require_sealed() const;

    bool sealed_ = false;
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::unordered_map<VertexId, Index> id_index_;
    std::unordered_map<std::string, VertexId> entity_keys_;  // dtype '\x1f' value

    std::vector<Index> edge_src_, edge_dst_;
    std::vector<Index> out_offsets_, in_offsets_, in_edges_;
    std::vector<Index> spatial_offsets_, spatial_adj_;
    std::unordered_map<std::string, std::vector<Index>> value_index_;
    std::vector<Index> time_order_;
    std::vector<std::vector<TimeSlice>> time_slices_;
    std::optional<Micros> max_time_;
};

}  // namespace sosg
