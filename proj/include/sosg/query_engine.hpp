#pragma once

// State queries over a sealed graph: latest state of an entity, and typed
// breadth-first search for entity -> bridge -> entity paths.

#include "sosg/state_graph.hpp"

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace sosg {

using Index = StateGraph::Index;

/// "dtype=value" or a bare value. A bare value must name exactly one entity;
/// otherwise Error(Query) lists the candidates.
Index resolve_entity(const StateGraph& g, std::string_view selector);

/// Greatest (timestamp, id) vertex of `dtype` linked to `entity` with
/// timestamp <= at_time (default: no bound).
std::optional<Index> latest_state(const StateGraph& g, Index entity, std::string_view dtype,
                                  std::optional<Micros> at_time = std::nullopt);

/// Per-hop allowed bridge dtypes; hops past the end are unconstrained.
using TypeConstraints = std::vector<std::set<std::string>>;

/// Parses "A,B|C,D": hop 1 allows A, hop 2 allows B or C, hop 3 allows D.
TypeConstraints parse_type_constraints(std::string_view text);

struct TargetDtype {
    std::string dtype;
};

struct PathQuery {
    Index from = StateGraph::npos;
    std::variant<Index, TargetDtype> to;
    unsigned max_depth = 8;  // entity hops
    TypeConstraints type_constraints;
    std::optional<Micros> at_time;
    std::size_t limit = 100;
};

using Path = std::vector<Index>;  // entity, bridge, entity, ..., entity

struct SearchStats {
    std::uint64_t entities_visited = 0;
    std::uint64_t bridges_scanned = 0;
    unsigned depth_reached = 0;
    bool truncated = false;  // more paths than `limit`
};

struct PathResult {
    std::vector<Path> paths;
    SearchStats stats;
};

/// Shortest paths (in entity hops) from `from` to every target reached within
/// max_depth: the single entity `to`, or each entity whose dtype is `to`
/// other than `from` itself. Bridges between the same pair of entities that
/// share a dtype are collapsed to the latest one by (timestamp, id). Paths are
/// ordered lexicographically by vertex id sequence and capped at `limit`.
PathResult find_paths(const StateGraph& g, const PathQuery& q);

/// Entities of `target_dtype` reachable within max_depth, sorted by id.
std::vector<Index> list_related(const StateGraph& g, Index entity, std::string_view target_dtype, unsigned max_depth,
                                const TypeConstraints& constraints = {},
                                std::optional<Micros> at_time = std::nullopt);

/// VMs running on the host (Libvirt) or whose image blocks the host stores
/// (Cephfile -> Cephimage -> DB).
std::vector<Index> affected_vms(const StateGraph& g, Index host, std::optional<Micros> at_time = std::nullopt);
/// Ceph block files behind a VM's images (DB -> Cephimage -> Cephfile).
std::vector<Index> list_cephfiles_for_vm(const StateGraph& g, Index vm, std::optional<Micros> at_time = std::nullopt);
/// VMs with a port in the subnet (DB).
std::vector<Index> list_vms_in_subnet(const StateGraph& g, Index subnet, std::optional<Micros> at_time = std::nullopt);

inline constexpr const char* kVmDtype = "uuid";
inline constexpr const char* kHostDtype = "host";
inline constexpr const char* kFileDtype = "file";
inline constexpr const char* kSubnetDtype = "subnet_id";

// Output helpers.
std::string vertex_label(const Vertex& v);
std::string paths_to_json(const StateGraph& g, const PathResult& r);
std::string paths_to_dot(const StateGraph& g, const PathResult& r);
std::string paths_to_table(const StateGraph& g, const PathResult& r);
std::string vertices_to_json(const StateGraph& g, const std::vector<Index>& vs);
std::string vertices_to_dot(const StateGraph& g, const std::vector<Index>& vs);
std::string vertices_to_table(const StateGraph& g, const std::vector<Index>& vs);

}  // namespace sosg
