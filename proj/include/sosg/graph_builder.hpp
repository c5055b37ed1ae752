#pragma once

// Records -> state/event vertices -> identifier discovery -> entity vertices
// and spatial edges -> temporal chains.

#include "sosg/identifiers.hpp"
#include "sosg/record_ingest.hpp"
#include "sosg/state_graph.hpp"

#include "json.hpp"

#include <map>
#include <string>
#include <vector>

namespace sosg {

struct BuildOptions {
    SourceRegistry registry = SourceRegistry::defaults();
    IdentifierPolicy policy;
    unsigned threads = 0;  // 0: resolve_threads()
};

struct BuildReport {
    std::uint64_t records = 0;
    std::map<std::string, double> step_ms;  // wall time per step
    std::map<std::string, std::uint64_t> vertices_by_category;
    std::map<std::string, std::uint64_t> edges_by_kind;
    std::vector<IdentifierStats> identifiers;  // every key seen, accepted or not

    /// Timings go under "timings_ms"; `with_timings = false` leaves them out
    /// so the rest can be compared byte for byte.
    nlohmann::ordered_json to_json(bool with_timings = true) const;
};

/// The four construction steps, exposed one by one for testing. Each step
/// requires the previous one.
class GraphBuilder {
public:
    explicit GraphBuilder(BuildOptions options = {});

    /// Step 1: one State or Event vertex per record.
    void build_state_event_vertices(const std::vector<Record>& records);
    /// Step 2: per-key statistics with the policy applied, sorted by key.
    const std::vector<IdentifierStats>& discover_identifiers();
    /// Step 3: one entity per distinct (accepted key, value); one spatial edge
    /// per (vertex, entity) whose value appears as a property value, or as a
    /// whole token of a free-text-shaped property.
    void materialize_entities_and_spatial_edges();
    /// Step 4: for every entity and every dtype among its associated
    /// vertices, a chain of temporal edges in (timestamp, id) order.
    void link_temporal();
    /// Seals and returns the graph.
    StateGraph finish();

    const std::vector<Vertex>& record_vertices() const { return vertices_; }
    const std::vector<Vertex>& entities() const { return entities_; }
    const std::vector<Edge>& spatial_edges() const { return spatial_; }
    const std::vector<Edge>& temporal_edges() const { return temporal_; }
    const BuildReport& report() const { return report_; }

private:
    BuildOptions options_;
    unsigned threads_;
    int stage_ = 0;
    std::vector<Vertex> vertices_;
    std::vector<Vertex> entities_;
    std::vector<Edge> spatial_;
    std::vector<Edge> temporal_;
    std::vector<IdentifierStats> stats_;
    BuildReport report_;
};

struct BuildResult {
    StateGraph graph;
    BuildReport report;
};

BuildResult build_graph(const std::vector<Record>& records, const BuildOptions& options = {});

}  // namespace sosg
