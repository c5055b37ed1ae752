#pragma once

// Per-VM dependency subgraphs, triplet-multiset features, generalized Jaccard
// distance and distance-based (k, r) outlier detection.

#include "sosg/state_graph.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sosg {

using Index = StateGraph::Index;

struct VmSubgraph {
    Index root = StateGraph::npos;
    std::map<Index, unsigned> members;         // vertex -> BFS depth; root at 0
    std::map<Index, unsigned> shared_frontier;  // vertex -> round it was reached
    std::vector<std::size_t> edges;            // induced edge indices, ascending

    unsigned depth_of(Index v) const;  // member or frontier depth
};

/// Multi-root BFS over spatial edges in synchronized rounds. In round d+1 a
/// vertex not reached before joins the members of the single root that
/// reached it, or the shared frontier of every root when several did. A
/// vertex reached in an earlier round by another root (or already shared)
/// joins the arriving root's shared frontier. Frontier vertices and members at
/// max_depth are not expanded.
/// Induced edges (both kinds) join two vertices of members or frontier with
/// at least one endpoint a member.
std::vector<VmSubgraph> extract_subgraphs(const StateGraph& g, const std::vector<Index>& roots, unsigned max_depth = 6,
                                          unsigned threads = 0);

struct Signature {
    VertexCategory category = VertexCategory::State;
    std::string dtype;  // "*" for collapsed event types

    auto operator<=>(const Signature&) const = default;
};

struct TripletCode {
    unsigned depth = 0;  // BFS depth of the edge's stored source endpoint
    Signature src;
    EdgeKind kind = EdgeKind::Spatial;
    Signature dst;

    auto operator<=>(const TripletCode&) const = default;
    std::string str() const;
};

using TripletMultiset = std::map<TripletCode, std::uint64_t>;

TripletMultiset featurize(const StateGraph& g, const VmSubgraph& sub, bool collapse_events = true);

/// Distance as the exact fraction num/den = 1 - sum(min)/sum(max).
struct JaccardDistance {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    std::strong_ordering operator<=>(const JaccardDistance& o) const;
    bool operator==(const JaccardDistance& o) const { return (*this <=> o) == 0; }
};

/// d(a, b) = 1 - sum_c min(a_c, b_c) / sum_c max(a_c, b_c); d(empty, empty) = 0.
JaccardDistance generalized_jaccard_exact(const TripletMultiset& a, const TripletMultiset& b);
double generalized_jaccard(const TripletMultiset& a, const TripletMultiset& b);

/// Exact test of num/den <= r for a finite double r.
bool distance_within(const JaccardDistance& d, double r);

inline constexpr double kDefaultRadiusPercentile = 0.10;

struct DetectionParams {
    std::optional<std::uint64_t> k;  // default max(2, ceil(0.02 n)), at most n - 1
    std::optional<double> r;         // default: percentile of pairwise distances
    double r_percentile = kDefaultRadiusPercentile;
    unsigned max_bfs_depth = 6;
    bool collapse_events = true;
    std::size_t nearest = 5;
    unsigned threads = 0;
};

struct NeighborInfo {
    std::size_t other = 0;  // position in the population
    JaccardDistance distance;
};

struct VmVerdict {
    std::uint64_t neighbor_count = 0;
    bool flagged = false;
    std::vector<NeighborInfo> nearest;  // ascending (distance, position)
};

struct DetectionResult {
    std::uint64_t k = 0;
    double r = 0.0;
    std::optional<JaccardDistance> r_exact;  // set when r came from the percentile
    std::vector<VmVerdict> verdicts;         // parallel to the input features

    std::vector<std::size_t> flagged() const;
};

/// Nearest-rank percentile (p in (0, 1]) of the pairwise distances.
JaccardDistance percentile_radius(const std::vector<TripletMultiset>& features, double p, unsigned threads = 0);
std::uint64_t default_k(std::size_t n);

/// neighbor_count = |{j != i : d(i, j) <= r}|; flagged iff neighbor_count < k.
DetectionResult detect(const std::vector<TripletMultiset>& features, const DetectionParams& params);

struct AnomalyReport {
    std::vector<Index> roots;
    std::vector<VmSubgraph> subgraphs;
    std::vector<TripletMultiset> features;
    DetectionResult result;
    DetectionParams params;
};

/// Default roots: every entity whose dtype is `root_dtype`. Throws
/// Error(Query) when fewer than two exist.
AnomalyReport run_detection(const StateGraph& g, const DetectionParams& params, const std::string& root_dtype = "uuid");

std::string report_to_json(const StateGraph& g, const AnomalyReport& report);
std::string report_to_table(const StateGraph& g, const AnomalyReport& report);
/// Evidence subgraphs of the flagged VMs; entities as ellipses, states as
/// boxes, events as diamonds, shared frontier dashed.
std::string report_to_dot(const StateGraph& g, const AnomalyReport& report);

}  // namespace sosg
