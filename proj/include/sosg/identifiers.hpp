#pragma once

// Statistics-driven discovery of identifier keys: a key qualifies when it has
// many distinct values, each value recurs, and the values look like ids.

#include "sosg/common.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sosg {

enum class ShapeClass : std::uint8_t { Uuid, Ip, Mac, Path, Hostname, Numeric, Timestamp, FreeText };

std::string_view to_string(ShapeClass s);
std::optional<ShapeClass> parse_shape_class(std::string_view name);

/// Pattern set, first match wins:
///   uuid       8-4-4-4-12 hex digits
///   mac        six hex pairs separated by ':' or '-'
///   ip         dotted IPv4 quad (optional /prefix), or IPv6 with at least two ':'
///   timestamp  anything parse_iso8601 accepts
///   numeric    [+-]digits[.digits][e[+-]digits]
///   path       no whitespace and contains '/'
///   hostname   [A-Za-z0-9._-]+ containing at least one letter
///   free-text  everything else
ShapeClass classify_value(std::string_view value);

/// Shape of a key from a sample of its distinct values: the class holding at
/// least 80% of the sample, otherwise free-text.
inline constexpr double kDominantShareMin = 0.8;
inline constexpr std::size_t kShapeSampleSize = 64;

struct IdentifierPolicy {
    std::uint64_t min_kind = 10;
    double min_mean_repetition = 2.0;
    std::set<ShapeClass> excluded_shapes{ShapeClass::Numeric, ShapeClass::Timestamp, ShapeClass::FreeText};
    std::set<std::string> include;
    std::set<std::string> exclude;

    /// Reads the "identifiers" config section; missing fields keep defaults.
    static IdentifierPolicy from_json(const nlohmann::json& j);
    void validate() const;
};

struct IdentifierStats {
    std::string key;
    std::uint64_t kind_count = 0;
    std::uint64_t occurrence_count = 0;
    double mean_repetition = 0.0;
    ShapeClass shape = ShapeClass::FreeText;
    bool accepted = false;
    std::string reason;  // why accepted or rejected
};

/// Accumulates per-key distinct-value counts. Merge order does not matter.
class KeyStatsAccumulator {
public:
    void add(std::string_view key, std::string_view value);
    void merge(KeyStatsAccumulator&& other);
    /// Stats for every key seen, sorted by key, with the policy applied.
    std::vector<IdentifierStats> finish(const IdentifierPolicy& policy) const;

private:
    struct PerKey {
        std::uint64_t occurrences = 0;
        std::unordered_map<std::string, std::uint64_t> values;
    };
    std::unordered_map<std::string, PerKey> keys_;
};

void apply_policy(IdentifierStats& s, const IdentifierPolicy& policy);

/// Whole tokens of free text. Separators are whitespace and punctuation other
/// than '-', '_', '.', '/'. A token with those four characters at either end
/// is reported twice: as written and trimmed.
std::vector<std::string_view> tokenize_free_text(std::string_view text);

}  // namespace sosg
