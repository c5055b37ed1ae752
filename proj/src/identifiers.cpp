#include "sosg/identifiers.hpp"

#include "sosg/time_util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace sosg {

namespace {

constexpr std::array<std::pair<ShapeClass, std::string_view>, 8> kShapeNames{{
    {ShapeClass::Uuid, "uuid-like"},
    {ShapeClass::Ip, "ip-like"},
    {ShapeClass::Mac, "mac-like"},
    {ShapeClass::Path, "path-like"},
    {ShapeClass::Hostname, "hostname-like"},
    {ShapeClass::Numeric, "numeric"},
    {ShapeClass::Timestamp, "timestamp-like"},
    {ShapeClass::FreeText, "free-text"},
}};

bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool looks_uuid(std::string_view v) {
    if (v.size() != 36) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        bool dash = i == 8 || i == 13 || i == 18 || i == 23;
        if (dash ? v[i] != '-' : !is_hex(v[i])) return false;
    }
    return true;
}

bool looks_mac(std::string_view v) {
    if (v.size() != 17) return false;
    char sep = v[2];
    if (sep != ':' && sep != '-') return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i % 3 == 2 ? v[i] != sep : !is_hex(v[i])) return false;
    }
    return true;
}

bool looks_ipv4(std::string_view v) {
    std::size_t slash = v.find('/');
    std::string_view addr = v.substr(0, slash);
    if (slash != std::string_view::npos) {
        std::string_view prefix = v.substr(slash + 1);
        if (prefix.empty() || prefix.size() > 2 || !std::all_of(prefix.begin(), prefix.end(), is_digit)) return false;
        if (std::stoi(std::string(prefix)) > 32) return false;
    }
    int parts = 0;
    std::size_t pos = 0;
    while (true) {
        std::size_t dot = addr.find('.', pos);
        std::string_view part = addr.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
        if (part.empty() || part.size() > 3 || !std::all_of(part.begin(), part.end(), is_digit)) return false;
        if (std::stoi(std::string(part)) > 255) return false;
        ++parts;
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
    return parts == 4;
}

bool looks_ipv6(std::string_view v) {
    if (std::count(v.begin(), v.end(), ':') < 2) return false;
    return std::all_of(v.begin(), v.end(), [](char c) { return is_hex(c) || c == ':'; });
}

bool looks_numeric(std::string_view v) {
    std::size_t i = 0;
    if (i < v.size() && (v[i] == '+' || v[i] == '-')) ++i;
    std::size_t digits = 0;
    while (i < v.size() && is_digit(v[i])) ++i, ++digits;
    if (i < v.size() && v[i] == '.') {
        ++i;
        while (i < v.size() && is_digit(v[i])) ++i, ++digits;
    }
    if (digits == 0) return false;
    if (i < v.size() && (v[i] == 'e' || v[i] == 'E')) {
        ++i;
        if (i < v.size() && (v[i] == '+' || v[i] == '-')) ++i;
        std::size_t exp = 0;
        while (i < v.size() && is_digit(v[i])) ++i, ++exp;
        if (exp == 0) return false;
    }
    return i == v.size();
}

bool has_space(std::string_view v) {
    return std::any_of(v.begin(), v.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

bool looks_hostname(std::string_view v) {
    bool letter = false;
    for (char c : v) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            letter = true;
        } else if (!is_digit(c) && c != '.' && c != '-' && c != '_') {
            return false;
        }
    }
    return letter;
}

bool is_separator(char c) {
    auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) return true;
    if (c == '-' || c == '_' || c == '.' || c == '/') return false;
    return std::ispunct(u) != 0;
}

bool is_trimmed(char c) { return c == '-' || c == '_' || c == '.' || c == '/'; }

}  // namespace

std::string_view to_string(ShapeClass s) {
    for (const auto& [cls, name] : kShapeNames) {
        if (cls == s) return name;
    }
    return "free-text";
}

std::optional<ShapeClass> parse_shape_class(std::string_view name) {
    for (const auto& [cls, n] : kShapeNames) {
        if (n == name) return cls;
    }
    return std::nullopt;
}

ShapeClass classify_value(std::string_view v) {
    if (v.empty()) return ShapeClass::FreeText;
    if (looks_uuid(v)) return ShapeClass::Uuid;
    if (looks_mac(v)) return ShapeClass::Mac;
    if (looks_ipv4(v) || looks_ipv6(v)) return ShapeClass::Ip;
    if (parse_iso8601(v)) return ShapeClass::Timestamp;
    if (looks_numeric(v)) return ShapeClass::Numeric;
    if (has_space(v)) return ShapeClass::FreeText;
    if (v.find('/') != std::string_view::npos) return ShapeClass::Path;
    if (looks_hostname(v)) return ShapeClass::Hostname;
    return ShapeClass::FreeText;
}

IdentifierPolicy IdentifierPolicy::from_json(const nlohmann::json& j) {
    IdentifierPolicy p;
    if (!j.is_object()) fail(ErrorKind::Config, "identifiers: expected an object");
    try {
        if (j.contains("min_kind")) p.min_kind = j.at("min_kind").get<std::uint64_t>();
        if (j.contains("min_mean_repetition")) p.min_mean_repetition = j.at("min_mean_repetition").get<double>();
        if (j.contains("excluded_shapes")) {
            p.excluded_shapes.clear();
            for (const auto& s : j.at("excluded_shapes")) {
                auto cls = parse_shape_class(s.get<std::string>());
                if (!cls) fail(ErrorKind::Config, "identifiers: unknown shape '" + s.get<std::string>() + "'");
                p.excluded_shapes.insert(*cls);
            }
        }
        if (j.contains("include")) {
            for (const auto& s : j.at("include")) p.include.insert(s.get<std::string>());
        }
        if (j.contains("exclude")) {
            for (const auto& s : j.at("exclude")) p.exclude.insert(s.get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("identifiers: ") + e.what());
    }
    p.validate();
    return p;
}

void IdentifierPolicy::validate() const {
    if (min_kind == 0) fail(ErrorKind::Config, "identifiers: min_kind must be positive");
    if (!(min_mean_repetition > 0.0)) fail(ErrorKind::Config, "identifiers: min_mean_repetition must be positive");
    for (const auto& k : include) {
        if (exclude.count(k)) fail(ErrorKind::Config, "identifiers: key '" + k + "' both included and excluded");
    }
}

void KeyStatsAccumulator::add(std::string_view key, std::string_view value) {
    auto it = keys_.find(std::string(key));
    if (it == keys_.end()) it = keys_.emplace(std::string(key), PerKey{}).first;
    ++it->second.occurrences;
    ++it->second.values[std::string(value)];
}

void KeyStatsAccumulator::merge(KeyStatsAccumulator&& other) {
    for (auto& [key, pk] : other.keys_) {
        auto& mine = keys_[key];
        mine.occurrences += pk.occurrences;
        for (auto& [v, c] : pk.values) mine.values[v] += c;
    }
    other.keys_.clear();
}

void apply_policy(IdentifierStats& s, const IdentifierPolicy& policy) {
    char buf[128];
    if (policy.exclude.count(s.key)) {
        s.accepted = false;
        s.reason = "excluded by configuration";
    } else if (policy.include.count(s.key)) {
        s.accepted = true;
        s.reason = "included by configuration";
    } else if (s.kind_count < policy.min_kind) {
        std::snprintf(buf, sizeof buf, "kind_count %llu < min_kind %llu",
                      static_cast<unsigned long long>(s.kind_count), static_cast<unsigned long long>(policy.min_kind));
        s.accepted = false;
        s.reason = buf;
    } else if (s.mean_repetition < policy.min_mean_repetition) {
        std::snprintf(buf, sizeof buf, "mean_repetition %.3f < %.3f", s.mean_repetition, policy.min_mean_repetition);
        s.accepted = false;
        s.reason = buf;
    } else if (policy.excluded_shapes.count(s.shape)) {
        s.accepted = false;
        s.reason = "shape " + std::string(to_string(s.shape)) + " excluded";
    } else {
        s.accepted = true;
        s.reason = "statistics";
    }
}

std::vector<IdentifierStats> KeyStatsAccumulator::finish(const IdentifierPolicy& policy) const {
    std::vector<IdentifierStats> out;
    out.reserve(keys_.size());
    for (const auto& [key, pk] : keys_) {
        IdentifierStats s;
        s.key = key;
        s.kind_count = pk.values.size();
        s.occurrence_count = pk.occurrences;
        s.mean_repetition = s.kind_count ? static_cast<double>(s.occurrence_count) / s.kind_count : 0.0;

        // Deterministic sample: the distinct values with the smallest hashes.
        std::vector<std::pair<std::uint64_t, const std::string*>> hashed;
        hashed.reserve(pk.values.size());
        for (const auto& [v, _] : pk.values) hashed.emplace_back(fnv1a64(v), &v);
        std::size_t take = std::min(kShapeSampleSize, hashed.size());
        std::partial_sort(hashed.begin(), hashed.begin() + take, hashed.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : *a.second < *b.second;
        });
        std::array<std::size_t, kShapeNames.size()> tally{};
        for (std::size_t i = 0; i < take; ++i) ++tally[static_cast<std::size_t>(classify_value(*hashed[i].second))];
        s.shape = ShapeClass::FreeText;
        for (std::size_t c = 0; c < tally.size(); ++c) {
            if (take > 0 && static_cast<double>(tally[c]) >= kDominantShareMin * static_cast<double>(take)) {
                s.shape = static_cast<ShapeClass>(c);
            }
        }
        apply_policy(s, policy);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return out;
}

std::vector<std::string_view> tokenize_free_text(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_separator(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_separator(text[i])) ++i;
        std::size_t end = i;
        if (end == start) continue;
        out.push_back(text.substr(start, end - start));
        std::size_t ts = start, te = end;
        while (ts < te && is_trimmed(text[ts])) ++ts;
        while (te > ts && is_trimmed(text[te - 1])) --te;
        if (te > ts && (ts != start || te != end)) out.push_back(text.substr(ts, te - ts));
    }
    return out;
}

}  // namespace sosg
