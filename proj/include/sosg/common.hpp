#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sosg {

/// UTC instant, microseconds since the Unix epoch.
using Micros = std::int64_t;

/// Stable 64-bit vertex identifier (restricted to 53 bits so it survives JSON
/// readers that use doubles).
using VertexId = std::uint64_t;

enum class VertexCategory : std::uint8_t { Entity, State, Event };

enum class ErrorKind : std::uint8_t {
    Input,      // missing or unreadable inputs
    Config,     // bad configuration, flags or parameters
    Query,      // selector resolution failures
    Invariant,  // data-model invariant violated
    Corrupt,    // persisted graph failed validation
    Internal,
};

std::string_view to_string(ErrorKind kind);
std::string_view to_string(VertexCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

/// FNV-1a over a byte string; used for deterministic sampling and ids.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace sosg
