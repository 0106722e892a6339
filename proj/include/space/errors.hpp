#pragma once

#include <stdexcept>
#include <string>

namespace space {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct LayoutError : std::runtime_error {
    explicit LayoutError(const std::string& msg) : std::runtime_error("layout error: " + msg) {}
};

struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error("index error: " + msg) {}
};

// Enumeration guards in the oracle refuse oversized requests with an estimate.
struct GuardError : std::runtime_error {
    explicit GuardError(const std::string& msg) : std::runtime_error("guard: " + msg) {}
};

// Training aborts when the loss turns non-finite.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error("divergence: " + msg) {}
};

}  // namespace space
