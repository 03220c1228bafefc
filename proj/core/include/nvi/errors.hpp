#pragma once

#include <stdexcept>
#include <string>

namespace nvi {

// Numeric failure (NaN/Inf encountered, divergent fit, ...).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// A size/cell/capacity limit was exceeded.
struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// A sampler was asked for more data than it holds.
struct insufficient_data_error : std::runtime_error {
    explicit insufficient_data_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment configuration (unknown key, out-of-range field, unsupported mode).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nvi
