#pragma once

#include <stdexcept>
#include <string>

namespace ood {

// Invalid experiment/model configuration (bad layer wiring, empty class, ...).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

// API misuse: mismatched shapes, stale state, out-of-range labels.
struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& msg) : std::runtime_error("usage: " + msg) {}
};

// Malformed on-disk data (IDX / CIFAR / checkpoint / config files).
struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error("format: " + msg) {}
};

}  // namespace ood
