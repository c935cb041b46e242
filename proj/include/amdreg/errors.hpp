#pragma once

#include <stdexcept>
#include <string>

namespace amdreg {

// File parsing / serialization problems. Message names the file and, where
// possible, the offending line.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration (bad key, bad value, bad combination).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Registration could not start because the images do not overlap under the
// initial transform.
struct overlap_error : std::runtime_error {
    explicit overlap_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace amdreg
