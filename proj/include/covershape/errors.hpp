#pragma once

#include <stdexcept>
#include <string>

namespace covershape {

/// File could not be read, written, or parsed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input audio is unusable for the requested analysis (too short, silent, ...).
struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Benchmark manifest is malformed or inconsistent.
struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace covershape
