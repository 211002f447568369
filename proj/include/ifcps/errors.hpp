#pragma once

#include <stdexcept>
#include <string>

namespace ifcps {

// Argument dimensions do not match what the callee expects.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An iterative numerical procedure diverged or produced non-finite values.
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid run configuration: unknown key, unrecognized name, out-of-range value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A metric is undefined for the given inputs (single-class labels, zero rank variance).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset generation, poisoning, or (de)serialization failed.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ifcps
