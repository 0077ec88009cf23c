#pragma once

#include <stdexcept>

namespace seeker {

/// Malformed input data (bad rows, truncated payloads at the data level).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (missing columns, infeasible parameter combinations).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Wire-format violation (size mismatch, field out of representable range).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace seeker
