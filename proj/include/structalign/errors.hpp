#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace structalign {

// Error taxonomy shared with the CLI exit codes: usage 2, data 3, numeric 4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when training hits a non-finite loss; carries the failing step and
// the last checkpoint known to be good (may be empty).
struct TrainAbortError : NumericalError {
    TrainAbortError(std::int64_t step_, std::string last_good_, const std::string& what_)
        : NumericalError(what_), step(step_), last_good(std::move(last_good_)) {}
    std::int64_t step;
    std::string last_good;
};

}  // namespace structalign
