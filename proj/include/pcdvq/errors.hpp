#pragma once

#include <stdexcept>

namespace pcdvq {

// One exception type per CLI exit code (2, 3, 4, 5).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct codebook_mismatch_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pcdvq
