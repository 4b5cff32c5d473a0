#include "tagcos/error.hpp"

namespace tagcos {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::length_mismatch: return "length mismatch";
        case ErrorKind::non_finite: return "non-finite value";
        case ErrorKind::io: return "i/o error";
        case ErrorKind::bad_magic: return "bad magic";
        case ErrorKind::version_mismatch: return "version mismatch";
        case ErrorKind::truncated: return "truncated file";
        case ErrorKind::dim_mismatch: return "dimension mismatch";
        case ErrorKind::id_collision: return "sample id collision";
        case ErrorKind::singular: return "singular system";
        case ErrorKind::guard_exceeded: return "combinatorial guard exceeded";
        case ErrorKind::schema_mismatch: return "schema mismatch";
        case ErrorKind::usage: return "usage error";
        case ErrorKind::locked: return "output directory locked";
    }
    return "error";
}

}  // namespace tagcos
