#pragma once

#include <stdexcept>
#include <string>

namespace mfseg {

enum class ErrorKind {
    kDimension,
    kScaleRange,
    kNumeric,
    kEmptyClass,
    kParameterDomain,
    kDegenerateClustering,
    kShapeMismatch,
    kConfig,
    kIo,
};

// Every failure raised by the library carries a kind so the CLI can map it
// onto an exit code without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kDimension: return "dimension";
        case ErrorKind::kScaleRange: return "scale-range";
        case ErrorKind::kNumeric: return "numeric";
        case ErrorKind::kEmptyClass: return "empty-class";
        case ErrorKind::kParameterDomain: return "parameter-domain";
        case ErrorKind::kDegenerateClustering: return "degenerate-clustering";
        case ErrorKind::kShapeMismatch: return "shape-mismatch";
        case ErrorKind::kConfig: return "config";
        case ErrorKind::kIo: return "io";
    }
    return "unknown";
}

}  // namespace mfseg
