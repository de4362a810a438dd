#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uwqa {

enum class ErrorKind {
    Decode,
    InvalidPartition,
    Metric,
    EmptyInput,
    AllOutliers,
    DegenerateMetric,
    UnknownModel,
    OutOfRange,
    MixedImage,
    UnknownClass,
    ConstantInput,
    NoOverlap,
    Io,
    Layout,
    Schema,
    Config,
    Usage,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the toolkit; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace uwqa
