#include "uwqa/error.hpp"

namespace uwqa {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Decode: return "DecodeError";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::Metric: return "MetricError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::AllOutliers: return "AllOutliers";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::MixedImage: return "MixedImage";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::ConstantInput: return "ConstantInput";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Layout: return "LayoutError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Usage: return "UsageError";
    }
    return "Error";
}

} // namespace uwqa
