#include "plrt/error.hpp"

namespace plrt {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::DenominatorUnderflow: return "DenominatorUnderflow";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::DimensionOverflow: return "DimensionOverflow";
    case Errc::InvalidDelta: return "InvalidDelta";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::DegenerateSplit: return "DegenerateSplit";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InstanceTooLarge: return "InstanceTooLarge";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace plrt
