#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plrt {

enum class Errc {
    InvalidArgument,
    InvalidConfig,
    DimensionMismatch,
    NotPositiveDefinite,
    DenominatorUnderflow,
    EmptyDataset,
    DimensionOverflow,
    InvalidDelta,
    MissingColumn,
    ParseError,
    EmptyFile,
    DegenerateSplit,
    LengthMismatch,
    SchemaViolation,
    VersionMismatch,
    InstanceTooLarge,
    IoError,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI) can map them without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace plrt
