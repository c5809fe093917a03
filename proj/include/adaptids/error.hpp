#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adaptids {

enum class ErrorCode {
    MalformedFile,
    MalformedLine,
    OutOfOrderTimestamp,
    EmptyHost,
    EmptyWindow,
    EmptyDataset,
    SchemaMismatch,
    LengthMismatch,
    BadMagic,
    UnsupportedVersion,
    CorruptPayload,
    ChannelUnavailable,
    InvalidScenario,
    InvalidConfig,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code; every recoverable failure in
/// the library is reported through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace adaptids
