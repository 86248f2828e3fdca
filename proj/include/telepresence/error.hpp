#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace telepresence {

enum class ErrorCode {
    MalformedDocument,
    DuplicateId,
    NonPositiveExtent,
    ObjectOutsideRoom,
    InvalidSitHeight,
    UnresolvedPair,
    PointOutsideBox,
    OutOfRange,
    InsufficientSamples,
    InvalidConfig,
    SubjectOutsideRoom,
    InvalidWeights,
    NoFeasiblePlacement,
    DegenerateTarget,
    Truncated,
    BadMagic,
    UnsupportedVersion,
    UnknownMessageType,
    Unrepresentable,
    TickRegression,
    MessageBeforeHello,
    DuplicateHello,
    SessionClosed,
    EmptyBenchmark,
    FileError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace telepresence
