// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace morphoforge
{

/// Every failure the toolkit reports carries one of these codes. The names are
/// stable and appear verbatim in CLI diagnostics and service error bodies.
enum class ErrorCode
{
    // core-model
    UnknownParent,
    DuplicateName,
    RootAlreadyExists,
    UnknownNode,
    UntaggedNode,
    NameCollision,
    InvalidTree,
    InvalidArgument,
    // geometry-kernel
    OriginOutsideShape,
    NoIntersection,
    // mjcf-io
    UnsupportedElement,
    MalformedXml,
    SubsetViolation,
    // vlm-gateway
    TransportError,
    RateLimited,
    TranscriptExhausted,
    FingerprintMismatch,
    NoJsonFound,
    MalformedJson,
    ImageTooLarge,
    // synthesis-pipeline
    PlanViolatesConstraints,
    ParseFailure,
    AnchorSolveFailure,
    ToolCallInvalid,
    ValidationFailed,
    BudgetExhausted,
    EditRejected,
    StageViolation,
    MissingReference,
    SessionClosed,
    // cli / service
    ConfigError,
    NotFound,
    IoError,
};

[[nodiscard]] auto to_string(ErrorCode code) -> std::string_view;

class Error: public std::runtime_error
{
  public:
    Error(ErrorCode code, std::string const& message):
        std::runtime_error(std::string(to_string(code)) + ": " + message), _code(code), _detail(message)
    {
    }

    [[nodiscard]] auto code() const noexcept -> ErrorCode { return _code; }
    [[nodiscard]] auto detail() const noexcept -> std::string const& { return _detail; }

  private:
    ErrorCode _code;
    std::string _detail;
};

} // namespace morphoforge
