// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>

namespace morphoforge
{

auto to_string(ErrorCode code) -> std::string_view
{
    switch (code)
    {
        case ErrorCode::UnknownParent: return "UnknownParent";
        case ErrorCode::DuplicateName: return "DuplicateName";
        case ErrorCode::RootAlreadyExists: return "RootAlreadyExists";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::UntaggedNode: return "UntaggedNode";
        case ErrorCode::NameCollision: return "NameCollision";
        case ErrorCode::InvalidTree: return "InvalidTree";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::OriginOutsideShape: return "OriginOutsideShape";
        case ErrorCode::NoIntersection: return "NoIntersection";
        case ErrorCode::UnsupportedElement: return "UnsupportedElement";
        case ErrorCode::MalformedXml: return "MalformedXml";
        case ErrorCode::SubsetViolation: return "SubsetViolation";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::TranscriptExhausted: return "TranscriptExhausted";
        case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
        case ErrorCode::NoJsonFound: return "NoJsonFound";
        case ErrorCode::MalformedJson: return "MalformedJson";
        case ErrorCode::ImageTooLarge: return "ImageTooLarge";
        case ErrorCode::PlanViolatesConstraints: return "PlanViolatesConstraints";
        case ErrorCode::ParseFailure: return "ParseFailure";
        case ErrorCode::AnchorSolveFailure: return "AnchorSolveFailure";
        case ErrorCode::ToolCallInvalid: return "ToolCallInvalid";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::BudgetExhausted: return "BudgetExhausted";
        case ErrorCode::EditRejected: return "EditRejected";
        case ErrorCode::StageViolation: return "StageViolation";
        case ErrorCode::MissingReference: return "MissingReference";
        case ErrorCode::SessionClosed: return "SessionClosed";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace morphoforge
