// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sqlpref {

enum class ErrorCode {
    InvalidArgument,
    Io,
    // corpus
    MalformedRecord,
    DuplicateId,
    UnreadableDb,
    EmptySchema,
    // executor
    UnknownDb,
    GoldFailed,
    // rollouts
    MissingVerdict,
    DuplicateKey,
    // preference
    UnjudgedRollout,
    // evalstrat
    MissingItem,
    ExtraSample,
    EmptyEval,
    RaggedSamples,
    InsufficientSamples,
    // dpomath
    EmptySequence,
    LengthMismatch,
    NonFinite,
    EmptySet,
    // analysis
    MissingOutcome,
    UnknownCategory,
    LabelOnCorrect,
    ItemSetMismatch,
    // synth
    CatalogMismatch,
    EndpointError,
    EmptyCompletion,
};

/// Upper-snake name used in artifacts and messages, e.g. "DUPLICATE_ID".
std::string_view error_code_name(ErrorCode code);
/// Inverse of error_code_name; absent for unknown names.
std::optional<ErrorCode> parse_error_code(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace sqlpref
