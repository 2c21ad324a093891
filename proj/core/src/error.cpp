// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/error.hpp"

namespace sqlpref {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::MalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::DuplicateId: return "DUPLICATE_ID";
    case ErrorCode::UnreadableDb: return "UNREADABLE_DB";
    case ErrorCode::EmptySchema: return "EMPTY_SCHEMA";
    case ErrorCode::UnknownDb: return "UNKNOWN_DB";
    case ErrorCode::GoldFailed: return "GOLD_FAILED";
    case ErrorCode::MissingVerdict: return "MISSING_VERDICT";
    case ErrorCode::DuplicateKey: return "DUPLICATE_KEY";
    case ErrorCode::UnjudgedRollout: return "UNJUDGED_ROLLOUT";
    case ErrorCode::MissingItem: return "MISSING_ITEM";
    case ErrorCode::ExtraSample: return "EXTRA_SAMPLE";
    case ErrorCode::EmptyEval: return "EMPTY_EVAL";
    case ErrorCode::RaggedSamples: return "RAGGED_SAMPLES";
    case ErrorCode::InsufficientSamples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::EmptySequence: return "EMPTY_SEQUENCE";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::EmptySet: return "EMPTY_SET";
    case ErrorCode::MissingOutcome: return "MISSING_OUTCOME";
    case ErrorCode::UnknownCategory: return "UNKNOWN_CATEGORY";
    case ErrorCode::LabelOnCorrect: return "LABEL_ON_CORRECT";
    case ErrorCode::ItemSetMismatch: return "ITEM_SET_MISMATCH";
    case ErrorCode::CatalogMismatch: return "CATALOG_MISMATCH";
    case ErrorCode::EndpointError: return "ENDPOINT_ERROR";
    case ErrorCode::EmptyCompletion: return "EMPTY_COMPLETION";
    }
    return "UNKNOWN";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::EmptyCompletion); ++i) {
        const auto code = static_cast<ErrorCode>(i);
        if (error_code_name(code) == name) return code;
    }
    return std::nullopt;
}

} // namespace sqlpref
