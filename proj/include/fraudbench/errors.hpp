#pragma once

#include <stdexcept>
#include <string>

namespace fraudbench {

// Base for every harness error; catch this to apply the conservative
// per-trial failure policy without aborting a run.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Corpus / configuration.
struct SchemaError : Error { using Error::Error; };
struct DuplicateIdError : Error { using Error::Error; };
struct InsufficientListingsError : Error { using Error::Error; };
struct ExhaustedPoolError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Gateway.
struct TransportError : Error { using Error::Error; };
struct AuthError : Error { using Error::Error; };
struct RateLimitedError : Error { using Error::Error; };
struct EmptyCompletionError : Error { using Error::Error; };
struct MissingBindingError : Error { using Error::Error; };
struct UnknownPlaceholderError : Error { using Error::Error; };
struct ScriptDivergenceError : Error { using Error::Error; };
struct ScriptExhaustedError : Error { using Error::Error; };

// Agent-output parsing.
struct ParseError : Error { using Error::Error; };
struct RankingParseError : ParseError { using ParseError::ParseError; };
struct VerdictParseError : ParseError { using ParseError::ParseError; };
struct FabricationParseError : ParseError { using ParseError::ParseError; };
struct JudgeParseError : ParseError { using ParseError::ParseError; };
struct AnnotationParseError : ParseError { using ParseError::ParseError; };

// Domain / metrics.
struct SizeMismatchError : Error { using Error::Error; };
struct IncompleteTrialError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };
struct KOutOfRangeError : Error { using Error::Error; };
struct InconsistentTotalError : Error { using Error::Error; };
struct KeyMismatchError : Error { using Error::Error; };

// Run log.
struct LogCorruptionError : Error { using Error::Error; };

}  // namespace fraudbench
