#pragma once

#include <stdexcept>
#include <string>

namespace rcakit {

// Base class for all toolkit errors.  Subclasses mirror the failure
// categories of the public operation contracts so callers can catch a
// specific condition without string matching.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingFile : Error { using Error::Error; };
struct SchemaViolation : Error { using Error::Error; };
struct LabelViolation : Error { using Error::Error; };
struct ClockViolation : Error { using Error::Error; };

struct UnknownService : Error { using Error::Error; };
struct EmptyGrid : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct InsufficientHistory : Error { using Error::Error; };

struct UnknownRoot : Error { using Error::Error; };
struct RootInAffected : Error { using Error::Error; };
struct RootNotRanked : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct CheckpointMismatch : Error { using Error::Error; };
struct IntervalOutOfRange : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

}  // namespace rcakit
