#pragma once

#include <stdexcept>
#include <string>

namespace tfr {

// Error taxonomy. The CLI maps these onto exit codes: config problems -> 2,
// data problems -> 3, numeric failures -> 4.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- data errors --------------------------------------------------------

struct IOFailure : DataError {
    explicit IOFailure(const std::string& what) : DataError("I/O failure: " + what) {}
};

struct ParseError : DataError {
    std::size_t line;
    ParseError(const std::string& what, std::size_t line_no)
        : DataError("parse error at line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

struct InconsistentChannelCount : DataError {
    explicit InconsistentChannelCount(const std::string& what) : DataError(what) {}
};

struct EventOutOfRange : DataError {
    explicit EventOutOfRange(const std::string& what) : DataError(what) {}
};

// -- contract violations ------------------------------------------------

struct TooFewChannels : std::invalid_argument {
    explicit TooFewChannels(const std::string& what) : std::invalid_argument(what) {}
};

struct NyquistViolation : std::invalid_argument {
    explicit NyquistViolation(const std::string& what) : std::invalid_argument(what) {}
};

struct EmptyEpoch : std::invalid_argument {
    explicit EmptyEpoch(const std::string& what) : std::invalid_argument(what) {}
};

struct WindowTooShort : std::invalid_argument {
    explicit WindowTooShort(const std::string& what) : std::invalid_argument(what) {}
};

struct DimensionUnsupported : std::invalid_argument {
    explicit DimensionUnsupported(const std::string& what) : std::invalid_argument(what) {}
};

struct TooLargeForOracle : std::invalid_argument {
    explicit TooLargeForOracle(const std::string& what) : std::invalid_argument(what) {}
};

struct UnknownMetric : std::invalid_argument {
    explicit UnknownMetric(const std::string& what) : std::invalid_argument(what) {}
};

struct ClassTooSmall : std::invalid_argument {
    explicit ClassTooSmall(const std::string& what) : std::invalid_argument(what) {}
};

struct NotTreeBased : std::invalid_argument {
    explicit NotTreeBased(const std::string& what) : std::invalid_argument(what) {}
};

struct MismatchedFeatureSets : std::invalid_argument {
    explicit MismatchedFeatureSets(const std::string& what) : std::invalid_argument(what) {}
};

struct OutOfBounds : std::invalid_argument {
    explicit OutOfBounds(const std::string& what) : std::invalid_argument(what) {}
};

struct DegenerateVariance : NumericError {
    explicit DegenerateVariance(const std::string& what) : NumericError(what) {}
};

// Thrown by optimization objectives; the optimizer records the trial as
// failed and moves on, so this never reaches the CLI boundary.
struct ObjectiveFailure : std::runtime_error {
    explicit ObjectiveFailure(const std::string& what) : std::runtime_error(what) {}
};

struct SingularKernel : NumericError {
    explicit SingularKernel(const std::string& what) : NumericError(what) {}
};

struct SpecInvalid : ConfigError {
    explicit SpecInvalid(const std::string& what) : ConfigError(what) {}
};

}  // namespace tfr
