#pragma once

#include <stdexcept>
#include <string>

namespace fate {

/// Coarse failure class; the CLI maps each one to an exit status.
enum class ErrorKind {
    Config = 2,
    Data = 3,
    Numerical = 4,
    Ordering = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};

struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::Data, w) {}
};

struct ParseError : DataError {
    ParseError(std::size_t line, const std::string& w)
        : DataError("line " + std::to_string(line) + ": " + w), line(line) {}
    std::size_t line;
};

struct SchemaError : DataError {
    using DataError::DataError;
};

struct DegenerateDatasetError : DataError {
    using DataError::DataError;
};

struct InsufficientDataError : DataError {
    using DataError::DataError;
};

struct DegenerateLabelsError : DataError {
    using DataError::DataError;
};

/// A cross-fitting training complement is missing a subpopulation a nuisance needs.
struct FoldStarvationError : DataError {
    FoldStarvationError(std::string subpop, const std::string& w)
        : DataError(w), subpopulation(std::move(subpop)) {}
    std::string subpopulation;
};

struct ContextIncompleteError : ConfigError {
    using ConfigError::ConfigError;
};

struct NotIdentifiableError : ConfigError {
    using ConfigError::ConfigError;
};

struct RangeUnavailableError : DataError {
    using DataError::DataError;
};

struct BootstrapUnstableError : Error {
    explicit BootstrapUnstableError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};

struct OrderingViolation : Error {
    explicit OrderingViolation(const std::string& w) : Error(ErrorKind::Ordering, w) {}
};

}  // namespace fate
