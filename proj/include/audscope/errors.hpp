#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace audscope {

/// Base class for all audscope errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value (bad prevalence, negative count, malformed key).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A municipality or attribute id is not known to the backend.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The live backend has no transport or credentials.
class BackendUnavailableError : public Error {
public:
    using Error::Error;
};

/// A replay backend has no recorded response for the requested query.
class MissingRecordingError : public Error {
public:
    using Error::Error;
};

/// An input file is missing a required column or is empty.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// No municipality qualifies as an exclusion-query reference.
class NoReferenceAvailableError : public Error {
public:
    using Error::Error;
};

/// Too few complete rows to fit the requested model.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A feature column is constant and cannot be standardized.
class DegenerateFeatureError : public Error {
public:
    using Error::Error;
};

/// The design matrix is rank deficient; names the offending columns.
class CollinearityError : public Error {
public:
    CollinearityError(const std::string& msg, std::vector<std::string> columns)
        : Error(msg), columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }

private:
    std::vector<std::string> columns_;
};

/// A pipeline stage was invoked before its upstream artifact exists.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

}  // namespace audscope
