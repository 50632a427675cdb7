#pragma once

#include <stdexcept>
#include <string>

namespace neuroevo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run or genome configuration (bad conv seed, bad config value).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Mismatched matrix, kernel, or image dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A genome violates a structural invariant (cycle, duplicate ids, ...).
class StructureError : public Error {
public:
    using Error::Error;
};

// API misuse, e.g. sharing fitness before genomes were evaluated.
class UsageError : public Error {
public:
    using Error::Error;
};

// Fitness evaluation produced an unusable value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

// Document does not match its schema; `path()` is a JSON-pointer-like
// location of the offending field.
class ParseError : public Error {
public:
    ParseError(std::string path, const std::string& message)
        : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)), message_(message) {}

    const std::string& path() const noexcept { return path_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string path_;
    std::string message_;
};

class UnsupportedVersionError : public Error {
public:
    using Error::Error;
};

} // namespace neuroevo
