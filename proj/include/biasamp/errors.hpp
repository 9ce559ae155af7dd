#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace biasamp {

/// Failure while reading an input artifact, attributed to file and line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + message) {}
    explicit ParseError(const std::string& message) : std::runtime_error(message) {}
};

/// Semantically invalid data: duplicate ids, range violations, empty sets.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration rejected; carries the full aggregated error list.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string joined, std::vector<std::string> errors)
        : std::runtime_error(std::move(joined)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

}  // namespace biasamp
