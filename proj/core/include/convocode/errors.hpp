#pragma once

#include <stdexcept>
#include <string>

namespace convocode {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file or response text (carries offset/field info in the message).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete configuration (missing API key, bad parameter range, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Backend transport failure after retries were exhausted.
class TransportError : public Error {
public:
    using Error::Error;
};

/// A backend or callback violated its contract (wrong length, label outside tied set, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Operation applied to a value outside its domain (degenerate statistic, bad key, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A free-text label did not resolve to any canonical code.
class UnknownCodeError : public Error {
public:
    UnknownCodeError(const std::string& msg, std::string label)
        : Error(msg), label_(std::move(label)) {}

    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

}  // namespace convocode
