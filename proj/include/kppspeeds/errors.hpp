#pragma once

#include <stdexcept>
#include <string>

namespace kppspeeds {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the requested function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A root or tangency search found no admissible solution.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// The request is well formed but outside what the solvers can answer.
class UnsupportedCase : public Error {
public:
    using Error::Error;
};

/// The explicit time stepper blew up or produced NaNs.
class InstabilityError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, int line, const std::string& what)
        : Error(format(key, line, what)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string msg = "config";
        if (line > 0) msg += " line " + std::to_string(line);
        if (!key.empty()) msg += " key '" + key + "'";
        return msg + ": " + what;
    }

    std::string key_;
    int line_;
};

}  // namespace kppspeeds
