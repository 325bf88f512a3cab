#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace barm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class OutOfWorkspace : public Error {
public:
    using Error::Error;
};

// A primitive was requested in a gripper state that cannot execute it.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class InitInfeasible : public Error {
public:
    using Error::Error;
};

class PlannerStuck : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class RegistrationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("config key '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class ActionFormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Raised by the demo-file reader; offset is the byte position where decoding failed.
class FormatError : public Error {
public:
    FormatError(std::uint64_t offset, const std::string& what)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace barm
