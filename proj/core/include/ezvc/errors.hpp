#pragma once

#include <stdexcept>
#include <string>

namespace ezvc {

// Error taxonomy shared by every module. The CLI maps these onto exit codes
// and machine-readable kind strings; library code only ever throws.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Unreadable/unwritable files, OS-level failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

// Bad magic, truncated payloads, malformed containers.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

// Caller violated an API precondition (shape/dim/tag mismatch).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error("contract", msg) {}
};

// Input is well-formed but outside the operation's domain (empty audio,
// too-short prompt, fewer points than clusters).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

// Non-finite or otherwise unusable numeric data.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error("data", msg) {}
};

} // namespace ezvc
