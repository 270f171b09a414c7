#pragma once

#include <stdexcept>
#include <string>

namespace silic {

/// Base exception. `code()` is a short machine-readable kind such as
/// "invalid-config" or "parse-error"; the CLI prints it verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InvalidConfig : public Error {
public:
    explicit InvalidConfig(const std::string& m) : Error("invalid-config", m) {}
};

class TerminalState : public Error {
public:
    explicit TerminalState(const std::string& m) : Error("terminal-state", m) {}
};

class SchemaError : public Error {
public:
    SchemaError(std::string column, const std::string& m)
        : Error("schema-error", m), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class RowError : public Error {
public:
    RowError(std::size_t line, const std::string& m)
        : Error("row-error", "line " + std::to_string(line) + ": " + m), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnmappedActivity : public Error {
public:
    explicit UnmappedActivity(const std::string& label)
        : Error("unmapped-activity", "unmapped activity label '" + label + "'"), label_(label) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& m) : Error("insufficient-data", m) {}
};

class DivergenceError : public Error {
public:
    DivergenceError(double last_delta, const std::string& m)
        : Error("divergence", m), last_delta_(last_delta) {}
    double last_delta() const noexcept { return last_delta_; }

private:
    double last_delta_;
};

class InvalidGuidance : public Error {
public:
    explicit InvalidGuidance(const std::string& m) : Error("invalid-guidance", m) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& m) : Error("parse-error", m) {}
};

class ProviderUnavailable : public Error {
public:
    explicit ProviderUnavailable(const std::string& m) : Error("provider-unavailable", m) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& m) : Error("precondition", m) {}
};

class InvalidLabel : public Error {
public:
    explicit InvalidLabel(const std::string& m) : Error("invalid-label", m) {}
};

class OracleTooLarge : public Error {
public:
    explicit OracleTooLarge(const std::string& m) : Error("oracle-too-large", m) {}
};

} // namespace silic
