#pragma once

#include <stdexcept>
#include <string>

namespace autoverse {

// Malformed input: bad tiles, patterns, DSL text, out-of-range parameters.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
    ValidationError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), m_line(line) {}

    // 0 when the error is not tied to a source line.
    int line() const noexcept { return m_line; }

private:
    int m_line = 0;
};

// A caller broke an operation's precondition (e.g. stepping a finished episode).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace autoverse
