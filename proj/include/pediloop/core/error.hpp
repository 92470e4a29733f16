#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pediloop {

/// Coarse error families. The CLI maps them onto stable exit codes.
enum class ErrorFamily {
    Config,    // usage, configuration, setup
    Data,      // malformed or corrupt input data
    Runtime,   // protocol, session, and runtime violations
};

class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, const std::string& what) : std::runtime_error(what), family_(family) {}
    ErrorFamily family() const noexcept { return family_; }

private:
    ErrorFamily family_;
};

#define PEDILOOP_DEFINE_ERROR(Name, Family)                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(ErrorFamily::Family, what) {} \
    }

PEDILOOP_DEFINE_ERROR(ConfigError, Config);
PEDILOOP_DEFINE_ERROR(ScenarioSetupError, Config);
PEDILOOP_DEFINE_ERROR(DomainError, Config);
PEDILOOP_DEFINE_ERROR(ControlError, Runtime);
PEDILOOP_DEFINE_ERROR(SessionError, Runtime);
PEDILOOP_DEFINE_ERROR(ProtocolError, Runtime);
PEDILOOP_DEFINE_ERROR(ModeViolation, Runtime);
PEDILOOP_DEFINE_ERROR(PoseFormatError, Data);
PEDILOOP_DEFINE_ERROR(RetargetError, Data);
PEDILOOP_DEFINE_ERROR(SequenceError, Data);
PEDILOOP_DEFINE_ERROR(MergeError, Data);
PEDILOOP_DEFINE_ERROR(CorruptionError, Data);
PEDILOOP_DEFINE_ERROR(VersionError, Data);
PEDILOOP_DEFINE_ERROR(ValidationError, Data);
PEDILOOP_DEFINE_ERROR(DegenerateDataError, Data);
PEDILOOP_DEFINE_ERROR(UnsupportedGeometry, Data);

#undef PEDILOOP_DEFINE_ERROR

/// Text parse failure with a 1-based line and column (column 0 when unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
        : Error(ErrorFamily::Data, format(what, line, column)), line_(line), column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column)
    {
        std::string s = "line " + std::to_string(line);
        if (column > 0) s += ", column " + std::to_string(column);
        return s + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// Wire-level decode failure; offset is the byte position within the frame.
class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::size_t offset)
        : Error(ErrorFamily::Runtime, "offset " + std::to_string(offset) + ": " + what), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace pediloop
