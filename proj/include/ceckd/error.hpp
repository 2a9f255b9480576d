#ifndef CECKD_ERROR_HPP
#define CECKD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ceckd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CECKD_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}  \
    }

// kd_index
CECKD_DEFINE_ERROR(DuplicateLabel);
CECKD_DEFINE_ERROR(UnknownLabel);
CECKD_DEFINE_ERROR(SentinelMisuse);
CECKD_DEFINE_ERROR(MalformedBox);

// ec_kernel / engine
CECKD_DEFINE_ERROR(OutOfOrderEvent);
CECKD_DEFINE_ERROR(EngineInvariantViolation);
CECKD_DEFINE_ERROR(MalformedWindow);
CECKD_DEFINE_ERROR(TermSyntax);

// pattern_compiler
CECKD_DEFINE_ERROR(NestingTooDeep);
CECKD_DEFINE_ERROR(DuplicateRuleId);
CECKD_DEFINE_ERROR(InvalidRuleSpec);

// ingest
CECKD_DEFINE_ERROR(UnsortedInput);
CECKD_DEFINE_ERROR(EmptySeed);
CECKD_DEFINE_ERROR(BadTimestamp);
CECKD_DEFINE_ERROR(LogCorrupt);
CECKD_DEFINE_ERROR(UnknownPatient);
CECKD_DEFINE_ERROR(InvalidPatientId);

// bench
CECKD_DEFINE_ERROR(ConfigError);

#undef CECKD_DEFINE_ERROR

/// Row-addressed CSV failure. Row numbers are 1-based and count the header.
class CsvSyntax : public Error {
public:
    CsvSyntax(std::size_t row, const std::string& what)
        : Error("CsvSyntax: row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class UnknownSignal : public Error {
public:
    UnknownSignal(std::size_t row, const std::string& signal)
        : Error("UnknownSignal: row " + std::to_string(row) + ": '" + signal + "'"), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

} // namespace ceckd

#endif // CECKD_ERROR_HPP
