#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seqsparse {

// Base of every error the library raises. Each subclass corresponds to one
// failure mode that callers are expected to distinguish.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A constructor or function argument violates its documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// The caller asked for the pointwise likelihood ratio of a pair whose
// alternative is not revealed to procedures.
class QueryNotPermitted : public Error {
public:
    using Error::Error;
};

class NonFiniteDivergence : public Error {
public:
    using Error::Error;
};

class UnsupportedFamily : public Error {
public:
    using Error::Error;
};

// Sequential thresholding schedule assigns zero samples to the first step.
class ScheduleUnderflow : public Error {
public:
    using Error::Error;
};

class MismatchedInstance : public Error {
public:
    using Error::Error;
};

class DivergenceZero : public Error {
public:
    using Error::Error;
};

// The thresholding rate constant c_n is not positive for the given inputs.
class NotPositive : public Error {
public:
    using Error::Error;
};

class SparsityRegimeViolation : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A Monte Carlo trial failed; carries the seed that reproduces it.
class TrialError : public Error {
public:
    TrialError(std::uint64_t trial, std::uint64_t seed, const std::string& what)
        : Error("trial " + std::to_string(trial) + " (seed " + std::to_string(seed) + "): " + what),
          trial_(trial), seed_(seed) {}
    std::uint64_t trial() const noexcept { return trial_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t trial_;
    std::uint64_t seed_;
};

}  // namespace seqsparse
