#pragma once

#include <stdexcept>
#include <string>

namespace gseq {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// An exhaustive routine was asked to work past its configured size limit.
class CapExceeded : public Error
{
public:
    using Error::Error;
};

class InvalidGroup : public Error
{
public:
    using Error::Error;
};

class InvalidInput : public Error
{
public:
    using Error::Error;
};

/// A lemma that holds for all valid inputs failed; points at a bug or a broken precondition.
class LemmaViolation : public Error
{
public:
    using Error::Error;
};

class ScanBudgetExceeded : public Error
{
public:
    using Error::Error;
};

class DecompositionFailure : public Error
{
public:
    DecompositionFailure(std::string stage, const std::string& what)
        : Error("decomposition failed at " + stage + ": " + what), stage_(std::move(stage))
    {
    }

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class IntervalViolation : public Error
{
public:
    using Error::Error;
};

class OrderingFailure : public Error
{
public:
    using Error::Error;
};

class NotSequenceable : public Error
{
public:
    using Error::Error;
};

class RetriesExhausted : public Error
{
public:
    using Error::Error;
};

class BudgetExceeded : public Error
{
public:
    using Error::Error;
};

} // namespace gseq
