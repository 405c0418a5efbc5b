#pragma once

#include <stdexcept>
#include <string>

namespace leakscan {

// Base for all audit-level failures. Subcommands map these to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// Malformed record during ingestion; carries the 0-based record number.
class FormatError : public Error {
public:
    FormatError(std::size_t record, const std::string& reason)
        : Error("record " + std::to_string(record) + ": " + reason), record_(record), reason_(reason) {}
    std::size_t record() const { return record_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t record_;
    std::string reason_;
};

class InvalidUtf8 : public Error {
public:
    explicit InvalidUtf8(const std::string& what) : Error(what) {}
};

class NameDetectorUnavailable : public Error {
public:
    explicit NameDetectorUnavailable(const std::string& what) : Error(what) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& what) : Error(what) {}
};

class EmptyStore : public Error {
public:
    explicit EmptyStore(const std::string& what) : Error(what) {}
};

class DivisionByZero : public Error {
public:
    explicit DivisionByZero(const std::string& what) : Error(what) {}
};

class RemoteError : public Error {
public:
    RemoteError(int status, const std::string& body)
        : Error("remote error, status " + std::to_string(status) + ": " + body), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(what) {}
};

class CompressionError : public Error {
public:
    explicit CompressionError(const std::string& what) : Error(what) {}
};

class UnparseableLabel : public Error {
public:
    explicit UnparseableLabel(const std::string& completion)
        : Error("completion does not parse to yes/no: \"" + completion + "\""), completion_(completion) {}
    const std::string& completion() const { return completion_; }

private:
    std::string completion_;
};

class ArityError : public Error {
public:
    explicit ArityError(const std::string& what) : Error(what) {}
};

class DegenerateLabels : public Error {
public:
    explicit DegenerateLabels(const std::string& what) : Error(what) {}
};

class ExampleOverlap : public Error {
public:
    explicit ExampleOverlap(const std::string& what) : Error(what) {}
};

class ExampleArity : public Error {
public:
    explicit ExampleArity(const std::string& what) : Error(what) {}
};

class NoPiiFound : public Error {
public:
    explicit NoPiiFound(const std::string& what) : Error(what) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(what) {}
};

class CoverageGap : public Error {
public:
    explicit CoverageGap(const std::string& what) : Error(what) {}
};

class SplitOverlap : public Error {
public:
    explicit SplitOverlap(const std::string& what) : Error(what) {}
};

class InsufficientExamples : public Error {
public:
    explicit InsufficientExamples(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace leakscan
