#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace genesis {

/// Base of every error raised by the library. `kind()` is the stable name
/// used in machine-readable CLI output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GENESIS_SIMPLE_ERROR(Name)                                           \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

// backend
GENESIS_SIMPLE_ERROR(TransportError);
GENESIS_SIMPLE_ERROR(InvalidRequest);

class ServiceError : public Error {
public:
    ServiceError(int status, std::string body)
        : Error("ServiceError", "service replied with status " + std::to_string(status)),
          status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

// documents
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error("ParseError", message + " (at byte " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

GENESIS_SIMPLE_ERROR(SchemaError);
GENESIS_SIMPLE_ERROR(MissingArtifactBlock);
GENESIS_SIMPLE_ERROR(WrongVariant);
GENESIS_SIMPLE_ERROR(TemplateError);

/// A stage prompt needs a context field that has not been produced yet.
class MissingContext : public Error {
public:
    explicit MissingContext(std::string field)
        : Error("MissingContext", "missing context field: " + field), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// supervision
GENESIS_SIMPLE_ERROR(MalformedVerdict);
GENESIS_SIMPLE_ERROR(ApproverProtocolError);

class StageEscalation : public Error {
public:
    explicit StageEscalation(std::vector<std::string> critiques)
        : Error("StageEscalation", "no approval after " + std::to_string(critiques.size()) + " rounds"),
          critiques_(std::move(critiques)) {}

    const std::vector<std::string>& critiques() const noexcept { return critiques_; }

private:
    std::vector<std::string> critiques_;
};

// loop guard
class LoopAborted : public Error {
public:
    LoopAborted(const std::string& key, int incidents)
        : Error("LoopAborted", "repetition not broken for " + key + " after " +
                                   std::to_string(incidents) + " incidents"),
          incidents_(incidents) {}

    int incidents() const noexcept { return incidents_; }

private:
    int incidents_;
};

GENESIS_SIMPLE_ERROR(InjectionBudgetExceeded);
GENESIS_SIMPLE_ERROR(StageTimeout);

// runtime / config
GENESIS_SIMPLE_ERROR(ConfigError);

// persistence
GENESIS_SIMPLE_ERROR(StorageError);
GENESIS_SIMPLE_ERROR(SequenceConflict);
GENESIS_SIMPLE_ERROR(UnknownRun);
GENESIS_SIMPLE_ERROR(CorruptLog);

// emitter
class IncompleteContext : public Error {
public:
    explicit IncompleteContext(std::string field)
        : Error("IncompleteContext", "context lacks " + field), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

GENESIS_SIMPLE_ERROR(ValidationFailed);
GENESIS_SIMPLE_ERROR(UnsupportedVersion);
GENESIS_SIMPLE_ERROR(BackendFailed);
GENESIS_SIMPLE_ERROR(InvalidBundle);

#undef GENESIS_SIMPLE_ERROR

}  // namespace genesis
