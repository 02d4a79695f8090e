#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgrx {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input line; `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class UnknownNode : public Error {
public:
    explicit UnknownNode(const std::string& id) : Error("unknown node: " + id), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class KindMismatch : public Error {
public:
    using Error::Error;
};

/// A record or profile invariant failed; `field()` is a dotted path such as
/// "profile.age_months".
class InvalidRecord : public Error {
public:
    InvalidRecord(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A JSON document has the wrong shape; `field()` is the offending path.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EmptyDevSet : public Error {
public:
    EmptyDevSet() : Error("fit_gate needs at least one dev case") {}
};

class MissingGold : public Error {
public:
    MissingGold() : Error("record has no gold annotation") {}
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("training corpus is empty") {}
};

class DegenerateLabels : public Error {
public:
    DegenerateLabels() : Error("training examples contain a single class") {}
};

class NoDiagnosis : public Error {
public:
    NoDiagnosis() : Error("findings carry no diagnosis candidate") {}
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class TooFewSamples : public Error {
public:
    TooFewSamples() : Error("bootstrap needs at least two samples") {}
};

class UnknownVariant : public Error {
public:
    explicit UnknownVariant(const std::string& name) : Error("unknown ablation variant: " + name) {}
};

} // namespace kgrx
