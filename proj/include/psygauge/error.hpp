#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace psygauge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- spec parsing -----------------------------------------------------------

class SchemaError : public Error {
public:
    using Error::Error;
};

// Names exactly one violated invariant (`rule`) and where it was violated.
class ValidationError : public Error {
public:
    ValidationError(std::string rule, std::string question_id, const std::string& message)
        : Error(message), rule_(std::move(rule)), question_id_(std::move(question_id)) {}

    const std::string& rule() const noexcept { return rule_; }
    const std::string& question_id() const noexcept { return question_id_; }

private:
    std::string rule_;
    std::string question_id_;
};

class DanglingRefError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PlaceholderError : public Error {
public:
    using Error::Error;
};

// --- scoring ----------------------------------------------------------------

class MissingScore : public Error {
public:
    MissingScore(const std::string& message, std::vector<std::string> missing)
        : Error(message), missing_(std::move(missing)) {}

    // Provenance triples "question_id/cterm/level_term" that had no score.
    const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

class DegenerateMatrix : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class InsufficientPopulation : public Error {
public:
    using Error::Error;
};

// --- statistics -------------------------------------------------------------

class TooFewTerms : public Error {
public:
    using Error::Error;
};

class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class ZeroVariance : public Error {
public:
    using Error::Error;
};

class PairingError : public Error {
public:
    using Error::Error;
};

// --- backends ---------------------------------------------------------------

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class Timeout : public BackendError {
public:
    using BackendError::BackendError;
};

class HttpError : public BackendError {
public:
    HttpError(int status, std::string body)
        : BackendError("HTTP " + std::to_string(status) + ": " + body), status_(status), body_(std::move(body)) {}
    HttpError(int status, std::string body, const std::string& context)
        : BackendError(context + ": HTTP " + std::to_string(status) + ": " + body), status_(status),
          body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

// An offline cache lookup that found nothing; carries the unscored queries.
class CacheMiss : public MissingScore {
public:
    using MissingScore::MissingScore;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace psygauge
