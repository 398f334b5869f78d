#ifndef PERSPECTRA_ERROR_HPP
#define PERSPECTRA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace perspectra {

// Input files or payloads that cannot be decoded at all.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed input that violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Missing or ill-typed kit configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Endpoint transport failure. status == 0 means no HTTP response was
// received; exhausted means the retry budget ran out on retryable failures.
class HttpError : public std::runtime_error {
public:
    HttpError(const std::string& what, int status, std::string body, int attempts,
              bool exhausted = false)
        : std::runtime_error(what),
          status(status),
          body(std::move(body)),
          attempts(attempts),
          exhausted(exhausted) {}

    int status = 0;
    std::string body;
    int attempts = 1;
    bool exhausted = false;
};

}  // namespace perspectra

#endif
