#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sat {

// Root of every error thrown by the library. Callers that only care about
// "did it work" catch this; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
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

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Raised when an event is not valid at the current conversation node.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string node, std::string event)
      : Error("event '" + event + "' is not valid at node '" + node + "'"),
        node_(std::move(node)),
        event_(std::move(event)) {}
  const std::string& node() const noexcept { return node_; }
  const std::string& event() const noexcept { return event_; }

 private:
  std::string node_;
  std::string event_;
};

// No approved candidate exists for a (class, language) pair.
class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

}  // namespace sat
