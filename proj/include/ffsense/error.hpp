#pragma once

#include <stdexcept>
#include <string>

namespace ffsense {

// Violations of a data or model contract. The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable locators. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DomainError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DomainError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DanglingReference : public DomainError {
 public:
  explicit DanglingReference(const std::string& id)
      : DomainError("dangling reference: unknown id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class DuplicateId : public DomainError {
 public:
  explicit DuplicateId(const std::string& id)
      : DomainError("duplicate id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class ShapeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class CorruptPayload : public DomainError {
 public:
  using DomainError::DomainError;
};

class VersionMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace ffsense
