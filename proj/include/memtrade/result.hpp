#pragma once

#include <optional>
#include <string>
#include <utility>

namespace memtrade {

// Lean expected-style result: either a value or an error message.
template <class T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}
  static Result failure(std::string message) { return Result(Error{std::move(message)}); }

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return *value_; }
  T& value() & { return *value_; }
  T&& take() && { return std::move(*value_); }

  const std::string& error() const { return error_; }

 private:
  struct Error {
    std::string message;
  };
  explicit Result(Error e) : error_(std::move(e.message)) {}

  std::optional<T> value_;
  std::string error_;
};

// Result with no payload.
class Status {
 public:
  Status() = default;
  static Status failure(std::string message) { return Status(std::move(message)); }

  bool ok() const { return error_.empty(); }
  explicit operator bool() const { return ok(); }
  const std::string& error() const { return error_; }

 private:
  explicit Status(std::string message) : error_(std::move(message)) {}
  std::string error_;
};

}  // namespace memtrade
