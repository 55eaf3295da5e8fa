#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace openleaf {

// Stable tokens printed on the last line of a failing CLI invocation.
enum class ErrorCategory {
  Usage,
  Precondition,
  Composition,
  Io,
  Data,
  Auth,
  RateLimited,
  Transport,
  BadResponse,
  CassetteMiss,
  DuplicateSlotIndex,
  DuplicateIndex,
  CountMismatch,
  PlaceholderCountMismatch,
  EmptyVisualPrompt,
  NoHtmlFound,
  MissingStyle,
  ScoreNotFound,
  ScoreOutOfRange,
  SubjectCount,
  DegenerateRanking,
};

std::string_view category_token(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& message)
      : Error(ErrorCategory::Precondition, message) {}
};

class CompositionError : public Error {
 public:
  explicit CompositionError(const std::string& message)
      : Error(ErrorCategory::Composition, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCategory::Io, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorCategory::Data, message) {}
};

class AuthError : public Error {
 public:
  explicit AuthError(const std::string& message) : Error(ErrorCategory::Auth, message) {}
};

class RateLimited : public Error {
 public:
  explicit RateLimited(const std::string& message)
      : Error(ErrorCategory::RateLimited, message) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error(ErrorCategory::Transport, message) {}
};

class BadResponse : public Error {
 public:
  explicit BadResponse(const std::string& message)
      : Error(ErrorCategory::BadResponse, message) {}
};

class CassetteMiss : public Error {
 public:
  explicit CassetteMiss(std::string digest)
      : Error(ErrorCategory::CassetteMiss, "no cassette entry for request digest " + digest),
        digest_(std::move(digest)) {}

  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

class DuplicateSlotIndex : public Error {
 public:
  explicit DuplicateSlotIndex(int index)
      : Error(ErrorCategory::DuplicateSlotIndex,
              "duplicate image slot index " + std::to_string(index)),
        index_(index) {}

  int index() const noexcept { return index_; }

 private:
  int index_;
};

class DuplicateIndex : public Error {
 public:
  explicit DuplicateIndex(int index)
      : Error(ErrorCategory::DuplicateIndex, "duplicate list index " + std::to_string(index)),
        index_(index) {}

  int index() const noexcept { return index_; }

 private:
  int index_;
};

class CountMismatch : public Error {
 public:
  CountMismatch(int expected, int found, std::vector<int> missing, std::vector<int> extra);

  int expected() const noexcept { return expected_; }
  int found() const noexcept { return found_; }
  const std::vector<int>& missing() const noexcept { return missing_; }
  const std::vector<int>& extra() const noexcept { return extra_; }

 private:
  int expected_;
  int found_;
  std::vector<int> missing_;
  std::vector<int> extra_;
};

class PlaceholderCountMismatch : public Error {
 public:
  PlaceholderCountMismatch(int expected, int got)
      : Error(ErrorCategory::PlaceholderCountMismatch,
              "expected " + std::to_string(expected) + " image placeholders, got " +
                  std::to_string(got)),
        expected_(expected),
        got_(got) {}

  int expected() const noexcept { return expected_; }
  int got() const noexcept { return got_; }

 private:
  int expected_;
  int got_;
};

class EmptyVisualPrompt : public Error {
 public:
  explicit EmptyVisualPrompt(int index)
      : Error(ErrorCategory::EmptyVisualPrompt,
              "empty visual prompt for slot " + std::to_string(index)),
        index_(index) {}

  int index() const noexcept { return index_; }

 private:
  int index_;
};

class NoHtmlFound : public Error {
 public:
  NoHtmlFound() : Error(ErrorCategory::NoHtmlFound, "no HTML block found in model output") {}
};

class MissingStyle : public Error {
 public:
  MissingStyle() : Error(ErrorCategory::MissingStyle, "no STYLE line found in model output") {}
};

class ScoreNotFound : public Error {
 public:
  explicit ScoreNotFound(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
};

class ScoreOutOfRange : public Error {
 public:
  ScoreOutOfRange(std::string label, double value);

  const std::string& label() const noexcept { return label_; }
  double value() const noexcept { return value_; }

 private:
  std::string label_;
  double value_;
};

class SubjectCountError : public Error {
 public:
  explicit SubjectCountError(int found)
      : Error(ErrorCategory::SubjectCount,
              "expected exactly 2 common subjects, found " + std::to_string(found)),
        found_(found) {}

  int found() const noexcept { return found_; }

 private:
  int found_;
};

class DegenerateRanking : public Error {
 public:
  explicit DegenerateRanking(const std::string& axis)
      : Error(ErrorCategory::DegenerateRanking, "all values equal on the " + axis + " axis") {}
};

}  // namespace openleaf
