#ifndef ACE_ERRORS_HPP
#define ACE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ace {

enum class ErrorKind {
  invalid_argument,
  not_found,
  model_format,
  model_integrity,
  insufficient_data,
  dependency,
  config,
  io,
};

const char* to_string(ErrorKind kind);

/// Every library failure is reported as an ace::Error carrying its kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

}  // namespace ace

#endif  // ACE_ERRORS_HPP
