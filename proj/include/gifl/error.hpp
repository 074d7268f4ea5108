#pragma once

#include <stdexcept>
#include <string>

namespace gifl {

enum class ErrorKind {
  Io,
  Format,
  Shape,
  Config,
  Numeric,
  Version,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::Io, msg); }
[[noreturn]] inline void throw_format(const std::string& msg) { throw Error(ErrorKind::Format, msg); }
[[noreturn]] inline void throw_shape(const std::string& msg) { throw Error(ErrorKind::Shape, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::Config, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }
[[noreturn]] inline void throw_version(const std::string& msg) { throw Error(ErrorKind::Version, msg); }

}  // namespace gifl
