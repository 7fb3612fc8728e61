#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace graphot {

enum class ErrorKind {
  label,
  shape,
  numeric,
  contract,
  validation,
  assumption,
  capacity,
  io,
  argument,
};

const char* to_string(ErrorKind kind) noexcept;

/// Non-fatal diagnostics. The default handler writes to stderr; pass an
/// empty function to silence.
void set_warning_handler(std::function<void(const std::string&)> handler);
void warn(const std::string& message);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define GRAPHOT_DEFINE_ERROR(Name, Kind)                             \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

GRAPHOT_DEFINE_ERROR(LabelError, ErrorKind::label)
GRAPHOT_DEFINE_ERROR(ShapeError, ErrorKind::shape)
GRAPHOT_DEFINE_ERROR(NumericError, ErrorKind::numeric)
GRAPHOT_DEFINE_ERROR(ContractError, ErrorKind::contract)
GRAPHOT_DEFINE_ERROR(ValidationError, ErrorKind::validation)
GRAPHOT_DEFINE_ERROR(AssumptionViolation, ErrorKind::assumption)
GRAPHOT_DEFINE_ERROR(CapacityError, ErrorKind::capacity)
GRAPHOT_DEFINE_ERROR(IoError, ErrorKind::io)
GRAPHOT_DEFINE_ERROR(ArgumentError, ErrorKind::argument)

#undef GRAPHOT_DEFINE_ERROR

}  // namespace graphot
