#pragma once

#include <stdexcept>
#include <string>

namespace fairdtd {

enum class ErrorKind {
  Dimension,
  Domain,
  EmptySelection,
  Tape,
  Config,
  Schema,
  Referential,
  UndefinedMetric,
  Io,
  Dependency,
  Compatibility,
};

const char* to_string(ErrorKind kind);

/// Base of every error the library throws. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FAIRDTD_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

FAIRDTD_DEFINE_ERROR(DimensionError, Dimension)
FAIRDTD_DEFINE_ERROR(DomainError, Domain)
FAIRDTD_DEFINE_ERROR(EmptySelectionError, EmptySelection)
FAIRDTD_DEFINE_ERROR(TapeError, Tape)
FAIRDTD_DEFINE_ERROR(ConfigError, Config)
FAIRDTD_DEFINE_ERROR(SchemaError, Schema)
FAIRDTD_DEFINE_ERROR(ReferentialError, Referential)
FAIRDTD_DEFINE_ERROR(UndefinedMetricError, UndefinedMetric)
FAIRDTD_DEFINE_ERROR(IoError, Io)
FAIRDTD_DEFINE_ERROR(DependencyError, Dependency)
FAIRDTD_DEFINE_ERROR(CompatibilityError, Compatibility)

#undef FAIRDTD_DEFINE_ERROR

}  // namespace fairdtd
