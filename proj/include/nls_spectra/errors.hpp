#pragma once

#include <stdexcept>
#include <string>

namespace nls_spectra {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the CLI to pick an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define NLS_SPECTRA_ERROR(Name)                                                   \
  class Name : public Error {                                                     \
   public:                                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {}                \
  };

// validation errors
NLS_SPECTRA_ERROR(InvalidMesh)
NLS_SPECTRA_ERROR(OriginRuleMismatch)
NLS_SPECTRA_ERROR(InvalidExponent)
NLS_SPECTRA_ERROR(UnsupportedProfile)
NLS_SPECTRA_ERROR(MeshMismatch)
NLS_SPECTRA_ERROR(DimensionUnsupported)
NLS_SPECTRA_ERROR(OutOfRange)
NLS_SPECTRA_ERROR(EmptyDataset)
NLS_SPECTRA_ERROR(UsageError)

// solver errors
NLS_SPECTRA_ERROR(NotConverged)
NLS_SPECTRA_ERROR(ConvergenceFailure)
NLS_SPECTRA_ERROR(SingularShift)
NLS_SPECTRA_ERROR(QuadratureFailure)
NLS_SPECTRA_ERROR(NoSignChange)
NLS_SPECTRA_ERROR(InterlacingViolation)
NLS_SPECTRA_ERROR(ProjectionFailure)
NLS_SPECTRA_ERROR(MismatchReport)

#undef NLS_SPECTRA_ERROR

/// True for errors caused by bad input rather than by a numerical failure.
inline bool is_validation_error(const Error& e) {
  const std::string& k = e.kind();
  return k == "InvalidMesh" || k == "OriginRuleMismatch" || k == "InvalidExponent" ||
         k == "UnsupportedProfile" || k == "MeshMismatch" || k == "DimensionUnsupported" ||
         k == "OutOfRange" || k == "EmptyDataset" || k == "UsageError";
}

}  // namespace nls_spectra
