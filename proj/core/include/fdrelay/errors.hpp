#ifndef FDRELAY_ERRORS_HPP
#define FDRELAY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fdrelay {

/// Shape or size mismatch between operands.
class DimensionError : public std::invalid_argument {
  public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A linear system was too ill-conditioned to solve reliably.
class NearSingularError : public std::runtime_error {
  public:
    NearSingularError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

  private:
    double condition_;
};

/// A matrix that must be positive semi-definite has a significantly negative eigenvalue.
class NotPsdError : public std::runtime_error {
  public:
    NotPsdError(const std::string& what, double min_eigenvalue)
        : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

  private:
    double min_eigenvalue_;
};

/// The relay amplification loop diverges: distortion re-amplification exceeds unity gain.
class RelayLoopUnstableError : public std::runtime_error {
  public:
    RelayLoopUnstableError(const std::string& what, double spectral_radius)
        : std::runtime_error(what), spectral_radius_(spectral_radius) {}
    double spectral_radius() const noexcept { return spectral_radius_; }

  private:
    double spectral_radius_;
};

/// Inputs left the validity domain of a formula (e.g. an interference covariance
/// that is not positive definite).
class DomainError : public std::runtime_error {
  public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative procedure hit its iteration cap without meeting its stopping rule.
class NoConvergenceError : public std::runtime_error {
  public:
    NoConvergenceError(const std::string& what, double final_violation)
        : std::runtime_error(what), final_violation_(final_violation) {}
    double final_violation() const noexcept { return final_violation_; }

  private:
    double final_violation_;
};

}  // namespace fdrelay

#endif
