#pragma once

#include <stdexcept>
#include <string>

namespace rshom {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct EllipticityViolation : Error {
  double min_quotient;
  double declared_mu;
  EllipticityViolation(double got, double mu, const std::string& where)
      : Error("ellipticity violation in " + where + ": min quotient " +
              std::to_string(got) + " vs declared mu " + std::to_string(mu)),
        min_quotient(got),
        declared_mu(mu) {}
};

struct NoConvergence : Error {
  double final_residual;
  int iterations;
  NoConvergence(double res, int iters)
      : Error("iterative solve did not converge: residual " +
              std::to_string(res) + " after " + std::to_string(iters) +
              " iterations"),
        final_residual(res),
        iterations(iters) {}
};

struct SingularSystem : Error {
  explicit SingularSystem(const std::string& what) : Error(what) {}
};

struct GridMismatch : Error {
  explicit GridMismatch(const std::string& what) : Error(what) {}
};

struct MeanNotZero : Error {
  explicit MeanNotZero(const std::string& what) : Error(what) {}
};

struct NonZeroMean : Error {
  explicit NonZeroMean(const std::string& what) : Error(what) {}
};

struct EpsilonTooSmall : Error {
  explicit EpsilonTooSmall(const std::string& what) : Error(what) {}
};

struct RTooSmall : Error {
  explicit RTooSmall(const std::string& what) : Error(what) {}
};

struct ResolutionInsufficient : Error {
  explicit ResolutionInsufficient(const std::string& what) : Error(what) {}
};

struct DegenerateData : Error {
  explicit DegenerateData(const std::string& what) : Error(what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace rshom
