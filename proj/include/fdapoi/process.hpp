#ifndef FDAPOI_PROCESS_HPP
#define FDAPOI_PROCESS_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "fdapoi/errors.hpp"

namespace fdapoi {

/// Gaussian process families with a closed-form covariance and a
/// covariance diagonal of roughness exponent kappa.
struct ProcessSpec {
  enum class Kind { BrownianMotion, FractionalBrownianMotion, OrnsteinUhlenbeck };

  Kind kind = Kind::BrownianMotion;
  double hurst = 0.5;    // fBM only
  double theta = 1.0;    // OU only
  double sigma_u = 1.0;  // OU only

  static ProcessSpec brownian_motion() { return ProcessSpec{}; }

  static ProcessSpec fractional_brownian_motion(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
      throw spec_error("fBM: Hurst index must lie in (0,1), got " + std::to_string(hurst));
    ProcessSpec s;
    s.kind = Kind::FractionalBrownianMotion;
    s.hurst = hurst;
    return s;
  }

  static ProcessSpec ornstein_uhlenbeck(double theta, double sigma_u) {
    if (!(theta > 0.0)) throw spec_error("OU: theta must be positive");
    if (!(sigma_u > 0.0)) throw spec_error("OU: sigma_u must be positive");
    ProcessSpec s;
    s.kind = Kind::OrnsteinUhlenbeck;
    s.theta = theta;
    s.sigma_u = sigma_u;
    return s;
  }

  /// BM and fBM covariances are only defined from time origin 0 onward.
  void validate_domain(double a, double b) const {
    if (!(b > a)) throw spec_error("process: requires b > a");
    if (kind != Kind::OrnsteinUhlenbeck && a < 0.0)
      throw spec_error("process: BM/fBM require a >= 0");
  }

  std::string name() const {
    switch (kind) {
      case Kind::BrownianMotion: return "bm";
      case Kind::FractionalBrownianMotion: return "fbm";
      case Kind::OrnsteinUhlenbeck: return "ou";
    }
    return "?";
  }
};

/// sigma(t,s) of the family. Symmetric in (t,s) by construction.
inline double covariance_eval(const ProcessSpec& spec, double t, double s) {
  switch (spec.kind) {
    case ProcessSpec::Kind::BrownianMotion:
      return std::min(t, s);
    case ProcessSpec::Kind::FractionalBrownianMotion: {
      const double twoH = 2.0 * spec.hurst;
      return 0.5 * (std::pow(t, twoH) + std::pow(s, twoH) - std::pow(std::abs(t - s), twoH));
    }
    case ProcessSpec::Kind::OrnsteinUhlenbeck: {
      const double v = spec.sigma_u * spec.sigma_u / (2.0 * spec.theta);
      return v * (std::exp(-spec.theta * std::abs(t - s)) - std::exp(-spec.theta * (t + s)));
    }
  }
  throw spec_error("covariance_eval: unknown process kind");
}

/// Roughness exponent kappa and diagonal coefficient c of the covariance,
/// sigma(t,s) = omega(t,s,|t-s|^kappa) with c = -d omega/dz at the diagonal.
/// c is constant in t for every supported family.
struct RoughnessExponent {
  double kappa;
  double c;
};

inline RoughnessExponent process_kappa_c(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessSpec::Kind::BrownianMotion:
      return {1.0, 0.5};
    case ProcessSpec::Kind::FractionalBrownianMotion:
      return {2.0 * spec.hurst, 0.5};
    case ProcessSpec::Kind::OrnsteinUhlenbeck:
      return {1.0, spec.sigma_u * spec.sigma_u / 2.0};
  }
  throw spec_error("process_kappa_c: unknown process kind");
}

}  // namespace fdapoi

#endif  // FDAPOI_PROCESS_HPP
