/// CHSH quadrature correlators of the split state. The projected state
/// decomposes over the occupancy of one target single-fermion state j as
///
///   sqrt(M D_j) |occupied>_1|empty>_2 + sqrt((N-M) D_j) |empty>_1|occupied>_2
///       + sqrt(1 - N D_j) |empty>_1|empty>_2,
///
/// an effective two-qubit state with no doubly-occupied component (Pauli
/// blocking). Q and R are the quadratures of the ensemble holding N-M
/// pairs, S and T the rotated combinations on the other; this pairing is
/// the one whose closed forms the oracle operator construction reproduces.
#pragma once

#include <optional>

#include "coboson/common.hpp"

namespace coboson {

enum class OccupationProvenance { exact, approx, measured };

struct BellSetting {
  std::size_t j = 1;  // target state index (metadata)
  std::size_t N = 0;
  std::size_t M = 0;
  double D = 0.0;  // occupation factor D_j[N]
  OccupationProvenance provenance = OccupationProvenance::exact;

  void validate() const {
    if (M > N) throw numeric_range_error("bell: M must satisfy 0 <= M <= N");
    const double nd = static_cast<double>(N) * D;
    if (D < 0.0 || nd > 1.0 + 1e-12)
      throw numeric_range_error("bell: invalid occupation N*D_j = " +
                                format_g17(nd) + " outside [0,1]");
  }
};

struct CorrelatorSet {
  double qs = 0, rs = 0, rt = 0, qt = 0;
  double m = 0;  // qs + rs + rt - qt
};

namespace detail {

/// Shared real-valued core; n1 plays the role of M, n2 of N-M. Used both
/// for integer settings and for mean-value (fluctuating-number) inputs.
inline CorrelatorSet correlators_core(double n1, double n2, double d) {
  const double n = n1 + n2;
  const double nd = n * d;
  const double h2 = std::max(0.0, d * (1.0 - nd));  // clamp rounding dust
  const double h = std::sqrt(h2);
  CorrelatorSet c;
  c.qs = sqrt2 * (nd - 0.5 + std::sqrt(n1) * h);
  c.rs = sqrt2 * (std::sqrt(n1 * n2) * d - std::sqrt(n2) * h);
  c.rt = sqrt2 * (std::sqrt(n1 * n2) * d + std::sqrt(n2) * h);
  c.qt = sqrt2 * (0.5 - nd + std::sqrt(n1) * h);
  c.m = c.qs + c.rs + c.rt - c.qt;
  return c;
}

}  // namespace detail

inline CorrelatorSet chsh_correlators(const BellSetting& s) {
  s.validate();
  return detail::correlators_core(static_cast<double>(s.M),
                                  static_cast<double>(s.N - s.M), s.D);
}

/// <M> = sqrt(2) (2 D (N + sqrt(M(N-M))) - 1); equals the correlator
/// combination identically.
inline double chsh_value(std::size_t N, std::size_t M, double D) {
  BellSetting s{1, N, M, D};
  s.validate();
  const double dn = static_cast<double>(N);
  const double dm = static_cast<double>(M);
  return sqrt2 * (2.0 * D * (dn + std::sqrt(dm * (dn - dm))) - 1.0);
}

/// Minimal N*D_j at which the balanced split (M = N/2) crosses the
/// classical bound: sqrt(2) (3 x - 1) = 2 at x = (1 + sqrt(2))/3.
inline double violation_threshold_balanced() { return (1.0 + sqrt2) / 3.0; }

inline constexpr double chsh_classical_bound = 2.0;
inline const double chsh_tsirelson_bound = 2.0 * sqrt2;

// ---------------------------------------------------------------------------
// Fluctuating particle number: mean-value evaluation with first-order
// error propagation over independent (dN1, dN2, dD).
// ---------------------------------------------------------------------------

struct FluctuatingEnsemble {
  double n1 = 0, dn1 = 0;  // mean pairs in mode 1 and its uncertainty
  double n2 = 0, dn2 = 0;
  double d = 0, dd = 0;  // mean occupation factor and its uncertainty

  void validate() const {
    if (!(n1 >= 0.0) || !(n2 >= 0.0) || !(n1 + n2 > 0.0))
      throw numeric_range_error("fluctuating ensemble: means must be "
                                "nonnegative with N1+N2 > 0");
    if (dn1 < 0.0 || dn2 < 0.0 || dd < 0.0)
      throw numeric_range_error("fluctuating ensemble: negative uncertainty");
    const double nd = (n1 + n2) * d;
    if (d < 0.0 || nd > 1.0 + 1e-12)
      throw numeric_range_error("fluctuating ensemble: invalid occupation "
                                "N*D = " + format_g17(nd));
  }
};

struct CorrelatorsWithError {
  CorrelatorSet value;
  CorrelatorSet sigma;
};

namespace detail {

struct CorrelatorGradients {
  CorrelatorSet d_n1, d_n2, d_d;
};

/// Analytic partials of the four correlators and their combination.
/// At the boundary h = 0 the square root has infinite slope; its
/// contributions are dropped there (linear propagation is undefined).
inline CorrelatorGradients correlator_gradients(double n1, double n2,
                                                double d) {
  const double n = n1 + n2;
  const double nd = n * d;
  const double h2 = std::max(0.0, d * (1.0 - nd));
  const double h = std::sqrt(h2);
  const double s1 = std::sqrt(n1), s2 = std::sqrt(n2);
  const double s12 = std::sqrt(n1 * n2);

  // dh/dD and dh/dN (through n = n1 + n2); zero when h is pinned at 0
  const double h_d = h > 0.0 ? (1.0 - 2.0 * nd) / (2.0 * h) : 0.0;
  const double h_n = h > 0.0 ? -d * d / (2.0 * h) : 0.0;
  const double inv_s1 = n1 > 0.0 ? 0.5 / s1 : 0.0;
  const double inv_s2 = n2 > 0.0 ? 0.5 / s2 : 0.0;

  CorrelatorGradients g;
  // QS = sqrt2 (nd - 1/2 + s1 h)
  g.d_d.qs = sqrt2 * (n + s1 * h_d);
  g.d_n1.qs = sqrt2 * (d + inv_s1 * h + s1 * h_n);
  g.d_n2.qs = sqrt2 * (d + s1 * h_n);
  // RS = sqrt2 (s12 d - s2 h)
  g.d_d.rs = sqrt2 * (s12 - s2 * h_d);
  g.d_n1.rs = sqrt2 * (d * (n1 > 0 ? 0.5 * s2 / s1 : 0.0) - s2 * h_n);
  g.d_n2.rs = sqrt2 * (d * (n2 > 0 ? 0.5 * s1 / s2 : 0.0) - inv_s2 * h -
                       s2 * h_n);
  // RT = sqrt2 (s12 d + s2 h)
  g.d_d.rt = sqrt2 * (s12 + s2 * h_d);
  g.d_n1.rt = sqrt2 * (d * (n1 > 0 ? 0.5 * s2 / s1 : 0.0) + s2 * h_n);
  g.d_n2.rt = sqrt2 * (d * (n2 > 0 ? 0.5 * s1 / s2 : 0.0) + inv_s2 * h +
                       s2 * h_n);
  // QT = sqrt2 (1/2 - nd + s1 h)
  g.d_d.qt = sqrt2 * (-n + s1 * h_d);
  g.d_n1.qt = sqrt2 * (-d + inv_s1 * h + s1 * h_n);
  g.d_n2.qt = sqrt2 * (-d + s1 * h_n);

  auto combine = [](CorrelatorSet& c) { c.m = c.qs + c.rs + c.rt - c.qt; };
  combine(g.d_d);
  combine(g.d_n1);
  combine(g.d_n2);
  return g;
}

}  // namespace detail

inline CorrelatorsWithError chsh_fluctuating(const FluctuatingEnsemble& fe) {
  fe.validate();
  CorrelatorsWithError out;
  out.value = detail::correlators_core(fe.n1, fe.n2, fe.d);
  const auto g = detail::correlator_gradients(fe.n1, fe.n2, fe.d);
  auto prop = [&](auto field) {
    const double a = (fe.dn1 > 0 ? g.d_n1.*field * fe.dn1 : 0.0);
    const double b = (fe.dn2 > 0 ? g.d_n2.*field * fe.dn2 : 0.0);
    const double c = (fe.dd > 0 ? g.d_d.*field * fe.dd : 0.0);
    return std::sqrt(a * a + b * b + c * c);
  };
  out.sigma.qs = prop(&CorrelatorSet::qs);
  out.sigma.rs = prop(&CorrelatorSet::rs);
  out.sigma.rt = prop(&CorrelatorSet::rt);
  out.sigma.qt = prop(&CorrelatorSet::qt);
  out.sigma.m = prop(&CorrelatorSet::m);
  return out;
}

}  // namespace coboson
