/// Beam-splitter observables: the binomial pair distribution over the two
/// output modes, the alpha-coefficient recursion, the purity of one mode of
/// the fixed-(M, N-M) projected state, and joint/marginal pair-counting
/// distributions over an energy window.
///
/// The purity of one mode is
///   P1 = C(N,M)^(-1) + sum_(m=0..N-2) alpha_m chi_m chi_(2N-m) / chi_N^2,
/// with alpha_m(N,M) produced by a downward recursion that mixes large
/// factorial ratios with subtractions. The recursion therefore runs in
/// sign-tracked log arithmetic with a strict negativity guard; values that
/// would be silently clamped elsewhere raise instead.
#pragma once

#include <mpfr.h>

#include "coboson/ensemble.hpp"

namespace coboson {

struct SplitConfig {
  double reflection = 0.5;  // R
  std::size_t M = 0;        // pairs retained in mode 1 after projection
  std::size_t N = 0;

  double transmission() const { return 1.0 - reflection; }
  void validate() const {
    if (!(reflection >= 0.0 && reflection <= 1.0))
      throw numeric_range_error("split: R must lie in [0,1]");
    if (M > N) throw numeric_range_error("split: M must satisfy 0 <= M <= N");
  }
};

/// Amplitudes over M = 0..N of the post-split superposition,
/// sqrt(R^M T^(N-M) C(N,M)). Squared amplitudes sum to 1.
inline std::vector<double> split_amplitudes(std::size_t N, double R) {
  SplitConfig cfg{R, 0, N};
  cfg.validate();
  std::vector<double> amp(N + 1, 0.0);
  const double T = 1.0 - R;
  if (R == 0.0) {
    amp[0] = 1.0;
    return amp;
  }
  if (R == 1.0) {
    amp[N] = 1.0;
    return amp;
  }
  const double lR = std::log(R), lT = std::log(T);
  for (std::size_t M = 0; M <= N; ++M)
    amp[M] = std::exp(0.5 * (static_cast<double>(M) * lR +
                             static_cast<double>(N - M) * lT +
                             log_choose(N, M)));
  return amp;
}

// ---------------------------------------------------------------------------
// Alpha coefficients
// ---------------------------------------------------------------------------

/// alpha_0..alpha_(N-2) for a given (N, M), kept as sign + log magnitude
/// together with a per-coefficient forward error bound. The downward
/// recursion feeds every later coefficient into every earlier bracket with
/// large combinatorial weights, so rounding noise grows toward small m;
/// the error bound makes that growth explicit instead of hiding it.
/// Positivity is monitored, not assumed: a negative value is tolerated
/// only while it is consistent with the accumulated noise (or below
/// 1e-8 of the table maximum); anything larger raises.
class AlphaCoefficients {
 public:
  AlphaCoefficients(std::vector<SignedLog> a, std::vector<double> err_log,
                    std::size_t N, std::size_t M)
      : a_(std::move(a)), err_log_(std::move(err_log)), N_(N), M_(M) {}

  std::size_t size() const { return a_.size(); }
  std::size_t N() const { return N_; }
  std::size_t M() const { return M_; }
  const SignedLog& signed_log(std::size_t m) const { return a_.at(m); }
  double value(std::size_t m) const { return a_.at(m).value(); }
  /// log of the absolute forward error bound for coefficient m.
  double error_log(std::size_t m) const { return err_log_.at(m); }
  /// True when the stored value is smaller than its own noise bound and
  /// carries no usable sign information.
  bool noise_dominated(std::size_t m) const {
    const SignedLog& a = a_.at(m);
    return a.sign == 0 || a.log_mag <= err_log_.at(m) + std::log(8.0);
  }

 private:
  std::vector<SignedLog> a_;
  std::vector<double> err_log_;
  std::size_t N_, M_;
};

namespace detail {

/// Forward error bounds for the downward recursion at working precision
/// log_eps, given the coefficient magnitudes that actually entered it.
inline std::vector<double> alpha_error_bounds(
    std::size_t N, std::size_t M, const std::vector<SignedLog>& alpha,
    double log_eps, const LogFactorialTable& lf) {
  std::vector<double> err(alpha.size(), neg_inf);
  const double lfM = lf(M), lfNM = lf(N - M), lfN = lf(N);
  for (std::size_t Lr = N - 1; Lr-- > 0;) {
    std::vector<double> pos_terms;
    const std::size_t L1_lo = Lr > (N - M) ? Lr - (N - M) : 0;
    const std::size_t L1_hi = std::min(Lr, M);
    for (std::size_t L1 = L1_lo; L1 <= L1_hi; ++L1)
      pos_terms.push_back(-lf(L1) - lf(Lr - L1) +
                          2.0 * (lfM + lfNM - lf(M - L1) -
                                 lf(N - M - Lr + L1)));
    const double la = log_sum_exp(pos_terms);
    const double lb = lfM + lfN + lfNM - lf(Lr) - 2.0 * lf(N - Lr);
    double magnitude = log_add_exp(la, lb);
    double propagated = neg_inf;
    for (std::size_t k = Lr + 1; k + 2 <= N; ++k) {
      const double w =
          lf(k) + lf(2 * N - k) - lf(k - Lr) - lf(Lr) - lf(2 * N - k - Lr);
      propagated = log_add_exp(propagated, err[k] + w);
      if (alpha[k].sign != 0)
        magnitude = log_add_exp(magnitude, alpha[k].log_mag + w);
    }
    const double prefactor = lf(2 * N - 2 * Lr) - lf(2 * N - Lr);
    const double rounding =
        log_eps + std::log(static_cast<double>(N - Lr) + 2.0) + magnitude;
    err[Lr] = prefactor + log_add_exp(rounding, propagated);
  }
  return err;
}

inline void alpha_negativity_guard(std::size_t N, std::size_t M,
                                   const std::vector<SignedLog>& alpha,
                                   const std::vector<double>& err,
                                   double negativity_tol) {
  double max_log = neg_inf;
  for (const auto& a : alpha)
    if (a.sign != 0) max_log = std::max(max_log, a.log_mag);
  for (std::size_t m = 0; m < alpha.size(); ++m) {
    if (alpha[m].sign < 0 &&
        alpha[m].log_mag > max_log + std::log(negativity_tol) &&
        alpha[m].log_mag > err[m] + std::log(8.0))
      throw instability_error(
          "alpha_coeffs: negative coefficient beyond tolerance at m = " +
          std::to_string(m) + " (N = " + std::to_string(N) +
          ", M = " + std::to_string(M) + ")");
  }
}

}  // namespace detail

inline AlphaCoefficients alpha_coeffs(std::size_t N, std::size_t M,
                                      double negativity_tol = 1e-8) {
  if (N < 1 || M > N)
    throw numeric_range_error("alpha_coeffs: need N >= 1 and 0 <= M <= N");
  if (N < 2) return AlphaCoefficients({}, {}, N, M);
  std::vector<SignedLog> alpha(N - 1);  // index = m, m = 0..N-2
  if (M == 0 || M == N) {
    // the unsplit projection is pure; every coefficient vanishes
    return AlphaCoefficients(std::move(alpha),
                             std::vector<double>(N - 1, neg_inf), N, M);
  }

  const LogFactorialTable lf(2 * N);
  const double lfM = lf(M), lfNM = lf(N - M), lfN = lf(N);

  for (std::size_t Lr = N - 1; Lr-- > 0;) {  // Lr = N-2 .. 0
    // positive block: sum over the admissible first-mode multiplicity
    std::vector<double> pos_terms;
    const std::size_t L1_lo = Lr > (N - M) ? Lr - (N - M) : 0;
    const std::size_t L1_hi = std::min(Lr, M);
    for (std::size_t L1 = L1_lo; L1 <= L1_hi; ++L1) {
      const std::size_t L2 = Lr - L1;
      pos_terms.push_back(-lf(L1) - lf(L2) +
                          2.0 * (lfM + lfNM - lf(M - L1) - lf(N - M - L2)));
    }
    const double la = log_sum_exp(pos_terms);
    const double lb = lfM + lfN + lfNM - lf(Lr) - 2.0 * lf(N - Lr);
    SignedLog bracket = SignedLog::positive(la) - SignedLog::positive(lb);
    for (std::size_t k = Lr + 1; k + 2 <= N; ++k) {
      const SignedLog& ak = alpha[k];
      if (ak.sign == 0) continue;
      const double w =
          lf(k) + lf(2 * N - k) - lf(k - Lr) - lf(Lr) - lf(2 * N - k - Lr);
      bracket = bracket - SignedLog{ak.log_mag + w, ak.sign};
    }
    const double prefactor = lf(2 * N - 2 * Lr) - lf(2 * N - Lr);
    alpha[Lr] = SignedLog{prefactor, 1} * bracket;
  }

  auto err = detail::alpha_error_bounds(
      N, M, alpha, std::log(std::numeric_limits<double>::epsilon()), lf);
  detail::alpha_negativity_guard(N, M, alpha, err, negativity_tol);
  return AlphaCoefficients(std::move(alpha), std::move(err), N, M);
}

/// The same recursion carried out in high-precision floating arithmetic.
/// The coefficients are spectrum-independent rationals, so the precision
/// needed to survive the triangular back-substitution can be bought
/// directly; the returned error bounds reflect the requested precision.
inline AlphaCoefficients alpha_coeffs_precise(std::size_t N, std::size_t M,
                                              unsigned precision_bits,
                                              double negativity_tol = 1e-8) {
  if (N < 1 || M > N)
    throw numeric_range_error("alpha_coeffs: need N >= 1 and 0 <= M <= N");
  if (N < 2) return AlphaCoefficients({}, {}, N, M);
  if (M == 0 || M == N) return alpha_coeffs(N, M, negativity_tol);
  precision_bits = std::clamp(precision_bits, 64u, 65536u);

  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(precision_bits);
  std::vector<mpfr_t> fact(2 * N + 1), a(N - 1);
  for (auto& x : fact) mpfr_init2(x, prec);
  for (auto& x : a) mpfr_init2(x, prec);
  mpfr_t t1, t2, acc, bracket;
  mpfr_init2(t1, prec);
  mpfr_init2(t2, prec);
  mpfr_init2(acc, prec);
  mpfr_init2(bracket, prec);

  mpfr_set_ui(fact[0], 1, MPFR_RNDN);
  for (std::size_t i = 1; i <= 2 * N; ++i)
    mpfr_mul_ui(fact[i], fact[i - 1], static_cast<unsigned long>(i),
                MPFR_RNDN);

  for (std::size_t Lr = N - 1; Lr-- > 0;) {
    // A: positive block
    mpfr_set_ui(acc, 0, MPFR_RNDN);
    const std::size_t L1_lo = Lr > (N - M) ? Lr - (N - M) : 0;
    const std::size_t L1_hi = std::min(Lr, M);
    for (std::size_t L1 = L1_lo; L1 <= L1_hi; ++L1) {
      const std::size_t L2 = Lr - L1;
      mpfr_mul(t1, fact[M], fact[N - M], MPFR_RNDN);
      mpfr_div(t1, t1, fact[M - L1], MPFR_RNDN);
      mpfr_div(t1, t1, fact[N - M - L2], MPFR_RNDN);
      mpfr_sqr(t1, t1, MPFR_RNDN);
      mpfr_div(t1, t1, fact[L1], MPFR_RNDN);
      mpfr_div(t1, t1, fact[L2], MPFR_RNDN);
      mpfr_add(acc, acc, t1, MPFR_RNDN);
    }
    mpfr_set(bracket, acc, MPFR_RNDN);
    // B
    mpfr_mul(t1, fact[M], fact[N], MPFR_RNDN);
    mpfr_mul(t1, t1, fact[N - M], MPFR_RNDN);
    mpfr_div(t1, t1, fact[Lr], MPFR_RNDN);
    mpfr_div(t1, t1, fact[N - Lr], MPFR_RNDN);
    mpfr_div(t1, t1, fact[N - Lr], MPFR_RNDN);
    mpfr_sub(bracket, bracket, t1, MPFR_RNDN);
    // C: later coefficients fold back in
    for (std::size_t k = Lr + 1; k + 2 <= N; ++k) {
      mpfr_mul(t1, a[k], fact[k], MPFR_RNDN);
      mpfr_mul(t1, t1, fact[2 * N - k], MPFR_RNDN);
      mpfr_div(t1, t1, fact[k - Lr], MPFR_RNDN);
      mpfr_div(t1, t1, fact[Lr], MPFR_RNDN);
      mpfr_div(t1, t1, fact[2 * N - k - Lr], MPFR_RNDN);
      mpfr_sub(bracket, bracket, t1, MPFR_RNDN);
    }
    mpfr_div(t2, fact[2 * N - 2 * Lr], fact[2 * N - Lr], MPFR_RNDN);
    mpfr_mul(a[Lr], bracket, t2, MPFR_RNDN);
  }

  std::vector<SignedLog> alpha(N - 1);
  for (std::size_t m = 0; m + 2 <= N; ++m) {
    const int s = mpfr_sgn(a[m]);
    if (s == 0) {
      alpha[m] = SignedLog::zero();
      continue;
    }
    mpfr_abs(t1, a[m], MPFR_RNDN);
    mpfr_log(t1, t1, MPFR_RNDN);
    alpha[m] = SignedLog{mpfr_get_d(t1, MPFR_RNDN), s > 0 ? 1 : -1};
  }
  for (auto& x : fact) mpfr_clear(x);
  for (auto& x : a) mpfr_clear(x);
  mpfr_clear(t1);
  mpfr_clear(t2);
  mpfr_clear(acc);
  mpfr_clear(bracket);
  mpfr_free_cache();

  const LogFactorialTable lf(2 * N);
  const double log_eps =
      (1.0 - static_cast<double>(precision_bits)) * std::log(2.0);
  auto err = detail::alpha_error_bounds(N, M, alpha, log_eps, lf);
  detail::alpha_negativity_guard(N, M, alpha, err, negativity_tol);
  return AlphaCoefficients(std::move(alpha), std::move(err), N, M);
}

// ---------------------------------------------------------------------------
// Purity
// ---------------------------------------------------------------------------

namespace detail {

struct PuritySum {
  SignedLog total;
  double noise = neg_inf;  // log of the accumulated error bound
};

inline PuritySum purity_series(const EnsembleSpec& ens, std::size_t M,
                               const AlphaCoefficients& alpha,
                               const LogFactorialTable& lf) {
  const std::size_t N = ens.N;
  const double log_leN = ens.table->log_e(N);
  std::vector<SignedLog> terms;
  terms.push_back(SignedLog::positive(-lf.choose(N, M)));
  PuritySum out;
  for (std::size_t m = 0; m + 2 <= N; ++m) {
    const double le_m = ens.table->log_e(m);
    const double le_2Nm = ens.table->log_e(2 * N - m);
    if (le_m == neg_inf || le_2Nm == neg_inf) continue;
    // chi_m chi_(2N-m) / chi_N^2 in e-units
    const double w = lf(m) + lf(2 * N - m) - 2.0 * lf(N) + le_m + le_2Nm -
                     2.0 * log_leN;
    out.noise = log_add_exp(out.noise, alpha.error_log(m) + w);
    const SignedLog& a = alpha.signed_log(m);
    if (a.sign == 0) continue;
    terms.push_back(a * SignedLog::positive(w));
  }
  // smallest magnitudes first
  std::sort(terms.begin(), terms.end(),
            [](const SignedLog& x, const SignedLog& y) {
              return x.log_mag < y.log_mag;
            });
  for (const SignedLog& t : terms) out.total = out.total + t;
  return out;
}

}  // namespace detail

/// Purity of mode 1 of the projected (M, N-M) state. Requires the
/// ensemble's chi table to reach order 2N. The alpha noise bounds are
/// folded into an overall error bound; when that bound is not negligible
/// against the result the coefficients are recomputed at a precision
/// chosen from the overshoot, and only a still-noisy result raises. The
/// bound is a worst-case envelope, typically orders above the realized
/// error.
inline double purity(const EnsembleSpec& ens, std::size_t M,
                     double max_rel_noise = 1e-8) {
  const std::size_t N = ens.N;
  if (M > N) throw numeric_range_error("purity: M must satisfy 0 <= M <= N");
  const std::size_t need = std::min(2 * N, ens.table->source_size());
  if (ens.table->order() < need)
    throw numeric_range_error("purity: chi table order " +
                              std::to_string(ens.table->order()) +
                              " below required order " + std::to_string(need));
  if (M == 0 || M == N) return 1.0;

  const LogFactorialTable lf(2 * N);
  const double log_tol = std::log(max_rel_noise);
  auto sum = detail::purity_series(ens, M, alpha_coeffs(N, M), lf);
  if (sum.total.sign > 0 && sum.noise - sum.total.log_mag <= log_tol)
    return sum.total.value();

  // escalate: buy the precision the overshoot says is missing
  const double scale =
      sum.total.sign > 0 ? sum.total.log_mag : -lf.choose(N, M);
  const double deficit_bits =
      (sum.noise - (scale + log_tol)) / std::log(2.0);
  const unsigned bits = static_cast<unsigned>(std::clamp(
      64.0 + deficit_bits + 32.0, 96.0, 65536.0));
  sum = detail::purity_series(ens, M, alpha_coeffs_precise(N, M, bits), lf);
  if (sum.total.sign <= 0 || sum.noise - sum.total.log_mag > log_tol)
    throw instability_error(
        "purity: noise bound not negligible against the result even at " +
        std::to_string(bits) + " bits (N = " + std::to_string(N) +
        ", M = " + std::to_string(M) + ")");
  return sum.total.value();
}

/// C(N,M)^(-1), the purity floor reached in the Slater limit.
inline double purity_lower_bound(std::size_t N, std::size_t M) {
  return std::exp(-log_choose(N, M));
}

// ---------------------------------------------------------------------------
// Split counting statistics
// ---------------------------------------------------------------------------

/// P12(n1, n2) over a window: joint probability of finding n1 pairs of
/// mode 1 and n2 pairs of mode 2 among the t lowest states. The binomial
/// prefactors C(M,n1) C(N-M,n2) / C(N,n1+n2) are folded in analytically.
struct JointCounts {
  std::size_t n1_max = 0;  // = M
  std::size_t n2_max = 0;  // = N - M
  std::vector<double> p;   // (n1_max+1) x (n2_max+1), row-major in n1

  double at(std::size_t n1, std::size_t n2) const {
    return p[n1 * (n2_max + 1) + n2];
  }
};

inline JointCounts joint_count_distribution(const EnsembleSpec& ens,
                                            std::size_t M,
                                            const CountWindow& w) {
  const std::size_t N = ens.N;
  if (M > N)
    throw numeric_range_error("joint counts: M must satisfy 0 <= M <= N");
  JointCounts jc;
  jc.n1_max = M;
  jc.n2_max = N - M;
  jc.p.assign((M + 1) * (N - M + 1), 0.0);
  const double le_full = ens.table->log_e(N);
  for (std::size_t n1 = 0; n1 <= M; ++n1) {
    for (std::size_t n2 = 0; n2 <= N - M; ++n2) {
      const std::size_t n = n1 + n2;
      if (n > w.t) continue;
      const double lt = w.window.log_e(n);
      const double lb = w.complement.log_e(N - n);
      if (lt == neg_inf || lb == neg_inf) continue;
      const double lpref =
          log_choose(M, n1) + log_choose(N - M, n2) - log_choose(N, n);
      jc.p[n1 * (N - M + 1) + n2] = std::exp(lpref + lt + lb - le_full);
    }
  }
  return jc;
}

/// P1(n1) = sum_(n2) P12(n1, n2).
inline std::vector<double> marginal_count(const EnsembleSpec& ens,
                                          std::size_t M,
                                          const CountWindow& w) {
  const JointCounts jc = joint_count_distribution(ens, M, w);
  std::vector<double> out(jc.n1_max + 1, 0.0);
  for (std::size_t n1 = 0; n1 <= jc.n1_max; ++n1) {
    NeumaierSum s;
    for (std::size_t n2 = 0; n2 <= jc.n2_max; ++n2) s.add(jc.at(n1, n2));
    out[n1] = s.total();
  }
  return out;
}

}  // namespace coboson
