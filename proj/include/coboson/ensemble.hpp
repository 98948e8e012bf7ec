/// Observables of the unsplit N-pair state: per-state occupations, shell
/// spectral densities, counting statistics over an energy window and the
/// normalization-ratio diagnostics. All quantities reduce to ratios of
/// elementary symmetric polynomials, evaluated in e_k units so binomial
/// and factorial prefactors cancel as algebra instead of arithmetic.
#pragma once

#include "coboson/sympoly.hpp"

namespace coboson {

/// The N-pair state over a spectrum, with a chi table of order >= N.
/// Non-owning views; keep the spectrum and table alive alongside.
struct EnsembleSpec {
  const SchmidtSpectrum* spectrum = nullptr;
  const ChiTable* table = nullptr;
  std::size_t N = 0;

  EnsembleSpec(const SchmidtSpectrum& sp, const ChiTable& t, std::size_t n)
      : spectrum(&sp), table(&t), N(n) {
    if (N < 1) throw numeric_range_error("ensemble: N must be >= 1");
    if (N > sp.size())
      throw numeric_range_error(
          "ensemble: N = " + std::to_string(N) + " exceeds rank S = " +
          std::to_string(sp.size()) + " (the state vanishes)");
    if (t.fingerprint() != sp.fingerprint())
      throw numeric_range_error("ensemble: chi table built from a different "
                                "spectrum (fingerprint mismatch)");
    if (t.order() < N)
      throw numeric_range_error("ensemble: chi table order below N");
    if (t.log_e(N) == neg_inf)
      throw numeric_range_error("ensemble: chi_N vanished");
  }
};

/// Partition of the spectrum into the t lowest-energy states and the rest,
/// with subset tables deep enough for counting statistics at order N.
struct CountWindow {
  std::size_t t = 0;
  ChiTable window;      // over states 1..t, order min(t, N)
  ChiTable complement;  // over states t+1..S, order N
};

inline CountWindow make_count_window(const SchmidtSpectrum& sp, std::size_t t,
                                     std::size_t N) {
  if (t < 1 || t > sp.size())
    throw numeric_range_error("count window: need 1 <= t <= S");
  CountWindow w;
  w.t = t;
  w.window = chi_prefix(sp, t, std::min(t, N));
  w.complement = chi_complement(sp, t, N);
  return w;
}

// ---------------------------------------------------------------------------
// Occupations
// ---------------------------------------------------------------------------

/// D_j = lambda_j e_(N-1)^(j) / (N e_N); the factorials of the chi
/// convention cancel exactly. j is 1-based in flattened energy order.
inline double occupation(const EnsembleSpec& ens, std::size_t j,
                         const ChiOptions& opt = {}) {
  const SchmidtSpectrum& sp = *ens.spectrum;
  const ChiTable loo = chi_leave_one_out(*ens.table, sp, j, ens.N - 1, opt);
  const double log_d = std::log(sp.lambda(j)) + loo.log_e(ens.N - 1) -
                       std::log(static_cast<double>(ens.N)) -
                       ens.table->log_e(ens.N);
  return std::exp(log_d);
}

/// All occupations D_1..D_jmax (default: the full spectrum). One shell is
/// evaluated once and replicated over its 2l+1 states.
inline std::vector<double> occupations(const EnsembleSpec& ens,
                                       std::size_t j_max = 0,
                                       const ChiOptions& opt = {}) {
  const SchmidtSpectrum& sp = *ens.spectrum;
  if (j_max == 0) j_max = sp.size();
  if (j_max > sp.size())
    throw numeric_range_error("occupations: j_max exceeds S");
  std::vector<double> out(j_max);
  std::size_t j = 1;
  while (j <= j_max) {
    const Shell& s = sp.shell_of(j);
    const double d = occupation(ens, j, opt);
    for (int m = 0; m < s.degeneracy() && j <= j_max; ++m, ++j)
      out[j - 1] = d;
  }
  return out;
}

/// Mean-field style estimate lambda_j / (1 + lambda_j (N-1)); exact at N=1.
inline double occupation_approx(double lambda_j, std::size_t N) {
  if (N < 1) throw numeric_range_error("occupation_approx: N must be >= 1");
  return lambda_j / (1.0 + lambda_j * static_cast<double>(N - 1));
}

struct ShellDensity {
  int n = 0;
  int l = 0;
  int g = 1;
  double lambda = 0;
  double energy = 0;
  double value = 0;  // g * N * D of a representative state
};

/// Spectral density per shell; sums to N over all shells.
inline std::vector<ShellDensity> spectral_density(const EnsembleSpec& ens,
                                                  const ChiOptions& opt = {}) {
  const SchmidtSpectrum& sp = *ens.spectrum;
  std::vector<ShellDensity> out;
  out.reserve(sp.shells().size());
  std::size_t j = 1;
  for (const Shell& s : sp.shells()) {
    const double d = occupation(ens, j, opt);
    out.push_back(ShellDensity{s.n, s.l, s.degeneracy(), s.lambda, s.energy,
                               s.degeneracy() * static_cast<double>(ens.N) *
                                   d});
    j += s.degeneracy();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Counting statistics over a window
// ---------------------------------------------------------------------------

/// P(n) = e_n(window) e_(N-n)(complement) / e_N(full) for n = 0..t.
/// Entries with n > N or n > t are exactly zero.
inline std::vector<double> count_distribution(const EnsembleSpec& ens,
                                              const CountWindow& w) {
  std::vector<double> p(w.t + 1, 0.0);
  const double le_full = ens.table->log_e(ens.N);
  for (std::size_t n = 0; n <= std::min(w.t, ens.N); ++n) {
    const double lt = w.window.log_e(n);
    const double lb = w.complement.log_e(ens.N - n);
    if (lt == neg_inf || lb == neg_inf) continue;
    p[n] = std::exp(lt + lb - le_full);
  }
  return p;
}

/// <N_t> = N * sum_(j<=t) D_j.
inline double mean_population(const EnsembleSpec& ens, std::size_t t,
                              const ChiOptions& opt = {}) {
  if (t < 1 || t > ens.spectrum->size())
    throw numeric_range_error("mean_population: need 1 <= t <= S");
  const auto d = occupations(ens, t, opt);
  NeumaierSum s;
  for (double x : d) s.add(x);
  return static_cast<double>(ens.N) * s.total();
}

struct WindowReport {
  std::size_t t = 0;
  double mean = 0;
  double variance = 0;
  double poisson_var = 0;   // = mean
  double binomial_var = 0;  // = mean (1 - mean/t)
};

inline WindowReport window_report(const EnsembleSpec& ens,
                                  const CountWindow& w) {
  const auto p = count_distribution(ens, w);
  NeumaierSum m1, m2;
  for (std::size_t n = 0; n < p.size(); ++n) {
    m1.add(static_cast<double>(n) * p[n]);
    m2.add(static_cast<double>(n) * static_cast<double>(n) * p[n]);
  }
  WindowReport r;
  r.t = w.t;
  r.mean = m1.total();
  r.variance = m2.total() - r.mean * r.mean;
  r.poisson_var = r.mean;
  r.binomial_var = r.mean * (1.0 - r.mean / static_cast<double>(w.t));
  return r;
}

// ---------------------------------------------------------------------------
// Normalization-ratio diagnostics
// ---------------------------------------------------------------------------

/// chi_(N+1)/chi_N = (N+1) e_(N+1)/e_N; exactly 0 once N+1 exceeds the rank.
inline double normalization_ratio(const EnsembleSpec& ens) {
  const std::size_t N = ens.N;
  if (ens.table->order() < N + 1 && N + 1 <= ens.table->source_size())
    throw numeric_range_error("normalization_ratio: table order below N+1");
  const double hi = ens.table->log_e(N + 1);
  if (hi == neg_inf) return 0.0;
  return std::exp(std::log(static_cast<double>(N + 1)) + hi -
                  ens.table->log_e(N));
}

/// Relative deviation between the normalization ratios of two ensembles,
/// reported (not asserted) by the universality diagnostic.
inline double universality_deviation(const EnsembleSpec& a,
                                     const EnsembleSpec& b) {
  const double ra = normalization_ratio(a);
  const double rb = normalization_ratio(b);
  if (ra == 0.0 && rb == 0.0) return 0.0;
  return std::fabs(ra - rb) / std::max(std::fabs(ra), std::fabs(rb));
}

}  // namespace coboson
