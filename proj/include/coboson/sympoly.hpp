/// Elementary symmetric polynomials of Schmidt spectra in log-domain
/// arithmetic. The stored quantity is e_k (the plain elementary symmetric
/// polynomial); the k!-scaled convention chi_k = k! e_k is reconstructed on
/// demand through log-gamma so no factorial is ever formed numerically.
///
/// Two evaluation routes are provided and cross-validated against each
/// other: a cancellation-free dynamic-programming update (the production
/// path, safe for rank 10^6 and order 10^3) and the power-sum recursion
/// k e_k = sum_m (-1)^(m-1) M(m) e_(k-m), which carries alternating signs
/// and therefore runs sign-tracked with a cancellation guard.
#pragma once

#include <atomic>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "coboson/common.hpp"
#include "coboson/spectrum.hpp"

namespace coboson {

enum class ChiMethod { dp, newton, loo_identity, loo_recompute };

inline const char* chi_method_name(ChiMethod m) {
  switch (m) {
    case ChiMethod::newton:
      return "newton";
    case ChiMethod::dp:
    case ChiMethod::loo_identity:
    case ChiMethod::loo_recompute:
    default:
      return "dp";
  }
}

/// Table of log e_k for k = 0..K over one coefficient sequence.
/// e_k = 0 exactly (log = -inf) for k beyond the sequence length.
class ChiTable {
 public:
  ChiTable() = default;
  ChiTable(std::vector<double> log_e, std::size_t source_size,
           std::uint64_t fingerprint, ChiMethod method, bool degraded = false)
      : log_e_(std::move(log_e)),
        source_size_(source_size),
        fingerprint_(fingerprint),
        method_(method),
        degraded_(degraded) {}

  std::size_t order() const { return log_e_.empty() ? 0 : log_e_.size() - 1; }
  std::size_t source_size() const { return source_size_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  ChiMethod method() const { return method_; }
  /// True when the power-sum route was requested but tripped its
  /// cancellation guard and the table was rebuilt on the dp path.
  bool degraded() const { return degraded_; }

  double log_e(std::size_t k) const {
    if (k < log_e_.size()) return log_e_[k];
    if (k > source_size_) return neg_inf;  // identically zero
    throw numeric_range_error(
        "chi table of order " + std::to_string(order()) +
        " accessed at k = " + std::to_string(k) +
        "; rebuild with a larger order");
  }
  double e(std::size_t k) const { return std::exp(log_e(k)); }
  /// log(k! e_k); may exceed the exp range, prefer the log form.
  double log_chi(std::size_t k) const {
    const double le = log_e(k);
    return le == neg_inf ? neg_inf : log_factorial(k) + le;
  }
  double chi(std::size_t k) const { return std::exp(log_chi(k)); }

 private:
  std::vector<double> log_e_;
  std::size_t source_size_ = 0;
  std::uint64_t fingerprint_ = 0;
  ChiMethod method_ = ChiMethod::dp;
  bool degraded_ = false;
};

struct ChiOptions {
  unsigned threads = 1;
  std::size_t block = std::size_t{1} << 16;  // split size for threaded runs
  double newton_condition_ratio = 1e7;       // guard for the signed recursion
  double loo_max_rel_err = 1e-9;             // forward-error bound before
                                             // the identity path falls back
  PrecisionMode precision = PrecisionMode::normal;
};

namespace detail {

// Scaled-linear accumulator for the dp update e_k <- e_k + lam * e_(k-1).
// Every cell is held as m * 2^E with m in [1,2), so the hot path is a
// multiply, a power-of-two scaling and an add; nothing is ever subtracted.
// Exponents are manipulated directly through the bit pattern (terms more
// than 55 binary orders apart fall outside one ulp and collapse to the
// larger one, exactly as a log-domain add would). Exact log values are
// extracted at the end.
class ScaledEsp {
 public:
  explicit ScaledEsp(std::size_t order) : m_(order + 1, 0.0), E_(order + 1, 0) {
    m_[0] = 1.0;  // e_0 = 1
  }

  void push(double lam) {
    const std::size_t order = m_.size() - 1;
    ++count_;
    const std::size_t kmax = std::min(order, count_);
    double* m = m_.data();
    std::int64_t* E = E_.data();
    for (std::size_t k = kmax; k >= 1; --k) {
      const double t = lam * m[k - 1];  // > 0, < 2
      double tm;
      std::int64_t te;
      const std::uint64_t bits = std::bit_cast<std::uint64_t>(t);
      const std::uint64_t ef = bits >> 52;  // sign bit is clear
      if (ef != 0) [[likely]] {
        te = static_cast<std::int64_t>(ef) - 1023;
        tm = std::bit_cast<double>((bits & mant_mask) | one_bits);
      } else {  // subnormal product
        int ex;
        tm = std::frexp(t, &ex) * 2.0;
        te = ex - 1;
      }
      te += E[k - 1];
      if (m[k] == 0.0) {
        m[k] = tm;
        E[k] = te;
        continue;
      }
      const std::int64_t D = te - E[k];
      if (D > 55) {  // old cell below one ulp of the term
        m[k] = tm;
        E[k] = te;
        continue;
      }
      if (D < -55) continue;  // term below one ulp of the cell
      const double nm = m[k] + tm * pow2(static_cast<int>(D));
      if (nm >= 2.0) {
        const std::uint64_t nb = std::bit_cast<std::uint64_t>(nm);
        E[k] += static_cast<std::int64_t>(nb >> 52) - 1023;
        m[k] = std::bit_cast<double>((nb & mant_mask) | one_bits);
      } else {
        m[k] = nm;
      }
    }
  }

  std::vector<double> take_logs() const {
    std::vector<double> out(m_.size(), neg_inf);
    constexpr double ln2 = 0.6931471805599453;
    out[0] = 0.0;
    for (std::size_t k = 1; k < m_.size(); ++k)
      if (m_[k] != 0.0)
        out[k] = std::log(m_[k]) + static_cast<double>(E_[k]) * ln2;
    return out;
  }

  std::size_t pushed() const { return count_; }

 private:
  static constexpr std::uint64_t mant_mask = 0x000FFFFFFFFFFFFFull;
  static constexpr std::uint64_t one_bits = 0x3FF0000000000000ull;

  static double pow2(int d) {  // d in [-55, 55]
    static const std::vector<double> tab = [] {
      std::vector<double> t(111);
      for (int i = 0; i < 111; ++i) t[i] = std::ldexp(1.0, i - 55);
      return t;
    }();
    return tab[d + 55];
  }

  std::vector<double> m_;
  std::vector<std::int64_t> E_;
  std::size_t count_ = 0;
};

inline std::vector<double> esp_logs(std::span<const double> lam,
                                    std::size_t order) {
  ScaledEsp acc(order);
  for (double x : lam) acc.push(x);
  return acc.take_logs();
}

/// log-domain convolution c_k = log sum_i exp(a_i + b_(k-i)), k = 0..order.
inline std::vector<double> convolve_logs(std::span<const double> a,
                                         std::span<const double> b,
                                         std::size_t order) {
  std::vector<double> c(order + 1, neg_inf);
  std::vector<double> terms;
  for (std::size_t k = 0; k <= order; ++k) {
    terms.clear();
    const std::size_t i_lo = k + 1 > b.size() ? k + 1 - b.size() : 0;
    const std::size_t i_hi = std::min(k, a.size() - 1);
    for (std::size_t i = i_lo; i <= i_hi && i < a.size(); ++i) {
      const double t = a[i] + b[k - i];
      if (t != neg_inf) terms.push_back(t);
    }
    c[k] = log_sum_exp(terms);
  }
  return c;
}

inline std::vector<double> esp_logs_blocked(std::span<const double> lam,
                                            std::size_t order,
                                            const ChiOptions& opt) {
  const std::size_t nblocks = (lam.size() + opt.block - 1) / opt.block;
  if (opt.threads <= 1 || nblocks <= 1) return esp_logs(lam, order);

  std::vector<std::vector<double>> partial(nblocks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::size_t lo = b * opt.block;
      const std::size_t hi = std::min(lam.size(), lo + opt.block);
      const std::size_t sub_order = std::min(order, hi - lo);
      partial[b] = esp_logs(lam.subspan(lo, hi - lo), sub_order);
    }
  };
  std::vector<std::thread> pool;
  const unsigned nthreads = std::min<unsigned>(opt.threads, nblocks);
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // left fold in block order: result independent of thread scheduling
  std::vector<double> acc = std::move(partial[0]);
  for (std::size_t b = 1; b < nblocks; ++b)
    acc = convolve_logs(acc, partial[b], order);
  if (acc.size() < order + 1) acc.resize(order + 1, neg_inf);
  return acc;
}

inline void check_finite(const std::vector<double>& logs, std::size_t rank) {
  for (std::size_t k = 0; k < logs.size(); ++k) {
    if (std::isnan(logs[k]) || (logs[k] == neg_inf && k <= rank))
      throw numeric_range_error(
          "chi table: log e_k left the representable range at k = " +
          std::to_string(k));
  }
}

}  // namespace detail

inline void require_normalized(const SchmidtSpectrum& sp, double tol = 1e-12) {
  const double dev = std::fabs(sp.sum() - 1.0);
  if (dev > tol)
    throw numeric_range_error("spectrum not normalized: |sum-1| = " +
                              format_g17(dev));
}

/// Cancellation-free table over the full spectrum, to order K.
inline ChiTable chi_table(const SchmidtSpectrum& sp, std::size_t K,
                          const ChiOptions& opt = {}) {
  require_normalized(sp);
  auto logs = detail::esp_logs_blocked(sp.lambdas(), K, opt);
  detail::check_finite(logs, std::min(K, sp.size()));
  return ChiTable(std::move(logs), sp.size(), sp.fingerprint(),
                  ChiMethod::dp);
}

/// Table over the sub-spectrum selected by 1-based indices.
inline ChiTable chi_subset(const SchmidtSpectrum& sp,
                           std::span<const std::size_t> indices_1based,
                           std::size_t K) {
  std::vector<std::size_t> idx(indices_1based.begin(), indices_1based.end());
  std::sort(idx.begin(), idx.end());
  if (!idx.empty()) {
    if (idx.front() < 1 || idx.back() > sp.size())
      throw numeric_range_error("chi_subset: index outside 1..S");
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
      throw numeric_range_error("chi_subset: duplicate index");
  }
  std::vector<double> sub;
  sub.reserve(idx.size());
  for (std::size_t j : idx) sub.push_back(sp.lambda(j));
  auto logs = detail::esp_logs(sub, K);
  return ChiTable(std::move(logs), sub.size(), fingerprint_doubles(sub),
                  ChiMethod::dp);
}

/// Table over the t lowest-energy states (1..t in flattened order).
inline ChiTable chi_prefix(const SchmidtSpectrum& sp, std::size_t t,
                           std::size_t K) {
  if (t > sp.size())
    throw numeric_range_error("chi_prefix: t exceeds spectrum size");
  auto lam = sp.lambdas().subspan(0, t);
  auto logs = detail::esp_logs(lam, K);
  return ChiTable(std::move(logs), t, fingerprint_doubles(lam),
                  ChiMethod::dp);
}

/// Table over the complement of the t lowest-energy states.
inline ChiTable chi_complement(const SchmidtSpectrum& sp, std::size_t t,
                               std::size_t K) {
  if (t > sp.size())
    throw numeric_range_error("chi_complement: t exceeds spectrum size");
  auto lam = sp.lambdas().subspan(t);
  auto logs = detail::esp_logs(lam, K);
  return ChiTable(std::move(logs), lam.size(), fingerprint_doubles(lam),
                  ChiMethod::dp);
}

// ---------------------------------------------------------------------------
// Power sums and the sign-tracked recursion
// ---------------------------------------------------------------------------

class PowerSums {
 public:
  PowerSums() = default;
  PowerSums(std::vector<double> log_M, std::size_t source_size,
            std::uint64_t fingerprint)
      : log_M_(std::move(log_M)),
        source_size_(source_size),
        fingerprint_(fingerprint) {}

  std::size_t max_order() const { return log_M_.size(); }
  std::size_t source_size() const { return source_size_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  double log_value(std::size_t m) const {
    if (m < 1 || m > log_M_.size())
      throw numeric_range_error("power sum order out of range");
    return log_M_[m - 1];
  }
  double value(std::size_t m) const { return std::exp(log_value(m)); }

 private:
  std::vector<double> log_M_;
  std::size_t source_size_ = 0;
  std::uint64_t fingerprint_ = 0;
};

/// M(m) = sum_j lambda_j^m for m = 1..m_max, held in the log domain so that
/// deep tails cannot underflow.
inline PowerSums power_sums(const SchmidtSpectrum& sp, std::size_t m_max) {
  if (m_max < 1) throw numeric_range_error("power_sums: m_max must be >= 1");
  auto lam = sp.lambdas();
  std::vector<double> log_lam(lam.size());
  for (std::size_t j = 0; j < lam.size(); ++j) log_lam[j] = std::log(lam[j]);
  std::vector<double> out(m_max);
  std::vector<double> terms(lam.size());
  for (std::size_t m = 1; m <= m_max; ++m) {
    for (std::size_t j = 0; j < lam.size(); ++j)
      terms[j] = static_cast<double>(m) * log_lam[j];
    out[m - 1] = log_sum_exp(terms);
  }
  return PowerSums(std::move(out), sp.size(), sp.fingerprint());
}

/// Power-sum route: k e_k = sum_(m=1..k) (-1)^(m-1) M(m) e_(k-m).
/// Carries a compounded forward-error bound (errors in lower orders feed
/// every later sum) and throws instability_error when either the per-step
/// condition ratio or the accumulated bound is exceeded.
inline ChiTable chi_newton(const PowerSums& ps, std::size_t K,
                           const ChiOptions& opt = {}) {
  if (ps.max_order() < std::min(K, ps.source_size()))
    throw numeric_range_error("chi_newton: power sums shorter than K");
  const std::size_t rank = ps.source_size();
  std::vector<double> le(K + 1, neg_inf);
  std::vector<double> lerr(K + 1, neg_inf);  // absolute error bounds
  le[0] = 0.0;
  const double log_cond = std::log(opt.newton_condition_ratio);
  const double log_eps =
      std::log(std::numeric_limits<double>::epsilon());
  const double log_tol = std::log(1e-9);
  std::vector<double> pos, neg;
  for (std::size_t k = 1; k <= K; ++k) {
    if (k > rank) continue;  // identically zero
    pos.clear();
    neg.clear();
    double propagated = neg_inf;
    for (std::size_t m = 1; m <= k; ++m) {
      const double lM = ps.log_value(m);
      propagated = log_add_exp(propagated, lM + lerr[k - m]);
      const double lt = lM + le[k - m];
      if (lt == neg_inf) continue;
      ((m % 2 == 1) ? pos : neg).push_back(lt);
    }
    const double lp = log_sum_exp(pos);
    const double ln = log_sum_exp(neg);
    if (!(lp > ln))
      throw instability_error(
          "chi_newton: catastrophic cancellation at k = " + std::to_string(k));
    double diff;
    if (opt.precision == PrecisionMode::extended_fallback) {
      // long-double accumulation of the scaled alternating sum
      long double s = 0.0L;
      for (double t : pos) s += expl(static_cast<long double>(t) - lp);
      for (double t : neg) s -= expl(static_cast<long double>(t) - lp);
      if (!(s > 0.0L))
        throw instability_error(
            "chi_newton: catastrophic cancellation at k = " +
            std::to_string(k));
      diff = lp + static_cast<double>(logl(s));
    } else {
      diff = log_sub_exp(lp, ln);
    }
    const double lk = std::log(static_cast<double>(k));
    const double result = diff - lk;
    if (lp - diff > log_cond)
      throw instability_error(
          "chi_newton: condition ratio exceeded at k = " + std::to_string(k));
    const double rounding =
        log_eps + std::log(static_cast<double>(k) + 1.0) +
        log_add_exp(lp, ln);
    lerr[k] = log_add_exp(rounding, propagated) - lk;
    if (lerr[k] - result > log_tol)
      throw instability_error(
          "chi_newton: accumulated error bound exceeded at k = " +
          std::to_string(k));
    le[k] = result;
  }
  return ChiTable(std::move(le), rank, ps.fingerprint(), ChiMethod::newton);
}

/// Convenience wrapper: power-sum route with automatic degradation to the
/// dp path when the cancellation guard trips.
inline ChiTable chi_newton(const SchmidtSpectrum& sp, std::size_t K,
                           const ChiOptions& opt = {}) {
  require_normalized(sp);
  try {
    return chi_newton(power_sums(sp, std::min(K, sp.size())), K, opt);
  } catch (const instability_error&) {
    auto logs = detail::esp_logs(sp.lambdas(), K);
    return ChiTable(std::move(logs), sp.size(), sp.fingerprint(),
                    ChiMethod::dp, /*degraded=*/true);
  }
}

// ---------------------------------------------------------------------------
// Leave-one-out tables
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t loo_fingerprint(std::uint64_t full, std::size_t j) {
  std::uint64_t buf[2] = {full, static_cast<std::uint64_t>(j)};
  return fnv1a64(buf, sizeof buf);
}

}  // namespace detail

/// e_k over the spectrum with the j-th coefficient removed (1-based j),
/// via the downward identity e_k^(j) = e_k - lambda_j e_(k-1)^(j). The
/// identity path carries a running forward-error bound; if precision is
/// lost or an out-of-tolerance negative appears, the table is rebuilt by
/// direct dp over the reduced sequence (method tag records which happened).
inline ChiTable chi_leave_one_out(const ChiTable& full,
                                  const SchmidtSpectrum& sp, std::size_t j,
                                  std::size_t K, const ChiOptions& opt = {}) {
  if (full.fingerprint() != sp.fingerprint())
    throw numeric_range_error("chi_leave_one_out: table/spectrum mismatch");
  if (full.order() < K)
    throw numeric_range_error(
        "chi_leave_one_out: table order " + std::to_string(full.order()) +
        " below requested order " + std::to_string(K));
  const double lam = sp.lambda(j);
  const double log_lam = std::log(lam);
  const std::size_t rank = sp.size() - 1;
  const std::uint64_t fp = detail::loo_fingerprint(full.fingerprint(), j);

  std::vector<double> le(K + 1, neg_inf);
  le[0] = 0.0;
  const double log_eps = std::log(0.5 * std::numeric_limits<double>::epsilon());
  const double log_tol = std::log(opt.loo_max_rel_err);
  double lerr = neg_inf;
  bool ok = true;
  for (std::size_t k = 1; k <= K && ok; ++k) {
    if (k > rank) {
      le[k] = neg_inf;
      continue;
    }
    const double lek = full.log_e(k);
    const double lt = log_lam + le[k - 1];
    double v;
    if (lt > lek) {
      // negative difference: tolerate only below 1e-12 * e_k
      const double lneg = lt + std::log1p(-std::exp(lek - lt));
      if (lneg > lek + std::log(1e-12)) {
        ok = false;
        break;
      }
      v = neg_inf;
    } else {
      v = log_sub_exp(lek, lt);
    }
    lerr = log_add_exp(log_eps + lek, log_lam + lerr);
    if (v == neg_inf || lerr - v > log_tol) {
      ok = false;
      break;
    }
    le[k] = v;
  }
  if (ok)
    return ChiTable(std::move(le), rank, fp, ChiMethod::loo_identity);

  // guaranteed-correct fallback: dp over the reduced sequence
  std::vector<double> reduced;
  reduced.reserve(rank);
  auto all = sp.lambdas();
  for (std::size_t i = 0; i < all.size(); ++i)
    if (i != j - 1) reduced.push_back(all[i]);
  auto logs = detail::esp_logs(reduced, K);
  return ChiTable(std::move(logs), rank, fp, ChiMethod::loo_recompute);
}

// ---------------------------------------------------------------------------
// Identity checks used by the property suites
// ---------------------------------------------------------------------------

/// Largest violation of the normalized Newton inequality
/// (e_k / C(S,k))^2 >= e_(k-1)/C(S,k-1) * e_(k+1)/C(S,k+1),
/// returned as a log-domain slack (<= 0 means the inequality holds).
inline double newton_inequality_violation(const ChiTable& t) {
  const std::size_t S = t.source_size();
  double worst = neg_inf;
  const std::size_t top = std::min(t.order(), S) - 1;
  for (std::size_t k = 1; k <= top && k + 1 <= t.order(); ++k) {
    const double lhs = 2.0 * (t.log_e(k) - log_choose(S, k));
    const double rhs = t.log_e(k - 1) - log_choose(S, k - 1) + t.log_e(k + 1) -
                       log_choose(S, k + 1);
    if (rhs == neg_inf) continue;
    worst = std::max(worst, rhs - lhs);
  }
  return worst;
}

/// Relative residual of e_N(full) = sum_n e_n(tilde) e_(N-n)(bar).
inline double vandermonde_residual(const ChiTable& full, const ChiTable& tilde,
                                   const ChiTable& bar, std::size_t N) {
  std::vector<double> terms;
  for (std::size_t n = 0; n <= N; ++n) {
    if (n > tilde.order() && n > tilde.source_size()) break;
    const double t = tilde.log_e(n) + bar.log_e(N - n);
    if (t != neg_inf) terms.push_back(t);
  }
  const double conv = log_sum_exp(terms);
  const double ref = full.log_e(N);
  if (ref == neg_inf) return conv == neg_inf ? 0.0 : 1.0;
  return std::fabs(std::expm1(conv - ref));
}

// ---------------------------------------------------------------------------
// Table serialization (cacheable keyed by fingerprint, K, method)
// ---------------------------------------------------------------------------

inline void write_chi(std::ostream& os, const ChiTable& t) {
  os << "# coboson chi v1\n";
  os << "# fingerprint = " << hex64(t.fingerprint()) << "\n";
  os << "# S = " << t.source_size() << "\n";
  os << "# K = " << t.order() << "\n";
  os << "k,log_e_k,method\n";
  for (std::size_t k = 0; k <= t.order(); ++k)
    os << k << ',' << format_g17(t.log_e(k)) << ','
       << chi_method_name(t.method()) << "\n";
}

inline ChiTable read_chi(std::istream& is) {
  std::string line;
  std::uint64_t fp = 0;
  std::size_t S = 0;
  bool have_header = false;
  std::vector<double> logs;
  ChiMethod method = ChiMethod::dp;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      std::string val = line.substr(eq + 1);
      auto trim = [](std::string& s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
      };
      trim(key);
      trim(val);
      if (key == "fingerprint") fp = std::stoull(val, nullptr, 16);
      if (key == "S") S = std::stoull(val);
      continue;
    }
    if (!have_header) {
      have_header = true;  // column row
      continue;
    }
    std::stringstream ls(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() != 3) throw format_error("chi file: bad row");
    logs.push_back(fields[1] == "-inf" ? neg_inf : std::stod(fields[1]));
    if (fields[2] == "newton") method = ChiMethod::newton;
  }
  if (logs.empty()) throw format_error("chi file: no rows");
  return ChiTable(std::move(logs), S, fp, method);
}

}  // namespace coboson
