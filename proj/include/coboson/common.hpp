/// Log-domain arithmetic, error types and small utilities shared by all
/// coboson modules. Everything that must survive extreme dynamic range
/// (symmetric polynomials of 10^6 coefficients, binomials of order 10^3)
/// goes through the helpers in this header.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coboson {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double sqrt2 = 1.4142135623730951;

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto distinct exit codes.
// ---------------------------------------------------------------------------

/// Input or parameter outside its admissible numeric range.
class numeric_range_error : public std::runtime_error {
 public:
  explicit numeric_range_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Exhaustive-enumeration size cap exceeded.
class cap_error : public std::runtime_error {
 public:
  explicit cap_error(const std::string& what) : std::runtime_error(what) {}
};

/// A guarded recursion detected catastrophic cancellation or produced an
/// out-of-tolerance negative value.
class instability_error : public std::runtime_error {
 public:
  explicit instability_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Malformed file or inconsistent serialized content.
class format_error : public std::runtime_error {
 public:
  explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Log-domain primitives
// ---------------------------------------------------------------------------

/// log(e^a + e^b); exact for -inf arguments.
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == neg_inf) return a;
  const double d = b - a;  // <= 0
  if (d < -37.0) return a;
  return a + std::log1p(std::exp(d));
}

/// log(e^a - e^b) for a >= b; returns -inf when the difference underflows.
/// Throws if b > a beyond rounding slack.
inline double log_sub_exp(double a, double b) {
  if (b == neg_inf) return a;
  if (b > a) {
    if (b - a < 1e-12) return neg_inf;
    throw instability_error("log_sub_exp: negative difference");
  }
  const double d = b - a;
  if (d == 0.0) return neg_inf;
  return a + std::log1p(-std::exp(d));
}

/// Numerically stable log(sum(exp(v))) over a span, two-pass.
inline double log_sum_exp(std::span<const double> v) {
  double m = neg_inf;
  for (double x : v) m = std::max(m, x);
  if (m == neg_inf) return neg_inf;
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double t = std::exp(x - m);
    const double y = t - c;
    const double u = s + y;
    c = (u - s) - y;
    s = u;
  }
  return m + std::log(s);
}

/// Sign-tagged log magnitude. sign in {-1, 0, +1}; log_mag = -inf iff sign 0.
struct SignedLog {
  double log_mag = neg_inf;
  int sign = 0;

  static SignedLog zero() { return {}; }
  static SignedLog positive(double lg) {
    return lg == neg_inf ? SignedLog{} : SignedLog{lg, +1};
  }
  static SignedLog from_value(double v) {
    if (v == 0.0) return {};
    return {std::log(std::fabs(v)), v > 0 ? +1 : -1};
  }

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }

  SignedLog operator*(const SignedLog& o) const {
    if (sign == 0 || o.sign == 0) return {};
    return {log_mag + o.log_mag, sign * o.sign};
  }
  SignedLog operator+(const SignedLog& o) const {
    if (sign == 0) return o;
    if (o.sign == 0) return *this;
    if (sign == o.sign) return {log_add_exp(log_mag, o.log_mag), sign};
    // opposite signs: subtract smaller magnitude from larger
    if (log_mag == o.log_mag) return {};
    const bool mine = log_mag > o.log_mag;
    const double big = mine ? log_mag : o.log_mag;
    const double small = mine ? o.log_mag : log_mag;
    const double lg = big + std::log1p(-std::exp(small - big));
    return {lg, mine ? sign : o.sign};
  }
  SignedLog operator-(const SignedLog& o) const {
    SignedLog n = o;
    n.sign = -n.sign;
    return *this + n;
  }
};

// ---------------------------------------------------------------------------
// Factorials and binomials (log domain, table-backed for hot paths)
// ---------------------------------------------------------------------------

inline double log_factorial(std::uint64_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

inline double log_choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return neg_inf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// Precomputed log k! for k = 0..n_max, used by the recursions.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(std::size_t n_max) : tab_(n_max + 1) {
    tab_[0] = 0.0;
    for (std::size_t k = 1; k <= n_max; ++k)
      tab_[k] = tab_[k - 1] + std::log(static_cast<double>(k));
  }
  double operator()(std::size_t k) const { return tab_[k]; }
  double choose(std::size_t n, std::size_t k) const {
    if (k > n) return neg_inf;
    return tab_[n] - tab_[k] - tab_[n - k];
  }

 private:
  std::vector<double> tab_;
};

// ---------------------------------------------------------------------------
// Compensated accumulation
// ---------------------------------------------------------------------------

struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double total() const { return sum + comp; }
};

// ---------------------------------------------------------------------------
// Fingerprints (FNV-1a over raw coefficient bits)
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fingerprint_doubles(std::span<const double> v) {
  std::uint64_t h = fnv1a64(v.data(), v.size() * sizeof(double));
  return fnv1a64(&h, sizeof(h));  // mix once more
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Text formatting (17 significant digits round-trips doubles exactly)
// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Runtime knobs from the environment
// ---------------------------------------------------------------------------

enum class PrecisionMode { normal, extended_fallback };

inline PrecisionMode precision_mode_from_env() {
  const char* v = std::getenv("COBOSON_PRECISION");
  if (v && std::strcmp(v, "extended-fallback") == 0)
    return PrecisionMode::extended_fallback;
  return PrecisionMode::normal;
}

inline unsigned thread_count_from_env(unsigned fallback = 1) {
  const char* v = std::getenv("COBOSON_THREADS");
  if (v) {
    const long n = std::strtol(v, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return fallback;
}

}  // namespace coboson
