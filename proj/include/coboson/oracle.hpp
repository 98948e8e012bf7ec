/// Exhaustive small-instance reference implementations. States are built
/// as explicit amplitude vectors over enumerated pair configurations and
/// every observable is evaluated by dense linear algebra, independently of
/// the closed-form paths this module exists to check. Hard caps S <= 14,
/// N <= 6 keep the enumeration honest about its purpose.
#pragma once

#include <bit>
#include <map>

#include "coboson/bell.hpp"
#include "coboson/common.hpp"

namespace coboson::oracle {

inline constexpr std::size_t max_states = 14;
inline constexpr std::size_t max_pairs = 6;

inline void check_caps(std::size_t S, std::size_t N) {
  if (S > max_states || N > max_pairs)
    throw cap_error("oracle: refusing S = " + std::to_string(S) +
                    ", N = " + std::to_string(N) + " (caps S <= " +
                    std::to_string(max_states) + ", N <= " +
                    std::to_string(max_pairs) + ")");
}

using Mask = std::uint32_t;

/// All n-subsets of {1..S} in lexicographic tuple order, as bitmasks
/// (bit j-1 = state j occupied).
struct FockBasis {
  std::size_t S = 0;
  std::size_t n = 0;
  std::vector<Mask> configs;

  std::size_t index_of(Mask m) const {
    const auto it = index_.find(m);
    if (it == index_.end())
      throw numeric_range_error("fock basis: configuration not in sector");
    return it->second;
  }

  static FockBasis enumerate(std::size_t S, std::size_t n) {
    check_caps(S, 0);
    if (n > S)
      throw numeric_range_error("fock basis: need 0 <= n <= S");
    FockBasis b;
    b.S = S;
    b.n = n;
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    for (;;) {
      Mask m = 0;
      for (int i : idx) m |= Mask{1} << i;
      b.configs.push_back(m);
      if (n == 0) break;
      // next combination in lexicographic order
      int pos = static_cast<int>(n) - 1;
      while (pos >= 0 &&
             idx[pos] == static_cast<int>(S - n) + pos)
        --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (std::size_t i = pos + 1; i < n; ++i) idx[i] = idx[i - 1] + 1;
    }
    for (std::size_t i = 0; i < b.configs.size(); ++i)
      b.index_[b.configs[i]] = i;
    return b;
  }

 private:
  std::map<Mask, std::size_t> index_;
};

/// Elementary symmetric polynomial by direct subset enumeration.
inline double direct_esp(std::span<const double> lam, std::size_t k) {
  check_caps(lam.size(), 0);
  if (k > lam.size()) return 0.0;
  const FockBasis b = FockBasis::enumerate(lam.size(), k);
  NeumaierSum s;
  for (Mask m : b.configs) {
    double prod = 1.0;
    for (std::size_t j = 0; j < lam.size(); ++j)
      if (m & (Mask{1} << j)) prod *= lam[j];
    s.add(prod);
  }
  return s.total();
}

// ---------------------------------------------------------------------------
// Explicit states
// ---------------------------------------------------------------------------

/// |N> over the C(S,N) pair configurations; amplitudes are normalized
/// numerically, independent of any chi-table machinery.
struct CobosonState {
  FockBasis basis;
  std::vector<double> amp;
  std::size_t N = 0;
};

inline CobosonState build_coboson_state(std::span<const double> lam,
                                        std::size_t N) {
  check_caps(lam.size(), N);
  if (N < 1 || N > lam.size())
    throw numeric_range_error("oracle state: need 1 <= N <= S");
  CobosonState st;
  st.N = N;
  st.basis = FockBasis::enumerate(lam.size(), N);
  st.amp.resize(st.basis.configs.size());
  NeumaierSum norm2;
  for (std::size_t i = 0; i < st.amp.size(); ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < lam.size(); ++j)
      if (st.basis.configs[i] & (Mask{1} << j)) prod *= lam[j];
    st.amp[i] = std::sqrt(prod);
    norm2.add(prod);
  }
  const double norm = std::sqrt(norm2.total());
  if (!(norm > 0.0))
    throw numeric_range_error("oracle state: vanishing norm");
  for (double& a : st.amp) a /= norm;
  return st;
}

/// The projected two-mode state with M pairs in mode 1 and N-M in mode 2.
/// Amplitude of (J1, J2) is zero unless J1 and J2 are disjoint; row-major
/// matrix over (mode-1 sector) x (mode-2 sector).
struct SplitState {
  FockBasis basis1, basis2;
  std::vector<double> amp;  // basis1.size() x basis2.size()
  std::size_t N = 0, M = 0, S = 0;

  double at(std::size_t i1, std::size_t i2) const {
    return amp[i1 * basis2.configs.size() + i2];
  }
};

inline SplitState build_split_state(std::span<const double> lam, std::size_t N,
                                    std::size_t M) {
  check_caps(lam.size(), N);
  if (N < 1 || N > lam.size() || M > N)
    throw numeric_range_error("oracle split state: need 1 <= N <= S, M <= N");
  SplitState st;
  st.N = N;
  st.M = M;
  st.S = lam.size();
  st.basis1 = FockBasis::enumerate(lam.size(), M);
  st.basis2 = FockBasis::enumerate(lam.size(), N - M);
  const std::size_t d1 = st.basis1.configs.size();
  const std::size_t d2 = st.basis2.configs.size();
  st.amp.assign(d1 * d2, 0.0);
  NeumaierSum norm2;
  for (std::size_t i1 = 0; i1 < d1; ++i1) {
    const Mask m1 = st.basis1.configs[i1];
    for (std::size_t i2 = 0; i2 < d2; ++i2) {
      const Mask m2 = st.basis2.configs[i2];
      if (m1 & m2) continue;  // Pauli blocking across both modes
      double prod = 1.0;
      const Mask u = m1 | m2;
      for (std::size_t j = 0; j < lam.size(); ++j)
        if (u & (Mask{1} << j)) prod *= lam[j];
      st.amp[i1 * d2 + i2] = std::sqrt(prod);
      norm2.add(prod);
    }
  }
  const double norm = std::sqrt(norm2.total());
  if (!(norm > 0.0))
    throw numeric_range_error("oracle split state: vanishing norm");
  for (double& a : st.amp) a /= norm;
  return st;
}

// ---------------------------------------------------------------------------
// Dense reduced states
// ---------------------------------------------------------------------------

/// Dense symmetric matrix with the few operations the checks need.
class DensityMatrix {
 public:
  explicit DensityMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t dim() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a_[i * n_ + j];
  }

  double trace() const {
    NeumaierSum s;
    for (std::size_t i = 0; i < n_; ++i) s.add(a_[i * n_ + i]);
    return s.total();
  }
  double frobenius_squared() const {
    NeumaierSum s;
    for (double x : a_) s.add(x * x);
    return s.total();
  }
  double symmetry_deviation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        worst = std::max(worst, std::fabs(a_[i * n_ + j] - a_[j * n_ + i]));
    return worst;
  }

  /// Eigenvalues by cyclic Jacobi sweeps, ascending.
  std::vector<double> eigenvalues() const {
    std::vector<double> a = a_;
    const std::size_t n = n_;
    for (int sweep = 0; sweep < 64; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
      if (off < 1e-30) break;
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a[p * n + q];
          if (std::fabs(apq) < 1e-300) continue;
          const double theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
          double t = 1.0 / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = t * c;
          for (std::size_t r = 0; r < n; ++r) {
            const double arp = a[r * n + p];
            const double arq = a[r * n + q];
            a[r * n + p] = c * arp - s * arq;
            a[r * n + q] = s * arp + c * arq;
          }
          for (std::size_t r = 0; r < n; ++r) {
            const double apr = a[p * n + r];
            const double aqr = a[q * n + r];
            a[p * n + r] = c * apr - s * aqr;
            a[q * n + r] = s * apr + c * aqr;
          }
        }
      }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i * n + i];
    std::sort(ev.begin(), ev.end());
    return ev;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

/// rho_1 = Tr_2 |split><split|, over the mode-1 sector basis.
inline DensityMatrix reduced_density_mode1(const SplitState& st) {
  const std::size_t d1 = st.basis1.configs.size();
  const std::size_t d2 = st.basis2.configs.size();
  DensityMatrix rho(d1);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t k = 0; k < d1; ++k) {
      NeumaierSum s;
      for (std::size_t j = 0; j < d2; ++j)
        s.add(st.amp[i * d2 + j] * st.amp[k * d2 + j]);
      rho(i, k) = s.total();
    }
  return rho;
}

// ---------------------------------------------------------------------------
// Brute-force observables
// ---------------------------------------------------------------------------

inline double brute_purity(const SplitState& st) {
  const DensityMatrix rho = reduced_density_mode1(st);
  // Tr(rho^2) = ||rho||_F^2 for symmetric rho
  return rho.frobenius_squared();
}

/// D_j of the unsplit state (1-based j).
inline double brute_occupation(const CobosonState& st, std::size_t j) {
  if (j < 1 || j > st.basis.S)
    throw numeric_range_error("oracle occupation: index out of range");
  const Mask bit = Mask{1} << (j - 1);
  NeumaierSum s;
  for (std::size_t i = 0; i < st.amp.size(); ++i)
    if (st.basis.configs[i] & bit) s.add(st.amp[i] * st.amp[i]);
  return s.total() / static_cast<double>(st.N);
}

inline std::vector<double> brute_occupations(const CobosonState& st) {
  std::vector<double> out(st.basis.S);
  for (std::size_t j = 1; j <= st.basis.S; ++j)
    out[j - 1] = brute_occupation(st, j);
  return out;
}

/// P(n): probability of n pairs among states 1..t.
inline std::vector<double> brute_counts(const CobosonState& st,
                                        std::size_t t) {
  if (t < 1 || t > st.basis.S)
    throw numeric_range_error("oracle counts: need 1 <= t <= S");
  const Mask window = (Mask{1} << t) - 1;
  std::vector<double> p(t + 1, 0.0);
  for (std::size_t i = 0; i < st.amp.size(); ++i) {
    const unsigned n = std::popcount(st.basis.configs[i] & window);
    if (n <= t) p[n] += st.amp[i] * st.amp[i];
  }
  return p;
}

/// P12(n1, n2) over the window for the split state; row-major in n1.
inline std::vector<std::vector<double>> brute_joint_counts(
    const SplitState& st, std::size_t t) {
  if (t < 1 || t > st.S)
    throw numeric_range_error("oracle counts: need 1 <= t <= S");
  const Mask window = (Mask{1} << t) - 1;
  std::vector<std::vector<double>> p(
      st.M + 1, std::vector<double>(st.N - st.M + 1, 0.0));
  const std::size_t d2 = st.basis2.configs.size();
  for (std::size_t i1 = 0; i1 < st.basis1.configs.size(); ++i1) {
    const unsigned n1 = std::popcount(st.basis1.configs[i1] & window);
    for (std::size_t i2 = 0; i2 < d2; ++i2) {
      const unsigned n2 = std::popcount(st.basis2.configs[i2] & window);
      p[n1][n2] += st.at(i1, i2) * st.at(i1, i2);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Quadrature operators and the CHSH set
// ---------------------------------------------------------------------------

/// Occupancy-flip involution on one mode's full configuration space:
/// X |K> = |K xor {j}>, companion states untouched. Z is diagonal with
/// +1 on j-empty and -1 on j-occupied configurations. Verified here by
/// explicit matrix products over the enumerated basis.
struct QuadratureChecks {
  double x_involution_deviation = 0;     // || X^2 - I ||_max
  double anticommutator_deviation = 0;   // || XZ + ZX ||_max
};

inline QuadratureChecks quadrature_operator_checks(std::size_t S,
                                                   std::size_t j) {
  check_caps(S, 0);
  if (j < 1 || j > S)
    throw numeric_range_error("quadrature checks: index out of range");
  const std::size_t dim = std::size_t{1} << S;
  const Mask bit = Mask{1} << (j - 1);
  std::vector<double> X(dim * dim, 0.0), Z(dim * dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    X[k * dim + (k ^ bit)] = 1.0;
    Z[k * dim + k] = (k & bit) ? -1.0 : 1.0;
  }
  auto mul = [&](const std::vector<double>& A, const std::vector<double>& B) {
    std::vector<double> C(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t k = 0; k < dim; ++k) {
        const double a = A[i * dim + k];
        if (a == 0.0) continue;
        for (std::size_t l = 0; l < dim; ++l)
          C[i * dim + l] += a * B[k * dim + l];
      }
    return C;
  };
  QuadratureChecks out;
  const auto X2 = mul(X, X);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t l = 0; l < dim; ++l) {
      const double id = (i == l) ? 1.0 : 0.0;
      out.x_involution_deviation =
          std::max(out.x_involution_deviation, std::fabs(X2[i * dim + l] - id));
    }
  const auto XZ = mul(X, Z);
  const auto ZX = mul(Z, X);
  for (std::size_t i = 0; i < dim * dim; ++i)
    out.anticommutator_deviation =
        std::max(out.anticommutator_deviation, std::fabs(XZ[i] + ZX[i]));
  return out;
}

/// Occupancy weights of state j in the split state: (both-empty, occupied
/// in mode 1 only, occupied in mode 2 only, occupied in both).
struct OccupancyWeights {
  double ee = 0, oe = 0, eo = 0, oo = 0;
};

inline OccupancyWeights occupancy_weights(const SplitState& st,
                                          std::size_t j) {
  if (j < 1 || j > st.S)
    throw numeric_range_error("oracle chsh: index out of range");
  const Mask bit = Mask{1} << (j - 1);
  OccupancyWeights w;
  const std::size_t d2 = st.basis2.configs.size();
  for (std::size_t i1 = 0; i1 < st.basis1.configs.size(); ++i1) {
    const bool o1 = st.basis1.configs[i1] & bit;
    for (std::size_t i2 = 0; i2 < d2; ++i2) {
      const bool o2 = st.basis2.configs[i2] & bit;
      const double p = st.at(i1, i2) * st.at(i1, i2);
      if (o1 && o2)
        w.oo += p;
      else if (o1)
        w.oe += p;
      else if (o2)
        w.eo += p;
      else
        w.ee += p;
    }
  }
  return w;
}

/// CHSH correlators from the explicit state: slice the state by the
/// occupancy of j in each mode, compress onto the two-qubit occupancy
/// space (the doubly-occupied weight is identically zero), and evaluate
/// the four products as dense 4x4 operator algebra. Q and R act on the
/// qubit of the mode holding N-M pairs.
inline CorrelatorSet brute_chsh(const SplitState& st, std::size_t j) {
  const OccupancyWeights w = occupancy_weights(st, j);
  if (w.oo > 1e-14)
    throw instability_error("oracle chsh: doubly-occupied weight " +
                            format_g17(w.oo));
  // basis order (e1 e2, e1 o2, o1 e2, o1 o2); amplitudes all nonnegative
  const double psi[4] = {std::sqrt(w.ee), std::sqrt(w.eo), std::sqrt(w.oe),
                         0.0};

  const double Zq[2][2] = {{1, 0}, {0, -1}};  // (e, o) basis
  const double Xq[2][2] = {{0, 1}, {1, 0}};
  auto kron = [&](const double A[2][2], const double B[2][2],
                  double out[4][4]) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            out[a * 2 + c][b * 2 + d] = A[a][b] * B[c][d];
  };
  double Z1[4][4], X1[4][4], Z2[4][4], X2[4][4];
  const double I[2][2] = {{1, 0}, {0, 1}};
  kron(Zq, I, Z1);
  kron(Xq, I, X1);
  kron(I, Zq, Z2);
  kron(I, Xq, X2);

  auto expect_product = [&](const double A[4][4], const double B[4][4]) {
    // <psi| A B |psi> with A, B commuting (different tensor factors)
    double Bp[4] = {0, 0, 0, 0};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) Bp[r] += B[r][c] * psi[c];
    double ABp[4] = {0, 0, 0, 0};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) ABp[r] += A[r][c] * Bp[c];
    double e = 0;
    for (int r = 0; r < 4; ++r) e += psi[r] * ABp[r];
    return e;
  };

  // Q, R on mode 2 (N-M pairs); S, T are rotated combinations on mode 1.
  double Sm[4][4], Tm[4][4];
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      Sm[r][c] = (X1[r][c] - Z1[r][c]) / sqrt2;
      Tm[r][c] = (X1[r][c] + Z1[r][c]) / sqrt2;
    }
  CorrelatorSet out;
  out.qs = expect_product(Z2, Sm);
  out.rs = expect_product(X2, Sm);
  out.rt = expect_product(X2, Tm);
  out.qt = expect_product(Z2, Tm);
  out.m = out.qs + out.rs + out.rt - out.qt;
  return out;
}

}  // namespace coboson::oracle
