/// Model two-body bound-state solver and Schmidt decomposition of the pair
/// wavefunction.
///
/// Units: hbar = m = omega = 1, so the single-particle oscillator length is
/// the unit of length and hbar*omega the unit of energy. Center-of-mass and
/// relative motion separate exactly in the harmonic trap; the relative
/// problem (reduced mass 1/2) is solved on a uniform radial grid with a
/// hard wall, giving -u'' + (r^2/4 + l(l+1)/r^2 + V(r)) u = E u per channel.
///
/// The pair state phi_cm(rho) * u(d)/d is rotationally invariant, so its
/// Schmidt modes organize into (n,l) shells of degeneracy 2l+1. Each
/// per-l kernel is obtained by a Legendre projection, evaluated as an
/// integral over the pair distance d (which resolves the short-range
/// structure that a fixed angular quadrature would miss), and then
/// diagonalized densely.
#pragma once

#include <lapacke.h>

#include <functional>

#include "coboson/spectrum.hpp"

namespace coboson {

// ---------------------------------------------------------------------------
// Physical parameters
// ---------------------------------------------------------------------------

struct PhysicalParams {
  double a = 0.1;          // scattering length, units of L
  double trap_length = 1;  // L
  double omega = 1;
  std::size_t pair_count = 1;  // N

  double volume() const {
    return 4.0 * M_PI / 3.0 * trap_length * trap_length * trap_length;
  }
  double pair_density() const {
    return static_cast<double>(pair_count) / volume();
  }
  double fermi_wavenumber() const {
    return std::cbrt(6.0 * M_PI * M_PI * pair_density());
  }
  double inv_kfa() const { return 1.0 / (fermi_wavenumber() * a); }
  /// Universal dimer binding energy 1/(a/L)^2 in trap units.
  double binding_energy() const {
    const double r = trap_length / a;
    return r * r;
  }
  void validate() const {
    if (!(a > 0.0))
      throw numeric_range_error("physical params: a must be positive");
    if (!(trap_length > 0.0) || !(omega > 0.0))
      throw numeric_range_error("physical params: L and omega must be "
                                "positive");
    if (pair_count < 1)
      throw numeric_range_error("physical params: N must be >= 1");
  }
};

struct PairPotentialSpec {
  enum class Kind { none, gaussian_well };
  Kind kind = Kind::gaussian_well;
  double depth = 0.0;  // V0 >= 0; V(r) = -V0 exp(-(r/range)^2)
  double range = 0.1;

  double operator()(double r) const {
    if (kind == Kind::none || depth == 0.0) return 0.0;
    const double q = r / range;
    return -depth * std::exp(-q * q);
  }
};

struct GridSpec {
  std::size_t points = 600;
  double x_max = 7.0;  // hard wall, units of L

  double step() const { return x_max / static_cast<double>(points + 1); }
  void validate() const {
    if (points < 8 || !(x_max > 0.0))
      throw numeric_range_error("grid: need >= 8 points and x_max > 0");
  }
};

// ---------------------------------------------------------------------------
// Radial eigenproblem per channel
// ---------------------------------------------------------------------------

struct RadialChannel {
  int l = 0;
  std::vector<double> energies;                 // ascending
  std::vector<std::vector<double>> functions;  // u on the grid, unit L2 norm
};

struct RadialSolution {
  GridSpec grid;
  std::vector<double> x;  // interior grid points
  PairPotentialSpec potential;
  std::vector<RadialChannel> channels;  // l = 0..l_max
};

namespace detail {

inline RadialChannel solve_radial_channel(const PairPotentialSpec& pot,
                                          const GridSpec& grid, int l,
                                          std::size_t n_states) {
  const std::size_t n = grid.points;
  const double h = grid.step();
  std::vector<double> diag(n), off(n - 1, -1.0 / (h * h));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = h * static_cast<double>(i + 1);
    diag[i] = 2.0 / (h * h) + 0.25 * x * x +
              static_cast<double>(l) * (l + 1) / (x * x) + pot(x);
  }
  const lapack_int m_want =
      static_cast<lapack_int>(std::min(n_states, n));
  std::vector<double> w(n), z(n * m_want);
  std::vector<lapack_int> isuppz(2 * std::max<lapack_int>(1, m_want));
  lapack_int m_found = 0;
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_ROW_MAJOR, 'V', 'I', static_cast<lapack_int>(n), diag.data(),
      off.data(), 0.0, 0.0, 1, m_want, 0.0, &m_found, w.data(), z.data(),
      m_want, isuppz.data());
  if (info != 0)
    throw numeric_range_error("radial solve failed (dstevr info = " +
                              std::to_string(info) + ")");
  RadialChannel ch;
  ch.l = l;
  const double inv_sqrt_h = 1.0 / std::sqrt(h);
  for (lapack_int k = 0; k < m_found; ++k) {
    ch.energies.push_back(w[k]);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i)
      u[i] = z[i * m_want + k] * inv_sqrt_h;  // continuum normalization
    ch.functions.push_back(std::move(u));
  }
  return ch;
}

}  // namespace detail

/// Relative-motion eigenpairs for l = 0..l_max. When the potential has a
/// well (depth > 0) the l = 0 ground state must come out below the
/// dissociation threshold E = 0, otherwise a no-bound-state diagnostic is
/// raised.
inline RadialSolution solve_two_body(const PairPotentialSpec& pot,
                                     const GridSpec& grid, int l_max,
                                     std::size_t states_per_l = 4) {
  grid.validate();
  if (l_max < 0)
    throw numeric_range_error("solve_two_body: l_max must be >= 0");
  RadialSolution sol;
  sol.grid = grid;
  sol.potential = pot;
  const double h = grid.step();
  for (std::size_t i = 0; i < grid.points; ++i)
    sol.x.push_back(h * static_cast<double>(i + 1));
  for (int l = 0; l <= l_max; ++l)
    sol.channels.push_back(
        detail::solve_radial_channel(pot, grid, l, states_per_l));
  if (pot.kind == PairPotentialSpec::Kind::gaussian_well && pot.depth > 0.0 &&
      sol.channels[0].energies[0] >= 0.0)
    throw numeric_range_error(
        "no bound state: well depth " + format_g17(pot.depth) +
        " leaves the ground level at E = " +
        format_g17(sol.channels[0].energies[0]));
  return sol;
}

inline double ground_energy(const PairPotentialSpec& pot,
                            const GridSpec& grid) {
  return detail::solve_radial_channel(pot, grid, 0, 1).energies[0];
}

/// Calibrate the well depth so that the l = 0 relative ground state sits at
/// -binding (trap units). Monotone bisection with bracket expansion.
inline PairPotentialSpec calibrate_gaussian_depth(double range, double binding,
                                                  const GridSpec& grid) {
  if (!(binding > 0.0) || !(range > 0.0))
    throw numeric_range_error("calibration: binding and range must be "
                              "positive");
  PairPotentialSpec pot;
  pot.kind = PairPotentialSpec::Kind::gaussian_well;
  pot.range = range;
  double lo = 0.0;
  double hi = 2.0 * binding + 20.0 / (range * range);
  pot.depth = hi;
  int expand = 0;
  while (ground_energy(pot, grid) > -binding) {
    lo = hi;
    hi *= 2.0;
    pot.depth = hi;
    if (++expand > 60)
      throw numeric_range_error("calibration: bracket expansion failed");
  }
  for (int it = 0; it < 200; ++it) {
    pot.depth = 0.5 * (lo + hi);
    const double e = ground_energy(pot, grid);
    if (e > -binding)
      lo = pot.depth;
    else
      hi = pot.depth;
    if (hi - lo < 1e-12 * hi) break;
  }
  pot.depth = 0.5 * (lo + hi);
  return pot;
}

/// s-wave scattering length of the bare potential from the zero-energy
/// radial solution in free space (diagnostic, not a contract): integrate
/// u'' = V u outward and read off the node of the asymptote.
inline double scattering_length_diagnostic(const PairPotentialSpec& pot,
                                           double r_max = 0.0,
                                           std::size_t steps = 20000) {
  if (r_max <= 0.0) r_max = 12.0 * pot.range;
  const double h = r_max / static_cast<double>(steps);
  double u = 0.0, du = 1.0, r = 1e-12;
  auto f = [&](double rr, double uu) { return pot(rr) * uu; };
  for (std::size_t i = 0; i < steps; ++i) {
    // RK4 on (u, u')
    const double k1u = du, k1d = f(r, u);
    const double k2u = du + 0.5 * h * k1d, k2d = f(r + 0.5 * h, u + 0.5 * h * k1u);
    const double k3u = du + 0.5 * h * k2d, k3d = f(r + 0.5 * h, u + 0.5 * h * k2u);
    const double k4u = du + h * k3d, k4d = f(r + h, u + h * k3u);
    u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    du += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
    r += h;
  }
  return r - u / du;
}

// ---------------------------------------------------------------------------
// Pair kernels
// ---------------------------------------------------------------------------

/// Rotationally invariant pair wavefunction psi = cm(rho) * rel(d), with
/// rho the center-of-mass radius and d the pair distance. The hints steer
/// the Legendre-projection quadrature.
struct PairKernel {
  std::function<double(double)> cm;
  std::function<double(double)> rel;
  double rel_scale = 1.0;  // sharpest feature of rel(d)
  double d_cut = 1e30;     // rel(d) negligible beyond this
  bool normalized_hint = false;
  std::string description;
};

/// Kernel of the solved two-body ground state: gaussian CM profile times
/// the interpolated l = 0 relative function.
inline PairKernel kernel_from_solution(const RadialSolution& sol) {
  if (sol.channels.empty() || sol.channels[0].functions.empty())
    throw numeric_range_error("kernel: solution has no l = 0 state");
  const auto x = sol.x;
  const auto u = sol.channels[0].functions[0];
  const double h = sol.grid.step();

  double umax = 0.0;
  for (double v : u) umax = std::max(umax, std::fabs(v));
  std::size_t last = u.size() - 1;
  while (last > 0 && std::fabs(u[last]) < 1e-14 * umax) --last;
  const double d_cut = std::min(sol.grid.x_max, x[last] + 2 * h);

  NeumaierSum r2;
  for (std::size_t i = 0; i < u.size(); ++i) r2.add(u[i] * u[i] * x[i] * x[i] * h);
  const double rms = std::sqrt(std::max(r2.total(), 1e-30));
  // sign convention: make the dominant lobe positive
  double sign = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::fabs(u[i]) == umax) {
      sign = u[i] > 0 ? 1.0 : -1.0;
      break;
    }

  PairKernel k;
  const double cm_norm = std::pow(2.0 / M_PI, 0.75);
  k.cm = [cm_norm](double rho) { return cm_norm * std::exp(-rho * rho); };
  const double rel_norm = sign / std::sqrt(4.0 * M_PI);
  k.rel = [x, u, h, rel_norm](double d) {
    if (d >= x.back()) return 0.0;
    if (d <= x.front()) return rel_norm * u.front() / x.front();
    const std::size_t i = static_cast<std::size_t>(d / h - 1.0 + 1e-12);
    const std::size_t i0 = std::min(i, x.size() - 2);
    const double t = (d - x[i0]) / h;
    const double ud = u[i0] * (1.0 - t) + u[i0 + 1] * t;
    return rel_norm * ud / d;
  };
  k.rel_scale = std::max(2.0 * h, std::min(rms, d_cut / 4.0));
  k.d_cut = d_cut;
  k.normalized_hint = true;
  k.description = "two-body solution, E0 = " +
                  format_g17(sol.channels[0].energies[0]) + ", depth = " +
                  format_g17(sol.potential.depth) + ", range = " +
                  format_g17(sol.potential.range);
  return k;
}

/// Analytic gaussian test kernel exp(-(ra^2+rb^2)/2 - c ra.rb), expressed
/// through rho and d: exp(-(1+c) rho^2) * exp(-(1-c) d^2/4). Its Schmidt
/// spectrum is geometric per Cartesian axis with ratio
/// ((sqrt(1+c) - sqrt(1-c)) / (sqrt(1+c) + sqrt(1-c)))^2.
inline PairKernel mehler_kernel(double c) {
  if (!(c > -1.0 && c < 1.0))
    throw numeric_range_error("mehler kernel: need |c| < 1");
  PairKernel k;
  k.cm = [c](double rho) { return std::exp(-(1.0 + c) * rho * rho); };
  k.rel = [c](double d) { return std::exp(-(1.0 - c) * d * d / 4.0); };
  k.rel_scale = std::sqrt(2.0 / (1.0 - c));
  k.d_cut = 10.0 * k.rel_scale;
  k.normalized_hint = false;
  k.description = "mehler gaussian kernel, c = " + format_g17(c);
  return k;
}

inline double mehler_geometric_ratio(double c) {
  const double sa = std::sqrt(1.0 + c), sb = std::sqrt(1.0 - c);
  const double r = (sa - sb) / (sa + sb);
  return r * r;
}

// ---------------------------------------------------------------------------
// Schmidt decomposition of a pair kernel
// ---------------------------------------------------------------------------

struct DecomposeOptions {
  int l_max = 24;
  double channel_stop = 1e-15;   // stop once a channel tops out below this
                                 // fraction of the largest coefficient
  double lambda_floor = 1e-18;   // per-mode keep threshold (relative)
  double norm_tol = 5e-3;        // allowed deficit for normalized kernels
  TruncationOptions truncation{1.0 - 1e-10, 0, 0.0};
  std::size_t memory_budget = 200'000'000;  // doubles, ~1.6 GB
};

namespace detail {

struct GaussLegendre16 {
  double node[16];
  double weight[16];
  GaussLegendre16() {
    // roots of P_16 by Newton iteration
    for (int i = 0; i < 8; ++i) {
      double t = std::cos(M_PI * (i + 0.75) / 16.5);
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= 16; ++k) {
          const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = 16 * (t * p1 - p0) / (t * t - 1.0);
        const double t_new = t - p1 / dp;
        if (std::fabs(t_new - t) < 1e-16) {
          t = t_new;
          break;
        }
        t = t_new;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= 16; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = 16 * (t * p1 - p0) / (t * t - 1.0);
      node[i] = -t;
      node[15 - i] = t;
      weight[i] = weight[15 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

inline const GaussLegendre16& gl16() {
  static const GaussLegendre16 g;
  return g;
}

/// Graded panel edges for the d-integration over [d_lo, d_hi]: fine panels
/// (a fraction of the kernel's sharpest scale) near the lower edge where
/// the relative function is largest, growing geometrically outward, and
/// everywhere limited so each panel spans only a small Legendre phase.
inline std::vector<double> panel_edges(double d_lo, double d_hi, double x,
                                       double y, double rel_scale,
                                       int l_max) {
  std::vector<double> edges{d_lo};
  double w = rel_scale / 3.0;
  const double theta_max = 6.0 / std::max(l_max, 4);
  const double xy = x * y;
  while (edges.back() < d_hi && edges.size() < 400) {
    const double d = edges.back();
    double allowed = w;
    if (d > 1e-12) {
      double cc = (x * x + y * y - d * d) / (2.0 * xy);
      cc = std::clamp(cc, -1.0, 1.0);
      const double s =
          std::max(std::sqrt(std::max(1.0 - cc * cc, 0.0)),
                   d / (2.0 * std::max(x, y)));
      allowed = std::min(allowed, theta_max * xy * s / d);
    }
    allowed = std::max(allowed, (d_hi - d_lo) / 399.0);
    edges.push_back(std::min(d + allowed, d_hi));
    w = std::min(w * 1.5, rel_scale * 3.0);
  }
  edges.back() = d_hi;
  return edges;
}

}  // namespace detail

/// Per-l Legendre projections of the kernel, diagonalized densely; the
/// squared singular values, shell energies (single-particle oscillator
/// expectations of the modes) and degeneracies assemble the spectrum.
inline SchmidtSpectrum schmidt_decompose(const PairKernel& kernel,
                                         const GridSpec& grid,
                                         const DecomposeOptions& opts = {}) {
  grid.validate();
  const std::size_t n = grid.points;
  const double h = grid.step();
  const int l_count = opts.l_max + 1;

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = h * static_cast<double>(i + 1);

  const std::size_t bw =
      std::min<std::size_t>(n - 1, static_cast<std::size_t>(
                                       std::ceil(kernel.d_cut / h)) + 2);
  const std::size_t band_cols = bw + 1;
  if (static_cast<std::size_t>(l_count) * n * band_cols >
      opts.memory_budget)
    throw numeric_range_error(
        "schmidt_decompose: projection storage exceeds the memory budget; "
        "reduce the grid, l_max or the kernel range");
  std::vector<double> band(static_cast<std::size_t>(l_count) * n * band_cols,
                           0.0);
  auto band_at = [&](int l, std::size_t i, std::size_t off) -> double& {
    return band[(static_cast<std::size_t>(l) * n + i) * band_cols + off];
  };

  const auto& gl = detail::gl16();
  NeumaierSum total3d;  // full squared norm of the kernel on the grid

  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    for (std::size_t j = i; j < std::min(n, i + bw + 1); ++j) {
      const double yj = x[j];
      const double d_lo = yj - xi;  // j >= i
      const double d_hi = std::min(xi + yj, kernel.d_cut);
      if (d_hi <= d_lo) continue;
      const auto edges = detail::panel_edges(d_lo, d_hi, xi, yj,
                                             kernel.rel_scale, opts.l_max);
      double acc_sq = 0.0;
      std::vector<double> acc(l_count, 0.0);
      for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double mid = 0.5 * (edges[p] + edges[p + 1]);
        const double half = 0.5 * (edges[p + 1] - edges[p]);
        for (int q = 0; q < 16; ++q) {
          const double d = mid + half * gl.node[q];
          const double rel = kernel.rel(d);
          if (rel == 0.0) continue;
          const double rho2 =
              0.25 * (2 * xi * xi + 2 * yj * yj - d * d);
          const double psi =
              kernel.cm(std::sqrt(std::max(rho2, 0.0))) * rel;
          if (psi == 0.0) continue;
          double c = (xi * xi + yj * yj - d * d) / (2.0 * xi * yj);
          c = std::clamp(c, -1.0, 1.0);
          const double wq = gl.weight[q] * half * psi * d;
          // Legendre recurrence, all orders at once
          double p0 = 1.0, p1 = c;
          acc[0] += wq;
          if (l_count > 1) acc[1] += wq * c;
          for (int l = 2; l < l_count; ++l) {
            const double p2 = ((2 * l - 1) * c * p1 - (l - 1) * p0) / l;
            acc[l] += wq * p2;
            p0 = p1;
            p1 = p2;
          }
          acc_sq += gl.weight[q] * half * psi * psi * d;
        }
      }
      const double scale = 2.0 * M_PI * h;
      for (int l = 0; l < l_count; ++l) band_at(l, i, j - i) = scale * acc[l];
      const double t3 = 8.0 * M_PI * M_PI * h * h * xi * yj * acc_sq;
      total3d.add(j == i ? t3 : 2.0 * t3);
    }
  }

  const double norm2 = total3d.total();
  if (!(norm2 > 0.0))
    throw numeric_range_error("schmidt_decompose: kernel vanishes on grid");
  if (kernel.normalized_hint && std::fabs(norm2 - 1.0) > opts.norm_tol)
    throw numeric_range_error(
        "schmidt_decompose: normalization deficit before renormalization = " +
        format_g17(std::fabs(norm2 - 1.0)));

  // per-channel dense diagonalization
  std::vector<Shell> shells;
  double lambda_max = 0.0;
  NeumaierSum captured;
  std::vector<double> dense(n * n), w(n);
  for (int l = 0; l < l_count; ++l) {
    std::fill(dense.begin(), dense.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t off = 0; off < band_cols && i + off < n; ++off) {
        const double v = band_at(l, i, off);
        dense[i * n + (i + off)] = v;
        dense[(i + off) * n + i] = v;
      }
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U',
                       static_cast<lapack_int>(n), dense.data(),
                       static_cast<lapack_int>(n), w.data());
    if (info != 0)
      throw numeric_range_error("schmidt_decompose: dsyevd failed at l = " +
                                std::to_string(l));
    // collect modes by descending coefficient
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return w[a] * w[a] > w[b] * w[b];
    });
    double channel_max = 0.0;
    int shell_index = 0;
    for (std::size_t rank = 0; rank < n; ++rank) {
      const std::size_t k = order[rank];
      const double lam = w[k] * w[k] / norm2;
      if (lam <= 0.0) break;
      channel_max = std::max(channel_max, lam);
      if (lambda_max > 0.0 && lam < opts.lambda_floor * lambda_max) break;
      // single-particle oscillator energy of the mode
      double e_kin = 0.0, e_pot = 0.0;
      double prev = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ui = dense[i * n + k] / std::sqrt(h);
        const double dui = (ui - prev) / h;
        e_kin += 0.5 * dui * dui * h;
        e_pot += (0.5 * x[i] * x[i] +
                  0.5 * static_cast<double>(l) * (l + 1) / (x[i] * x[i])) *
                 ui * ui * h;
        prev = ui;
      }
      e_kin += 0.5 * (prev / h) * (prev / h) * h;  // wall interval
      shells.push_back(Shell{++shell_index, l, lam, e_kin + e_pot});
      captured.add(lam * (2 * l + 1));
      lambda_max = std::max(lambda_max, lam);
    }
    if (l >= 2 && channel_max < opts.channel_stop * lambda_max) break;
  }

  std::string prov = kernel.description + "; grid " + std::to_string(n) +
                     " x " + format_g17(grid.x_max) + "; l_max " +
                     std::to_string(opts.l_max) + "; norm2 " +
                     format_g17(norm2) + "; captured " +
                     format_g17(captured.total());
  return SchmidtSpectrum::from_shells(std::move(shells), std::move(prov),
                                      opts.truncation);
}

// ---------------------------------------------------------------------------
// High-level path from physical parameters
// ---------------------------------------------------------------------------

struct SolveOptions {
  GridSpec grid{900, 7.0};
  int l_max = 36;
  double well_range_over_a = 0.5;
  std::size_t states_per_l = 4;
  DecomposeOptions decompose;
  bool enforce_regime = true;  // require (k_F a)^(-1) >= 0.5
};

/// Full pipeline: calibrate the well to the universal dimer binding energy
/// of the requested scattering length, solve the relative problem, build
/// the pair kernel and Schmidt-decompose it.
inline SchmidtSpectrum solve_physical_spectrum(const PhysicalParams& params,
                                               SolveOptions opts = {}) {
  params.validate();
  if (opts.enforce_regime && params.inv_kfa() < 0.5 - 1e-9)
    throw numeric_range_error(
        "solver validity requires (k_F a)^(-1) >= 0.5; got " +
        format_g17(params.inv_kfa()));
  const double binding = params.binding_energy();
  const double range = opts.well_range_over_a * params.a;
  const PairPotentialSpec pot =
      calibrate_gaussian_depth(range, binding, opts.grid);
  const RadialSolution sol = solve_two_body(pot, opts.grid, 0, 1);
  PairKernel kernel = kernel_from_solution(sol);
  const double a_diag = scattering_length_diagnostic(pot);
  kernel.description += "; a = " + format_g17(params.a) + "; inv_kfa = " +
                        format_g17(params.inv_kfa()) + "; N_ref = " +
                        std::to_string(params.pair_count) +
                        "; a_scatt_diag = " + format_g17(a_diag);
  return schmidt_decompose(kernel, opts.grid, opts.decompose);
}

}  // namespace coboson
