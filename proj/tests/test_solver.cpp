#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coboson/solver.hpp"

using namespace coboson;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("physical parameter derivations") {
  PhysicalParams p;
  p.a = 0.1;
  p.pair_count = 360;
  REQUIRE_NOTHROW(p.validate());
  // k_F = (6 pi^2 N / V)^(1/3) with V = 4 pi L^3 / 3 => (4.5 pi N)^(1/3)
  REQUIRE_THAT(p.fermi_wavenumber(),
               WithinRel(std::cbrt(4.5 * M_PI * 360.0), 1e-13));
  REQUIRE_THAT(p.inv_kfa(), WithinRel(1.0 / (p.fermi_wavenumber() * 0.1), 1e-13));
  REQUIRE_THAT(p.binding_energy(), WithinRel(100.0, 1e-13));
  p.a = -1.0;
  REQUIRE_THROWS_AS(p.validate(), numeric_range_error);
}

TEST_CASE("free relative motion reproduces the oscillator ground state") {
  PairPotentialSpec none;
  none.kind = PairPotentialSpec::Kind::none;
  const GridSpec grid{480, 7.0};
  const auto sol = solve_two_body(none, grid, 1);
  // reduced-mass oscillator: E = Omega (2n + l + 3/2) with Omega = 1
  REQUIRE_THAT(sol.channels[0].energies[0], WithinAbs(1.5, 2e-3));
  REQUIRE_THAT(sol.channels[1].energies[0], WithinAbs(2.5, 2e-3));
  REQUIRE(sol.channels[0].energies[0] < sol.channels[0].energies[1]);
}

TEST_CASE("zero interaction gives a rank-1 pair state") {
  PairPotentialSpec none;
  none.kind = PairPotentialSpec::Kind::none;
  const GridSpec grid{480, 7.0};
  const auto sol = solve_two_body(none, grid, 0, 1);
  const auto kernel = kernel_from_solution(sol);
  DecomposeOptions opts;
  opts.l_max = 6;
  const auto sp = schmidt_decompose(kernel, grid, opts);
  REQUIRE(sp.lambda(1) > 1.0 - 1e-8);
  REQUIRE_THAT(sp.sum(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("shallow wells are diagnosed as unbound") {
  PairPotentialSpec weak;
  weak.kind = PairPotentialSpec::Kind::gaussian_well;
  weak.depth = 1.0;
  weak.range = 0.2;
  const GridSpec grid{300, 6.0};
  REQUIRE_THROWS_AS(solve_two_body(weak, grid, 0), numeric_range_error);
}

TEST_CASE("depth calibration hits the requested binding energy") {
  const GridSpec grid{600, 6.0};
  const double binding = 20.0;
  const auto pot = calibrate_gaussian_depth(0.25, binding, grid);
  REQUIRE_THAT(ground_energy(pot, grid), WithinRel(-binding, 1e-9));
  // the universal dimer relation a ~ 1/sqrt(E_B) should hold loosely for
  // a finite-range well (diagnostic, generous band)
  const double a_diag = scattering_length_diagnostic(pot);
  REQUIRE(a_diag > 0.10);
  REQUIRE(a_diag < 0.55);
}

TEST_CASE("ground energy converges monotonically under grid refinement") {
  PairPotentialSpec pot;
  pot.kind = PairPotentialSpec::Kind::gaussian_well;
  pot.depth = 30.0;
  pot.range = 0.25;
  std::vector<double> e;
  for (std::size_t n : {32, 64, 128, 256, 512})
    e.push_back(ground_energy(pot, GridSpec{n, 6.0}));
  for (std::size_t i = 0; i + 2 < e.size(); ++i) {
    const double d1 = std::fabs(e[i + 1] - e[i]);
    const double d2 = std::fabs(e[i + 2] - e[i + 1]);
    REQUIRE(d2 < d1);
  }
}

TEST_CASE("gaussian test kernel matches the analytic geometric spectrum") {
  const double c = 0.5;
  const auto kernel = mehler_kernel(c);
  const GridSpec grid{360, 8.0};
  DecomposeOptions opts;
  opts.l_max = 12;
  const auto sp = schmidt_decompose(kernel, grid, opts);

  const double z = mehler_geometric_ratio(c);
  REQUIRE_THAT(z, WithinRel(0.0717967697244908, 1e-12));
  const double l0 = std::pow(1.0 - z, 3);
  // oscillator level L has multiplicity (L+1)(L+2)/2 and weight l0 z^L
  std::vector<double> expected;
  for (int level = 0; level <= 3; ++level) {
    const int mult = (level + 1) * (level + 2) / 2;
    for (int i = 0; i < mult; ++i)
      expected.push_back(l0 * std::pow(z, level));
  }
  REQUIRE(sp.size() >= expected.size());
  for (std::size_t j = 0; j < expected.size(); ++j)
    REQUIRE_THAT(sp.lambda(j + 1), WithinRel(expected[j], 1e-6));
  REQUIRE_THAT(sp.sum(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("degeneracies are exact and coefficients shell-constant") {
  const auto kernel = mehler_kernel(0.35);
  const GridSpec grid{240, 7.0};
  DecomposeOptions opts;
  opts.l_max = 8;
  const auto sp = schmidt_decompose(kernel, grid, opts);
  for (const Shell& s : sp.shells()) REQUIRE(s.degeneracy() == 2 * s.l + 1);
  // flattened entries within one shell are identical
  for (std::size_t j = 1; j <= sp.size(); ++j) {
    const Shell& s = sp.shell_of(j);
    REQUIRE(sp.lambda(j) == s.lambda);
  }
}

TEST_CASE("random positive kernels decompose into a normalized spectrum") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int trial = 0; trial < 3; ++trial) {
    PairKernel k;
    const double a1 = u(rng), a2 = u(rng), wmix = 0.3 + 0.4 * u(rng) / 2.0;
    const double b1 = u(rng);
    k.cm = [a1](double rho) { return std::exp(-a1 * rho * rho); };
    k.rel = [a2, b1, wmix](double d) {
      return std::exp(-a2 * d * d / 4.0) + wmix * std::exp(-b1 * d * d / 2.0);
    };
    k.rel_scale = 1.0 / std::sqrt(std::max(a2, b1));
    k.d_cut = 25.0;
    const GridSpec grid{200, 7.0};
    DecomposeOptions opts;
    opts.l_max = 8;
    const auto sp = schmidt_decompose(k, grid, opts);
    REQUIRE_THAT(sp.sum(), WithinAbs(1.0, 1e-12));
    // within each channel the shells come out in decreasing order
    for (std::size_t i = 1; i < sp.shells().size(); ++i) {
      const Shell& prev = sp.shells()[i - 1];
      const Shell& cur = sp.shells()[i];
      if (prev.l == cur.l) REQUIRE(prev.lambda + 1e-15 >= cur.lambda);
    }
  }
}

TEST_CASE("top coefficients converge under kernel-grid refinement") {
  PairPotentialSpec pot;
  pot.kind = PairPotentialSpec::Kind::gaussian_well;
  pot.depth = 0.0;
  // fixed potential from a one-off calibration on a fine grid
  const auto fixed = calibrate_gaussian_depth(0.3, 12.0, GridSpec{480, 7.0});
  auto top10 = [&](std::size_t n) {
    const GridSpec grid{n, 7.0};
    const auto sol = solve_two_body(fixed, grid, 0, 1);
    DecomposeOptions opts;
    opts.l_max = 8;
    opts.norm_tol = 0.2;  // coarse grids lose weight; that is the point here
    const auto sp = schmidt_decompose(kernel_from_solution(sol), grid, opts);
    NeumaierSum s;
    for (std::size_t j = 1; j <= std::min<std::size_t>(10, sp.size()); ++j)
      s.add(sp.lambda(j));
    return s.total();
  };
  const double s1 = top10(60), s2 = top10(120), s3 = top10(240);
  REQUIRE(std::fabs(s3 - s2) < std::fabs(s2 - s1));
}

TEST_CASE("physical pipeline respects the validity regime") {
  PhysicalParams p;
  p.pair_count = 360;
  p.a = 3.0;  // far beyond the trusted interaction window
  SolveOptions opts;
  opts.grid = GridSpec{200, 6.0};
  REQUIRE_THROWS_AS(solve_physical_spectrum(p, opts), numeric_range_error);
}
