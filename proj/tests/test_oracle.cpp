#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coboson/ensemble.hpp"
#include "coboson/oracle.hpp"
#include "coboson/verify.hpp"

using namespace coboson;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("state enumeration is lexicographic") {
  const auto b = oracle::FockBasis::enumerate(3, 2);
  REQUIRE(b.configs.size() == 3);
  REQUIRE(b.configs[0] == 0b011);  // {1,2}
  REQUIRE(b.configs[1] == 0b101);  // {1,3}
  REQUIRE(b.configs[2] == 0b110);  // {2,3}

  const auto vac = oracle::FockBasis::enumerate(4, 0);
  REQUIRE(vac.configs.size() == 1);
  REQUIRE(vac.configs[0] == 0);

  REQUIRE(oracle::FockBasis::enumerate(5, 2).configs.size() == 10);

  // lexicographic tuple order differs from numeric mask order at S=4, n=2:
  // {1,4} comes before {2,3}
  const auto b42 = oracle::FockBasis::enumerate(4, 2);
  REQUIRE(b42.configs[2] == 0b1001);
  REQUIRE(b42.configs[3] == 0b0110);
}

TEST_CASE("caps are enforced") {
  REQUIRE_THROWS_AS(oracle::FockBasis::enumerate(15, 2), cap_error);
  const auto sp = SchmidtSpectrum::flat(8);
  REQUIRE_THROWS_AS(oracle::build_coboson_state(sp.lambdas(), 7), cap_error);
}

TEST_CASE("coboson state is normalized with positive amplitudes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(3 + rng() % 8);
    for (double& x : w) x = u(rng);
    const auto sp = SchmidtSpectrum::custom(w);
    const std::size_t N = 1 + rng() % std::min<std::size_t>(w.size(), 4);
    const auto st = oracle::build_coboson_state(sp.lambdas(), N);
    NeumaierSum n2;
    for (double a : st.amp) n2.add(a * a);
    REQUIRE_THAT(n2.total(), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("two-mode Bell state from a flat rank-2 spectrum") {
  const auto sp = SchmidtSpectrum::flat(2);
  const auto st = oracle::build_split_state(sp.lambdas(), 2, 1);
  // (|1>_1 |2>_2 + |2>_1 |1>_2)/sqrt(2): diagonal amplitudes vanish
  REQUIRE(st.basis1.configs.size() == 2);
  REQUIRE(st.at(0, 0) == 0.0);
  REQUIRE(st.at(1, 1) == 0.0);
  REQUIRE_THAT(st.at(0, 1), WithinRel(1.0 / sqrt2, 1e-12));
  REQUIRE_THAT(st.at(1, 0), WithinRel(1.0 / sqrt2, 1e-12));
}

TEST_CASE("split state amplitudes carry the Pauli restriction") {
  const double w[] = {0.5, 0.3, 0.2};
  const auto sp = SchmidtSpectrum::custom(w);
  const auto st = oracle::build_split_state(sp.lambdas(), 2, 1);
  // six nonzero amplitudes sqrt(lambda_j lambda_k / 0.62), j != k
  std::size_t nonzero = 0;
  NeumaierSum norm;
  for (std::size_t i1 = 0; i1 < 3; ++i1)
    for (std::size_t i2 = 0; i2 < 3; ++i2) {
      const double a = st.at(i1, i2);
      norm.add(a * a);
      if (a != 0.0) ++nonzero;
      if (i1 == i2) REQUIRE(a == 0.0);
    }
  REQUIRE(nonzero == 6);
  REQUIRE_THAT(norm.total(), WithinAbs(1.0, 1e-13));
  REQUIRE_THAT(st.at(0, 1) * st.at(0, 1), WithinRel(0.15 / 0.62, 1e-12));
}

TEST_CASE("M = 0 split is a pure product") {
  const double w[] = {0.5, 0.3, 0.2};
  const auto sp = SchmidtSpectrum::custom(w);
  const auto st = oracle::build_split_state(sp.lambdas(), 2, 0);
  REQUIRE(st.basis1.configs.size() == 1);
  REQUIRE_THAT(oracle::brute_purity(st), WithinAbs(1.0, 1e-12));
}

TEST_CASE("reduced density matrix invariants") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> w(4 + rng() % 3);
    for (double& x : w) x = u(rng);
    const auto sp = SchmidtSpectrum::custom(w);
    const auto st = oracle::build_split_state(sp.lambdas(), 3, 1);
    const auto rho = oracle::reduced_density_mode1(st);
    REQUIRE_THAT(rho.trace(), WithinAbs(1.0, 1e-12));
    REQUIRE(rho.symmetry_deviation() == 0.0);
    const auto ev = rho.eigenvalues();
    for (double e : ev) REQUIRE(e >= -1e-12);
    NeumaierSum p2;
    for (double e : ev) p2.add(e * e);
    REQUIRE_THAT(p2.total(), WithinRel(oracle::brute_purity(st), 1e-10));
  }
}

TEST_CASE("brute occupation anchors") {
  const double w[] = {0.5, 0.3, 0.2};
  const auto sp = SchmidtSpectrum::custom(w);
  const auto st = oracle::build_coboson_state(sp.lambdas(), 2);
  const auto d = oracle::brute_occupations(st);
  REQUIRE_THAT(d[0], WithinAbs(0.403226, 1e-6));
  REQUIRE_THAT(d[1], WithinAbs(0.338710, 1e-6));
  REQUIRE_THAT(d[2], WithinAbs(0.258065, 1e-6));
  NeumaierSum sum;
  for (double x : d) sum.add(x);
  REQUIRE_THAT(sum.total(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("brute purity anchor for the four-coefficient case") {
  const double w[] = {0.4, 0.3, 0.2, 0.1};
  const auto sp = SchmidtSpectrum::custom(w);
  const double p =
      oracle::brute_purity(oracle::build_split_state(sp.lambdas(), 2, 1));
  REQUIRE_THAT(p, WithinAbs(0.558776, 1e-6));
}

TEST_CASE("quadrature operator algebra on the enumerated basis") {
  for (std::size_t S = 2; S <= 5; ++S) {
    for (std::size_t j = 1; j <= S; ++j) {
      const auto q = oracle::quadrature_operator_checks(S, j);
      REQUIRE(q.x_involution_deviation == 0.0);
      REQUIRE(q.anticommutator_deviation == 0.0);
    }
  }
}

TEST_CASE("occupancy weights reproduce the split decomposition") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(3 + rng() % 3);
    for (double& x : w) x = u(rng);
    const auto sp = SchmidtSpectrum::custom(w);
    const std::size_t N = 2 + rng() % 2;
    if (N > sp.size()) continue;
    const std::size_t M = rng() % (N + 1);
    const auto st = oracle::build_split_state(sp.lambdas(), N, M);
    const auto cob = oracle::build_coboson_state(sp.lambdas(), N);
    for (std::size_t j = 1; j <= sp.size(); ++j) {
      const double D = oracle::brute_occupation(cob, j);
      const auto ow = oracle::occupancy_weights(st, j);
      REQUIRE(ow.oo == 0.0);  // Pauli blocking across modes
      REQUIRE_THAT(ow.oe, WithinAbs(double(M) * D, 1e-10));
      REQUIRE_THAT(ow.eo, WithinAbs(double(N - M) * D, 1e-10));
      REQUIRE_THAT(ow.ee, WithinAbs(1.0 - double(N) * D, 1e-10));
    }
  }
}

TEST_CASE("brute CHSH anchors") {
  // Bell case: S = 2, flat, N = 2, M = 1
  const auto flat2 = SchmidtSpectrum::flat(2);
  const auto bell = oracle::build_split_state(flat2.lambdas(), 2, 1);
  const auto cb = oracle::brute_chsh(bell, 1);
  REQUIRE_THAT(cb.m, WithinAbs(2.0 * sqrt2, 1e-12));

  // three-coefficient case: exact occupation D_1 = 25/62
  const double w[] = {0.5, 0.3, 0.2};
  const auto sp = SchmidtSpectrum::custom(w);
  const auto st = oracle::build_split_state(sp.lambdas(), 2, 1);
  const auto c = oracle::brute_chsh(st, 1);
  REQUIRE_THAT(c.m, WithinAbs(2.007273, 5e-6));
  REQUIRE_THAT(c.qs, WithinAbs(0.828469, 5e-6));
  // and exactly against the closed form at the exact occupation
  const auto closed = chsh_correlators(BellSetting{1, 2, 1, 0.25 / 0.62});
  REQUIRE_THAT(c.qs, WithinRel(closed.qs, 1e-12));
  REQUIRE_THAT(c.m, WithinRel(closed.m, 1e-12));

  // absent target state: D_j = 0 sector behavior via a state index with
  // tiny weight is covered by the closed form; here check a j beyond the
  // support is rejected
  REQUIRE_THROWS_AS(oracle::brute_chsh(st, 4), numeric_range_error);
}

TEST_CASE("verification registry passes with default sweeps") {
  verify::SweepConfig cfg;
  cfg.trials = 8;  // smoke-level here; full sweeps run in acceptance
  const auto results = verify::run_all(cfg);
  for (const auto& r : results) {
    INFO(r.name << ": " << r.detail);
    REQUIRE(r.pass);
  }
}
