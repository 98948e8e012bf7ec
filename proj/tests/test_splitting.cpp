#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coboson/oracle.hpp"
#include "coboson/splitting.hpp"

using namespace coboson;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SchmidtSpectrum spectrum_532() {
  const double w[] = {0.5, 0.3, 0.2};
  return SchmidtSpectrum::custom(w);
}

SchmidtSpectrum spectrum_4321() {
  const double w[] = {0.4, 0.3, 0.2, 0.1};
  return SchmidtSpectrum::custom(w);
}

SchmidtSpectrum random_spectrum(std::mt19937_64& rng, std::size_t S) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(S);
  for (double& x : w) x = u(rng);
  return SchmidtSpectrum::custom(w);
}

}  // namespace

TEST_CASE("split amplitudes are binomial") {
  const auto amp = split_amplitudes(2, 0.5);
  REQUIRE_THAT(amp[0] * amp[0], WithinRel(0.25, 1e-13));
  REQUIRE_THAT(amp[1] * amp[1], WithinRel(0.5, 1e-13));
  REQUIRE_THAT(amp[2] * amp[2], WithinRel(0.25, 1e-13));

  const auto all = split_amplitudes(5, 1.0);
  REQUIRE(all[5] == 1.0);
  for (std::size_t m = 0; m < 5; ++m) REQUIRE(all[m] == 0.0);

  const auto a43 = split_amplitudes(4, 0.3);
  NeumaierSum sum;
  for (std::size_t m = 0; m <= 4; ++m) {
    const double pmf = std::exp(log_choose(4, m)) * std::pow(0.3, double(m)) *
                       std::pow(0.7, double(4 - m));
    REQUIRE_THAT(a43[m] * a43[m], WithinRel(pmf, 1e-12));
    sum.add(a43[m] * a43[m]);
  }
  REQUIRE_THAT(sum.total(), WithinAbs(1.0, 1e-12));

  REQUIRE_THROWS_AS(split_amplitudes(3, 1.5), numeric_range_error);
}

TEST_CASE("alpha coefficient anchors") {
  const auto a21 = alpha_coeffs(2, 1);
  REQUIRE(a21.size() == 1);
  REQUIRE_THAT(a21.value(0), WithinAbs(0.5, 1e-12));

  const auto a20 = alpha_coeffs(2, 0);
  REQUIRE(a20.value(0) == 0.0);

  // hand evaluation for N = 3, M = 1: alpha_1 = 2/5, alpha_0 = 4/15
  const auto a31 = alpha_coeffs(3, 1);
  REQUIRE_THAT(a31.value(1), WithinRel(0.4, 1e-12));
  REQUIRE_THAT(a31.value(0), WithinRel(1.0 - 1.0 / 3.0 - 0.4, 1e-11));
}

TEST_CASE("alpha symmetry in M <-> N-M") {
  for (std::size_t N = 2; N <= 12; ++N) {
    for (std::size_t M = 0; M <= N / 2; ++M) {
      const auto a = alpha_coeffs(N, M);
      const auto b = alpha_coeffs(N, N - M);
      REQUIRE(a.size() == b.size());
      for (std::size_t m = 0; m < a.size(); ++m) {
        if (a.value(m) == 0.0) {
          REQUIRE_THAT(b.value(m), WithinAbs(0.0, 1e-14));
          continue;
        }
        REQUIRE_THAT(b.value(m), WithinRel(a.value(m), 1e-10));
      }
    }
  }
}

TEST_CASE("alpha positivity holds within the tracked noise") {
  for (std::size_t N : {10, 40, 120, 360}) {
    const auto a = alpha_coeffs(N, N / 2);
    for (std::size_t m = 0; m < a.size(); ++m) {
      if (a.signed_log(m).sign < 0) REQUIRE(a.noise_dominated(m));
    }
    // the top of the recursion is always well conditioned
    REQUIRE_FALSE(a.noise_dominated(N - 2));
    REQUIRE(a.signed_log(N - 2).sign > 0);
  }
}

TEST_CASE("purity matches the oracle through deep recursions (N up to 6)") {
  std::mt19937_64 rng(314);
  for (std::size_t N : {4ul, 5ul, 6ul}) {
    for (int trial = 0; trial < 6; ++trial) {
      const std::size_t S = N + rng() % (13 - N);
      const auto sp = random_spectrum(rng, S);
      const auto t = chi_table(sp, 2 * N);
      const EnsembleSpec ens(sp, t, N);
      for (std::size_t M = 0; M <= N; ++M) {
        const double closed = purity(ens, M);
        const double brute = oracle::brute_purity(
            oracle::build_split_state(sp.lambdas(), N, M));
        REQUIRE_THAT(closed, WithinRel(brute, 1e-9));
      }
    }
  }
}

TEST_CASE("purity anchors") {
  {
    const auto sp = spectrum_532();
    const auto t = chi_table(sp, 4);
    const EnsembleSpec ens(sp, t, 2);
    REQUIRE_THAT(purity(ens, 1), WithinAbs(0.5, 1e-9));
  }
  {
    const auto sp = spectrum_4321();
    const auto t = chi_table(sp, 4);
    const EnsembleSpec ens(sp, t, 2);
    // 0.5 + 0.5 * chi_4 / chi_2^2 with chi_4 = 24 * 0.0024
    REQUIRE_THAT(purity(ens, 1), WithinAbs(0.558776, 1e-6));
    const double brute =
        oracle::brute_purity(oracle::build_split_state(sp.lambdas(), 2, 1));
    REQUIRE_THAT(purity(ens, 1), WithinRel(brute, 1e-10));
  }
}

TEST_CASE("unsplit projections are pure") {
  const auto sp = spectrum_4321();
  const auto t = chi_table(sp, 6);
  const EnsembleSpec ens(sp, t, 3);
  REQUIRE(purity(ens, 0) == 1.0);
  REQUIRE(purity(ens, 3) == 1.0);
}

TEST_CASE("Slater limit: flat spectra with S = N") {
  for (std::size_t N = 2; N <= 20; ++N) {
    const auto sp = SchmidtSpectrum::flat(N);
    const auto t = chi_table(sp, 2 * N);
    const EnsembleSpec ens(sp, t, N);
    for (std::size_t M = 0; M <= N; ++M) {
      const double want = purity_lower_bound(N, M);
      REQUIRE_THAT(purity(ens, M), WithinAbs(want, 1e-12));
    }
  }
  // oracle confirmation at small size
  const auto sp3 = SchmidtSpectrum::flat(3);
  const double brute =
      oracle::brute_purity(oracle::build_split_state(sp3.lambdas(), 3, 1));
  REQUIRE_THAT(brute, WithinRel(1.0 / 3.0, 1e-12));
}

TEST_CASE("purity equals partial-trace purity over random spectra") {
  std::mt19937_64 rng(99);
  for (std::size_t S = 2; S <= 6; ++S) {
    for (std::size_t N : {2ul, 3ul}) {
      if (N > S) continue;
      for (int trial = 0; trial < 15; ++trial) {
        const auto sp = random_spectrum(rng, S);
        const auto t = chi_table(sp, 2 * N);
        const EnsembleSpec ens(sp, t, N);
        for (std::size_t M = 0; M <= N; ++M) {
          const double closed = purity(ens, M);
          const double brute = oracle::brute_purity(
              oracle::build_split_state(sp.lambdas(), N, M));
          REQUIRE_THAT(closed, WithinRel(brute, 1e-10));
          REQUIRE(closed >= purity_lower_bound(N, M) - 1e-12);
          REQUIRE(closed <= 1.0 + 1e-12);
        }
        // symmetry under M <-> N-M
        for (std::size_t M = 0; M <= N / 2; ++M)
          REQUIRE_THAT(purity(ens, M),
                       WithinAbs(purity(ens, N - M), 1e-10));
      }
    }
  }
}

TEST_CASE("purity requires a deep enough table") {
  const auto sp = SchmidtSpectrum::geometric(0.6, 12);
  const auto shallow = chi_table(sp, 4);
  const EnsembleSpec ens(sp, shallow, 4);
  REQUIRE_THROWS_AS(purity(ens, 2), numeric_range_error);
}

TEST_CASE("joint count anchors") {
  const auto sp = spectrum_532();
  const auto t = chi_table(sp, 2);
  const EnsembleSpec ens(sp, t, 2);
  const auto w = make_count_window(sp, 1, 2);
  const auto jc = joint_count_distribution(ens, 1, w);
  REQUIRE_THAT(jc.at(0, 0), WithinAbs(0.193548, 1e-6));
  REQUIRE_THAT(jc.at(1, 0), WithinAbs(0.403226, 1e-6));
  REQUIRE_THAT(jc.at(0, 1), WithinAbs(0.403226, 1e-6));
  REQUIRE(jc.at(1, 1) == 0.0);

  const auto p1 = marginal_count(ens, 1, w);
  REQUIRE_THAT(p1[0], WithinAbs(0.596774, 1e-6));
  REQUIRE_THAT(p1[1], WithinAbs(0.403226, 1e-6));
}

TEST_CASE("full window pins the joint counts") {
  const auto sp = spectrum_4321();
  const auto t = chi_table(sp, 3);
  const EnsembleSpec ens(sp, t, 3);
  const auto w = make_count_window(sp, 4, 3);
  for (std::size_t M = 0; M <= 3; ++M) {
    const auto jc = joint_count_distribution(ens, M, w);
    for (std::size_t n1 = 0; n1 <= M; ++n1)
      for (std::size_t n2 = 0; n2 <= 3 - M; ++n2) {
        const double want = (n1 == M && n2 == 3 - M) ? 1.0 : 0.0;
        REQUIRE_THAT(jc.at(n1, n2), WithinAbs(want, 1e-12));
      }
  }
}

TEST_CASE("marginal of the M = 0 split is concentrated at zero") {
  const auto sp = spectrum_532();
  const auto t = chi_table(sp, 2);
  const EnsembleSpec ens(sp, t, 2);
  const auto w = make_count_window(sp, 2, 2);
  const auto p = marginal_count(ens, 0, w);
  REQUIRE(p.size() == 1);
  REQUIRE_THAT(p[0], WithinAbs(1.0, 1e-12));
}

TEST_CASE("flat S = N marginals are hypergeometric") {
  const std::size_t N = 6, t = 3, M = 2;
  const auto sp = SchmidtSpectrum::flat(N);
  const auto table = chi_table(sp, N);
  const EnsembleSpec ens(sp, table, N);
  const auto w = make_count_window(sp, t, N);
  const auto p1 = marginal_count(ens, M, w);
  for (std::size_t n1 = 0; n1 <= M; ++n1) {
    const double want = std::exp(log_choose(t, n1) + log_choose(N - t, M - n1) -
                                 log_choose(N, M));
    REQUIRE_THAT(p1[n1], WithinRel(want, 1e-10));
  }
}

TEST_CASE("joint counts normalize and match the oracle") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t S = 3 + rng() % 4;
    const std::size_t N = 2 + rng() % 2;
    if (N > S) continue;
    const std::size_t t = 1 + rng() % S;
    const std::size_t M = rng() % (N + 1);
    const auto sp = random_spectrum(rng, S);
    const auto table = chi_table(sp, N);
    const EnsembleSpec ens(sp, table, N);
    const auto w = make_count_window(sp, t, N);
    const auto jc = joint_count_distribution(ens, M, w);
    const auto brute =
        oracle::brute_joint_counts(oracle::build_split_state(sp.lambdas(), N, M), t);
    NeumaierSum sum;
    for (std::size_t n1 = 0; n1 <= M; ++n1)
      for (std::size_t n2 = 0; n2 <= N - M; ++n2) {
        sum.add(jc.at(n1, n2));
        REQUIRE_THAT(jc.at(n1, n2), WithinAbs(brute[n1][n2], 1e-10));
      }
    REQUIRE_THAT(sum.total(), WithinAbs(1.0, 1e-9));
    // marginal over n2 at M = N reproduces the unsplit distribution
    const auto pm = marginal_count(ens, N, w);
    const auto pc = count_distribution(ens, make_count_window(sp, t, N));
    for (std::size_t n = 0; n <= std::min(t, N); ++n)
      REQUIRE_THAT(pm[n], WithinAbs(pc[n], 1e-10));
  }
}
