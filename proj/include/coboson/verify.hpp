/// Registered oracle-equivalence checks: every closed-form observable is
/// paired with its exhaustive-enumeration counterpart and swept over random
/// spectra. The CLI `verify` subcommand and the acceptance suite both run
/// through this registry.
#pragma once

#include <functional>
#include <random>

#include "coboson/oracle.hpp"
#include "coboson/splitting.hpp"

namespace coboson::verify {

struct SweepConfig {
  std::vector<std::size_t> ranks = {2, 3, 4, 5, 6};  // S values
  std::vector<std::size_t> pair_counts = {2, 3};     // N values
  std::size_t trials = 100;                          // spectra per (S, N)
  std::uint64_t seed = 20250817;
  double tolerance = 1e-10;  // relative
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // largest relative deviation observed
  std::string detail;
};

inline SchmidtSpectrum random_spectrum(std::mt19937_64& rng, std::size_t S) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(S);
  for (double& x : w) x = u(rng);
  return SchmidtSpectrum::custom(w);
}

inline double rel_dev(double got, double want) {
  const double scale = std::max({std::fabs(want), std::fabs(got), 1e-300});
  return std::fabs(got - want) / scale;
}

/// Purity formula vs explicit partial-trace purity.
inline CheckResult check_purity(const SweepConfig& cfg) {
  CheckResult r{"purity-vs-partial-trace"};
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t S : cfg.ranks) {
    for (std::size_t N : cfg.pair_counts) {
      if (N > S) continue;
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const SchmidtSpectrum sp = random_spectrum(rng, S);
        const ChiTable table = chi_table(sp, 2 * N);
        const EnsembleSpec ens(sp, table, N);
        for (std::size_t M = 0; M <= N; ++M) {
          const double closed = purity(ens, M);
          const double brute = oracle::brute_purity(
              oracle::build_split_state(sp.lambdas(), N, M));
          r.worst = std::max(r.worst, rel_dev(closed, brute));
        }
      }
    }
  }
  r.pass = r.worst < cfg.tolerance;
  r.detail = "max rel dev " + format_g17(r.worst);
  return r;
}

/// Occupations D_j vs explicit densities, plus the sum rule.
inline CheckResult check_occupations(const SweepConfig& cfg) {
  CheckResult r{"occupation-vs-partial-trace"};
  std::mt19937_64 rng(cfg.seed + 1);
  double worst_sum = 0.0;
  for (std::size_t S : cfg.ranks) {
    for (std::size_t N : cfg.pair_counts) {
      if (N > S) continue;
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const SchmidtSpectrum sp = random_spectrum(rng, S);
        const ChiTable table = chi_table(sp, N);
        const EnsembleSpec ens(sp, table, N);
        const auto closed = occupations(ens);
        const auto brute = oracle::brute_occupations(
            oracle::build_coboson_state(sp.lambdas(), N));
        NeumaierSum sum;
        for (std::size_t j = 0; j < S; ++j) {
          r.worst = std::max(r.worst, rel_dev(closed[j], brute[j]));
          sum.add(closed[j]);
        }
        worst_sum = std::max(worst_sum, std::fabs(sum.total() - 1.0));
      }
    }
  }
  r.pass = r.worst < cfg.tolerance && worst_sum < 1e-8;
  r.detail = "max rel dev " + format_g17(r.worst) + ", sum-rule dev " +
             format_g17(worst_sum);
  return r;
}

/// Window counting distributions (unsplit and split) vs enumeration.
inline CheckResult check_counts(const SweepConfig& cfg) {
  CheckResult r{"counting-vs-enumeration"};
  std::mt19937_64 rng(cfg.seed + 2);
  for (std::size_t S : cfg.ranks) {
    for (std::size_t N : cfg.pair_counts) {
      if (N > S) continue;
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const SchmidtSpectrum sp = random_spectrum(rng, S);
        const ChiTable table = chi_table(sp, N);
        const EnsembleSpec ens(sp, table, N);
        std::uniform_int_distribution<std::size_t> tdist(1, S);
        const std::size_t t = tdist(rng);
        const CountWindow w = make_count_window(sp, t, N);
        const auto closed = count_distribution(ens, w);
        const auto brute =
            oracle::brute_counts(oracle::build_coboson_state(sp.lambdas(), N), t);
        for (std::size_t n = 0; n <= t; ++n)
          r.worst = std::max(r.worst, rel_dev(closed[n], brute[n]));
        for (std::size_t M = 0; M <= N; ++M) {
          const auto joint = joint_count_distribution(ens, M, w);
          const auto bj = oracle::brute_joint_counts(
              oracle::build_split_state(sp.lambdas(), N, M), t);
          for (std::size_t n1 = 0; n1 <= M; ++n1)
            for (std::size_t n2 = 0; n2 <= N - M; ++n2)
              r.worst =
                  std::max(r.worst, rel_dev(joint.at(n1, n2), bj[n1][n2]));
        }
      }
    }
  }
  r.pass = r.worst < cfg.tolerance;
  r.detail = "max rel dev " + format_g17(r.worst);
  return r;
}

/// Closed-form CHSH correlators vs explicit operator construction, both
/// evaluated at the oracle's occupation so the comparison isolates the
/// correlator algebra (the occupation paths have their own check).
inline CheckResult check_chsh(const SweepConfig& cfg) {
  CheckResult r{"chsh-vs-operators"};
  std::mt19937_64 rng(cfg.seed + 3);
  for (std::size_t S : cfg.ranks) {
    if (S > 5) continue;  // operator sweep domain
    for (std::size_t N : cfg.pair_counts) {
      if (N > S || N > 3) continue;
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const SchmidtSpectrum sp = random_spectrum(rng, S);
        const auto cob = oracle::build_coboson_state(sp.lambdas(), N);
        for (std::size_t M = 0; M <= N; ++M) {
          const auto split = oracle::build_split_state(sp.lambdas(), N, M);
          for (std::size_t j = 1; j <= S; ++j) {
            const double D = oracle::brute_occupation(cob, j);
            BellSetting setting{j, N, M, D};
            const CorrelatorSet closed = chsh_correlators(setting);
            const CorrelatorSet brute = oracle::brute_chsh(split, j);
            r.worst = std::max({r.worst, rel_dev(closed.qs, brute.qs),
                                rel_dev(closed.rs, brute.rs),
                                rel_dev(closed.rt, brute.rt),
                                rel_dev(closed.qt, brute.qt),
                                rel_dev(closed.m, brute.m)});
            const double m17 = chsh_value(N, M, D);
            r.worst = std::max(r.worst, rel_dev(m17, brute.m));
          }
        }
      }
    }
  }
  r.pass = r.worst < cfg.tolerance;
  r.detail = "max rel dev " + format_g17(r.worst);
  return r;
}

/// X involution and XZ anticommutation on the enumerated mode basis.
inline CheckResult check_quadrature_algebra(const SweepConfig& cfg) {
  CheckResult r{"quadrature-operator-algebra"};
  for (std::size_t S = 2; S <= 5; ++S)
    for (std::size_t j = 1; j <= S; ++j) {
      const auto q = oracle::quadrature_operator_checks(S, j);
      r.worst = std::max({r.worst, q.x_involution_deviation,
                          q.anticommutator_deviation});
    }
  r.pass = r.worst == 0.0;
  r.detail = "max deviation " + format_g17(r.worst);
  (void)cfg;
  return r;
}

inline std::vector<CheckResult> run_all(const SweepConfig& cfg = {}) {
  return {check_purity(cfg), check_occupations(cfg), check_counts(cfg),
          check_chsh(cfg), check_quadrature_algebra(cfg)};
}

}  // namespace coboson::verify
