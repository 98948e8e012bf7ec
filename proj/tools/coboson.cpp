// Command-line front end: spectra, symmetric-polynomial tables, ensemble
// and splitting observables, CHSH sweeps, figure-data pipelines and the
// oracle-equivalence verifier. Outputs are delimited text with provenance
// headers and are byte-identical across reruns with identical flags.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "coboson/bell.hpp"
#include "coboson/ensemble.hpp"
#include "coboson/solver.hpp"
#include "coboson/splitting.hpp"
#include "coboson/sympoly.hpp"
#include "coboson/verify.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_range = 3;
constexpr int exit_cap = 4;
constexpr const char* version_tag = "coboson 1.0.0";

/// Raised for refused overwrites and other usage-level problems.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g_command_line;

std::ofstream open_output(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path))
    throw usage_error("refusing to overwrite '" + path +
                      "' (pass --force to allow)");
  std::ofstream f(path);
  if (!f) throw usage_error("cannot open output file '" + path + "'");
  return f;
}

void write_provenance(std::ostream& os,
                      const std::vector<std::string>& extra = {}) {
  os << "# " << version_tag << "\n";
  os << "# command = " << g_command_line << "\n";
  for (const auto& line : extra) os << "# " << line << "\n";
}

std::string spectrum_stamp(const coboson::SchmidtSpectrum& sp) {
  return "spectrum fingerprint = " + coboson::hex64(sp.fingerprint()) +
         ", S = " + std::to_string(sp.size());
}

/// Deterministic worker pool over sweep indices: results land in a
/// pre-sized vector so the merge order never depends on scheduling.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  for (unsigned t = 0; t < std::min<std::size_t>(threads, count); ++t)
    pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

struct CommonOpts {
  bool force = false;
  unsigned threads = coboson::thread_count_from_env(1);
};

coboson::ChiOptions chi_options(const CommonOpts& c) {
  coboson::ChiOptions o;
  o.threads = 1;  // sweeps parallelize across points, not inside tables
  o.precision = coboson::precision_mode_from_env();
  (void)c;
  return o;
}

struct PresetDef {
  const char* label;
  double inv_kfa;
  std::size_t grid_points;
  double x_max;
  int l_max;
};

// bundled solver configurations, labelled by the interaction parameter
// (k_F a)^(-1) at the N = 360 reference
constexpr PresetDef preset_defs[] = {
    {"0.5", 0.5, 900, 7.0, 22},
    {"1", 1.0, 1100, 7.0, 28},
    {"2", 2.0, 1500, 7.0, 40},
};

const PresetDef& find_preset(const std::string& label) {
  for (const auto& p : preset_defs)
    if (label == p.label) return p;
  throw usage_error("unknown preset '" + label + "' (expected 0.5, 1 or 2)");
}

std::string preset_path(const std::string& dir, const std::string& label) {
  return dir + "/invkfa-" + label + ".spectrum";
}

coboson::SchmidtSpectrum load_preset(const std::string& dir,
                                     const std::string& label) {
  return coboson::read_spectrum_file(preset_path(dir, label));
}

// -------------------------------------------------------------------------
// spectrum subcommands
// -------------------------------------------------------------------------

int run_spectrum_solve(const std::string& out, const CommonOpts& common,
                       double inv_kfa, double a, std::size_t n_ref,
                       std::size_t grid_points, double x_max, int l_max,
                       double range_frac, std::size_t keep_min,
                       const std::string& preset_label) {
  coboson::PhysicalParams params;
  params.pair_count = n_ref;
  coboson::SolveOptions opts;
  if (!preset_label.empty()) {
    const PresetDef& def = find_preset(preset_label);
    inv_kfa = def.inv_kfa;
    opts.grid = coboson::GridSpec{def.grid_points, def.x_max};
    opts.l_max = def.l_max;
  } else {
    opts.grid = coboson::GridSpec{grid_points, x_max};
    opts.l_max = l_max;
  }
  if (a > 0.0)
    params.a = a;
  else
    params.a = 1.0 / (inv_kfa * params.fermi_wavenumber());
  opts.well_range_over_a = range_frac;
  opts.decompose.l_max = opts.l_max;
  opts.decompose.truncation.keep_min = keep_min;
  const auto sp = coboson::solve_physical_spectrum(params, opts);
  auto f = open_output(out, common.force);
  write_provenance(f, {spectrum_stamp(sp)});
  coboson::write_spectrum(f, sp);
  std::cout << "wrote " << out << " (S = " << sp.size() << ", shells = "
            << sp.shells().size() << ", lambda_1 = "
            << coboson::format_g17(sp.lambda(1)) << ")\n";
  return exit_ok;
}

int run_spectrum_synth(const std::string& out, const CommonOpts& common,
                       const std::string& kind, std::size_t size,
                       double ratio, const std::vector<double>& weights) {
  coboson::SchmidtSpectrum sp;
  if (kind == "flat")
    sp = coboson::SchmidtSpectrum::flat(size);
  else if (kind == "geometric")
    sp = coboson::SchmidtSpectrum::geometric(ratio, size);
  else if (kind == "custom") {
    if (weights.empty()) throw usage_error("custom spectra need --weights");
    sp = coboson::SchmidtSpectrum::custom(weights);
  } else {
    throw usage_error("unknown kind '" + kind + "'");
  }
  auto f = open_output(out, common.force);
  write_provenance(f, {spectrum_stamp(sp)});
  coboson::write_spectrum(f, sp);
  std::cout << "wrote " << out << " (S = " << sp.size() << ")\n";
  return exit_ok;
}

int run_spectrum_inspect(const std::string& in, const std::string& tabular,
                         const CommonOpts& common) {
  const auto sp = coboson::read_spectrum_file(in);
  std::cout << "file        = " << in << "\n"
            << "provenance  = " << sp.provenance() << "\n"
            << "S           = " << sp.size() << "\n"
            << "shells      = " << sp.shells().size() << "\n"
            << "sum_lambda  = " << coboson::format_g17(sp.sum()) << "\n"
            << "lambda_1    = " << coboson::format_g17(sp.lambda(1)) << "\n"
            << "fingerprint = " << coboson::hex64(sp.fingerprint()) << "\n"
            << "discarded   = "
            << coboson::format_g17(sp.truncation().discarded_weight) << "\n";
  if (!tabular.empty()) {
    auto f = open_output(tabular, common.force);
    write_provenance(f, {spectrum_stamp(sp)});
    coboson::write_spectrum_tabular(f, sp);
    std::cout << "wrote " << tabular << "\n";
  }
  return exit_ok;
}

// -------------------------------------------------------------------------
// chi
// -------------------------------------------------------------------------

int run_chi(const std::string& in, std::size_t K, const std::string& method,
            const std::string& export_path, std::size_t ratio_n,
            const CommonOpts& common) {
  const auto sp = coboson::read_spectrum_file(in);
  coboson::ChiTable table;
  if (method == "newton")
    table = coboson::chi_newton(sp, K, chi_options(common));
  else if (method == "dp")
    table = coboson::chi_table(sp, K, chi_options(common));
  else
    throw usage_error("unknown method '" + method + "' (dp | newton)");
  if (table.degraded())
    std::cerr << "note: power-sum route hit its cancellation guard; "
                 "table rebuilt on the dp path\n";
  std::cout << "fingerprint = " << coboson::hex64(table.fingerprint())
            << ", method = " << coboson::chi_method_name(table.method())
            << "\n";
  std::cout << "log_e_K     = " << coboson::format_g17(table.log_e(K)) << "\n";
  std::cout << "log_chi_K   = " << coboson::format_g17(table.log_chi(K))
            << "\n";
  if (ratio_n > 0) {
    if (ratio_n + 1 > K)
      throw coboson::numeric_range_error("--ratio N needs K >= N + 1");
    const coboson::EnsembleSpec ens(sp, table, ratio_n);
    std::cout << "chi_ratio(" << ratio_n << ") = "
              << coboson::format_g17(coboson::normalization_ratio(ens))
              << "\n";
  }
  if (!export_path.empty()) {
    auto f = open_output(export_path, common.force);
    write_provenance(f, {spectrum_stamp(sp)});
    coboson::write_chi(f, table);
    std::cout << "wrote " << export_path << "\n";
  }
  return exit_ok;
}

int run_chi_universality(const std::string& in_a, const std::string& in_b,
                         std::size_t n_a, std::size_t n_b) {
  if (n_a == 0 || n_b == 0)
    throw usage_error("--universality needs --n-a and --n-b");
  const auto sp_a = coboson::read_spectrum_file(in_a);
  const auto sp_b = coboson::read_spectrum_file(in_b);
  const auto ta = coboson::chi_table(sp_a, n_a + 1);
  const auto tb = coboson::chi_table(sp_b, n_b + 1);
  const coboson::EnsembleSpec ea(sp_a, ta, n_a);
  const coboson::EnsembleSpec eb(sp_b, tb, n_b);
  const double ra = coboson::normalization_ratio(ea);
  const double rb = coboson::normalization_ratio(eb);
  std::cout << "ratio_a = " << coboson::format_g17(ra) << " (N = " << n_a
            << ")\n";
  std::cout << "ratio_b = " << coboson::format_g17(rb) << " (N = " << n_b
            << ")\n";
  std::cout << "relative_deviation = "
            << coboson::format_g17(coboson::universality_deviation(ea, eb))
            << "\n";
  return exit_ok;
}

// -------------------------------------------------------------------------
// density / counts / purity / bell
// -------------------------------------------------------------------------

int run_density(const std::string& in, std::size_t N, std::size_t j_max,
                bool per_shell, const std::string& out,
                const CommonOpts& common) {
  const auto sp = coboson::read_spectrum_file(in);
  const auto table = coboson::chi_table(sp, N, chi_options(common));
  const coboson::EnsembleSpec ens(sp, table, N);
  auto f = open_output(out, common.force);
  write_provenance(f, {spectrum_stamp(sp), "N = " + std::to_string(N)});
  if (per_shell) {
    const auto dens = coboson::spectral_density(ens, chi_options(common));
    f << "n,l,g,lambda,energy,n_spect\n";
    for (const auto& d : dens)
      f << d.n << ',' << d.l << ',' << d.g << ','
        << coboson::format_g17(d.lambda) << ','
        << coboson::format_g17(d.energy) << ','
        << coboson::format_g17(d.value) << "\n";
  } else {
    if (j_max == 0) j_max = sp.size();
    const auto d = coboson::occupations(ens, j_max, chi_options(common));
    f << "j,lambda,D_j,N_Dj\n";
    for (std::size_t j = 1; j <= j_max; ++j)
      f << j << ',' << coboson::format_g17(sp.lambda(j)) << ','
        << coboson::format_g17(d[j - 1]) << ','
        << coboson::format_g17(static_cast<double>(N) * d[j - 1]) << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return exit_ok;
}

int run_counts(const std::string& in, std::size_t N, std::size_t t,
               long m_flag, const std::string& out,
               const std::string& report_path, const std::string& joint_path,
               const CommonOpts& common) {
  const auto sp = coboson::read_spectrum_file(in);
  const auto table = coboson::chi_table(sp, N, chi_options(common));
  const coboson::EnsembleSpec ens(sp, table, N);
  const auto w = coboson::make_count_window(sp, t, N);
  const std::vector<std::string> stamp = {spectrum_stamp(sp),
                                          "N = " + std::to_string(N),
                                          "t = " + std::to_string(t)};
  if (m_flag < 0) {
    const auto p = coboson::count_distribution(ens, w);
    auto f = open_output(out, common.force);
    write_provenance(f, stamp);
    f << "n,P_n\n";
    for (std::size_t n = 0; n < p.size(); ++n)
      f << n << ',' << coboson::format_g17(p[n]) << "\n";
  } else {
    const auto M = static_cast<std::size_t>(m_flag);
    const auto p1 = coboson::marginal_count(ens, M, w);
    auto f = open_output(out, common.force);
    write_provenance(f, stamp);
    f << "n1,P1\n";
    for (std::size_t n = 0; n < p1.size(); ++n)
      f << n << ',' << coboson::format_g17(p1[n]) << "\n";
    if (!joint_path.empty()) {
      const auto jc = coboson::joint_count_distribution(ens, M, w);
      auto jf = open_output(joint_path, common.force);
      write_provenance(jf, stamp);
      jf << "n1,n2,P\n";
      for (std::size_t n1 = 0; n1 <= jc.n1_max; ++n1)
        for (std::size_t n2 = 0; n2 <= jc.n2_max; ++n2)
          jf << n1 << ',' << n2 << ','
             << coboson::format_g17(jc.at(n1, n2)) << "\n";
      std::cout << "wrote " << joint_path << "\n";
    }
  }
  if (!report_path.empty()) {
    const auto rep = coboson::window_report(ens, w);
    auto rf = open_output(report_path, common.force);
    write_provenance(rf, stamp);
    rf << "t,mean,variance,poisson_var,binomial_var\n";
    rf << rep.t << ',' << coboson::format_g17(rep.mean) << ','
       << coboson::format_g17(rep.variance) << ','
       << coboson::format_g17(rep.poisson_var) << ','
       << coboson::format_g17(rep.binomial_var) << "\n";
    std::cout << "wrote " << report_path << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return exit_ok;
}

int run_purity(const std::string& in, std::size_t N, long m_flag,
               bool sweep_m, std::size_t m_step, const std::string& out,
               const CommonOpts& common) {
  const auto sp = coboson::read_spectrum_file(in);
  const auto table = coboson::chi_table(sp, 2 * N, chi_options(common));
  const coboson::EnsembleSpec ens(sp, table, N);
  std::vector<std::size_t> ms;
  if (sweep_m) {
    for (std::size_t M = 0; M <= N; M += std::max<std::size_t>(1, m_step))
      ms.push_back(M);
    if (ms.back() != N) ms.push_back(N);
  } else {
    ms.push_back(m_flag < 0 ? N / 2 : static_cast<std::size_t>(m_flag));
  }
  std::vector<double> values(ms.size());
  parallel_for(ms.size(), common.threads,
               [&](std::size_t i) { values[i] = coboson::purity(ens, ms[i]); });
  auto emit = [&](std::ostream& os) {
    os << "M,purity,lower_bound\n";
    for (std::size_t i = 0; i < ms.size(); ++i)
      os << ms[i] << ',' << coboson::format_g17(values[i]) << ','
         << coboson::format_g17(coboson::purity_lower_bound(N, ms[i]))
         << "\n";
  };
  if (out.empty()) {
    emit(std::cout);
  } else {
    auto f = open_output(out, common.force);
    write_provenance(f, {spectrum_stamp(sp), "N = " + std::to_string(N)});
    emit(f);
    std::cout << "wrote " << out << "\n";
  }
  return exit_ok;
}

/// D_j over a logarithmic N grid from one full table plus one
/// leave-one-out table; shared by the bell sweep and two figures.
struct OccupationSweep {
  coboson::ChiTable table, loo;
  double log_lam = 0;

  OccupationSweep(const coboson::SchmidtSpectrum& sp, std::size_t j,
                  std::size_t n_max, const coboson::ChiOptions& opt)
      : table(coboson::chi_table(sp, n_max, opt)),
        loo(coboson::chi_leave_one_out(table, sp, j, n_max - 1, opt)),
        log_lam(std::log(sp.lambda(j))) {}

  double occupation(std::size_t n) const {
    return std::exp(log_lam + loo.log_e(n - 1) -
                    std::log(static_cast<double>(n)) - table.log_e(n));
  }
};

std::vector<std::size_t> log_grid(std::size_t from, std::size_t to,
                                  std::size_t steps) {
  std::vector<std::size_t> ns;
  const double lf = std::log(static_cast<double>(from));
  const double lt = std::log(static_cast<double>(to));
  for (std::size_t s = 0; s < steps; ++s) {
    const double f =
        steps == 1 ? 0.0
                   : static_cast<double>(s) / static_cast<double>(steps - 1);
    const auto n =
        static_cast<std::size_t>(std::llround(std::exp(lf + f * (lt - lf))));
    if (ns.empty() || n > ns.back()) ns.push_back(n);
  }
  return ns;
}

int run_bell(const std::string& in, std::size_t j, std::size_t N, long m_flag,
             std::size_t n_from, std::size_t n_to, std::size_t log_steps,
             bool emit_bounds, const std::string& out,
             const CommonOpts& common) {
  const auto sp = coboson::read_spectrum_file(in);
  const bool sweep = n_from > 0;

  if (!sweep) {
    const std::size_t M =
        m_flag < 0 ? N / 2 : static_cast<std::size_t>(m_flag);
    const auto table = coboson::chi_table(sp, N, chi_options(common));
    const coboson::EnsembleSpec ens(sp, table, N);
    const double D = coboson::occupation(ens, j, chi_options(common));
    const auto c = coboson::chsh_correlators(coboson::BellSetting{j, N, M, D});
    std::cout << "j = " << j << ", N = " << N << ", M = " << M
              << ", D_j = " << coboson::format_g17(D)
              << ", N*D_j = " << coboson::format_g17(N * D) << "\n";
    std::cout << "QS = " << coboson::format_g17(c.qs) << "\n"
              << "RS = " << coboson::format_g17(c.rs) << "\n"
              << "RT = " << coboson::format_g17(c.rt) << "\n"
              << "QT = " << coboson::format_g17(c.qt) << "\n"
              << "M_chsh = " << coboson::format_g17(c.m) << "\n";
    return exit_ok;
  }

  if (out.empty()) throw usage_error("bell sweep needs -o");
  if (n_to < n_from)
    throw coboson::numeric_range_error("bell sweep: need --n-to >= --n-from");
  if (n_to > sp.size())
    throw coboson::numeric_range_error(
        "bell sweep: N beyond the spectrum rank S = " +
        std::to_string(sp.size()) + " vanishes; lower --n-to");
  const auto ns = log_grid(n_from, n_to, log_steps);
  const OccupationSweep sweep_ctx(sp, j, ns.back(), chi_options(common));

  auto f = open_output(out, common.force);
  write_provenance(f, {spectrum_stamp(sp), "j = " + std::to_string(j)});
  f << "j,N,M,NDj,chsh\n";
  if (emit_bounds)
    f << "# classical bound = 2, tsirelson bound = "
      << coboson::format_g17(coboson::chsh_tsirelson_bound) << "\n";
  for (const std::size_t n : ns) {
    const std::size_t M =
        m_flag < 0 ? n / 2 : std::min<std::size_t>(m_flag, n);
    const double D = sweep_ctx.occupation(n);
    f << j << ',' << n << ',' << M << ','
      << coboson::format_g17(n * D) << ','
      << coboson::format_g17(
             coboson::chsh_value(n, M, std::min(D, 1.0 / n)))
      << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return exit_ok;
}

int run_bell_fluct(double n1, double dn1, double n2, double dn2, double d,
                   double dd) {
  coboson::FluctuatingEnsemble fe{n1, dn1, n2, dn2, d, dd};
  const auto out = coboson::chsh_fluctuating(fe);
  auto line = [](const char* name, double v, double s) {
    std::cout << name << " = " << coboson::format_g17(v) << " +- "
              << coboson::format_g17(s) << "\n";
  };
  line("QS", out.value.qs, out.sigma.qs);
  line("RS", out.value.rs, out.sigma.rs);
  line("RT", out.value.rt, out.sigma.rt);
  line("QT", out.value.qt, out.sigma.qt);
  line("M_chsh", out.value.m, out.sigma.m);
  return exit_ok;
}

// -------------------------------------------------------------------------
// figures
// -------------------------------------------------------------------------

int run_figure(const std::string& which, const std::string& presets_dir,
               const std::string& prefix, std::size_t N, std::size_t t,
               std::size_t j, const CommonOpts& common) {
  const std::vector<std::string> labels = {"0.5", "1", "2"};
  auto out_path = [&](const std::string& tag) {
    return prefix + "_" + tag + ".csv";
  };

  if (which == "fig1a") {
    auto f = open_output(out_path("fig1a"), common.force);
    write_provenance(f, {"purity of one balanced split ensemble per preset",
                         "N = " + std::to_string(N)});
    f << "invkfa,N,purity\n";
    for (const auto& label : labels) {
      const auto sp = load_preset(presets_dir, label);
      const auto table = coboson::chi_table(sp, 2 * N, chi_options(common));
      const coboson::EnsembleSpec ens(sp, table, N);
      f << label << ',' << N << ','
        << coboson::format_g17(coboson::purity(ens, N / 2)) << "\n";
    }
    std::cout << "wrote " << out_path("fig1a") << "\n";
    return exit_ok;
  }
  if (which == "fig1b") {
    const auto sp = load_preset(presets_dir, "0.5");
    const auto table = coboson::chi_table(sp, 2 * N, chi_options(common));
    const coboson::EnsembleSpec ens(sp, table, N);
    std::vector<std::size_t> ms;
    const std::size_t step = std::max<std::size_t>(1, N / 60);
    for (std::size_t M = 0; M <= N; M += step) ms.push_back(M);
    if (ms.back() != N) ms.push_back(N);
    std::vector<double> values(ms.size());
    parallel_for(ms.size(), common.threads, [&](std::size_t i) {
      values[i] = coboson::purity(ens, ms[i]);
    });
    auto f = open_output(out_path("fig1b"), common.force);
    write_provenance(f, {spectrum_stamp(sp), "N = " + std::to_string(N),
                         "population imbalance = 1 - 2M/N"});
    f << "M,purity,lower_bound\n";
    for (std::size_t i = 0; i < ms.size(); ++i)
      f << ms[i] << ',' << coboson::format_g17(values[i]) << ','
        << coboson::format_g17(coboson::purity_lower_bound(N, ms[i]))
        << "\n";
    std::cout << "wrote " << out_path("fig1b") << "\n";
    return exit_ok;
  }
  if (which == "fig1c") {
    for (const auto& label : labels) {
      const auto sp = load_preset(presets_dir, label);
      auto f = open_output(out_path("fig1c_invkfa" + label), common.force);
      write_provenance(f, {spectrum_stamp(sp)});
      coboson::write_spectrum_tabular(f, sp);
      std::cout << "wrote " << out_path("fig1c_invkfa" + label) << "\n";
    }
    return exit_ok;
  }
  if (which == "fig2") {
    for (const auto& label : labels) {
      const auto sp = load_preset(presets_dir, label);
      const auto table = coboson::chi_table(sp, N, chi_options(common));
      const coboson::EnsembleSpec ens(sp, table, N);
      auto fa = open_output(out_path("fig2a_invkfa" + label), common.force);
      write_provenance(fa, {spectrum_stamp(sp), "N = " + std::to_string(N)});
      fa << "t,mean,variance,poisson_var,binomial_var\n";
      const std::size_t t_hi = std::min<std::size_t>(2 * t, sp.size());
      std::vector<coboson::WindowReport> reps(t_hi);
      parallel_for(t_hi, common.threads, [&](std::size_t i) {
        reps[i] = coboson::window_report(
            ens, coboson::make_count_window(sp, i + 1, N));
      });
      for (const auto& rep : reps)
        fa << rep.t << ',' << coboson::format_g17(rep.mean) << ','
           << coboson::format_g17(rep.variance) << ','
           << coboson::format_g17(rep.poisson_var) << ','
           << coboson::format_g17(rep.binomial_var) << "\n";
      const auto w = coboson::make_count_window(sp, t, N);
      const auto p = coboson::count_distribution(ens, w);
      auto fb = open_output(out_path("fig2b_invkfa" + label), common.force);
      write_provenance(fb, {spectrum_stamp(sp), "N = " + std::to_string(N),
                            "t = " + std::to_string(t)});
      fb << "n,P_n\n";
      for (std::size_t n = 0; n < p.size(); ++n)
        fb << n << ',' << coboson::format_g17(p[n]) << "\n";
      std::cout << "wrote " << out_path("fig2a_invkfa" + label) << " and "
                << out_path("fig2b_invkfa" + label) << "\n";
    }
    return exit_ok;
  }
  if (which == "fig3") {
    for (const auto& label : labels) {
      const auto sp = load_preset(presets_dir, label);
      const auto table = coboson::chi_table(sp, N, chi_options(common));
      const coboson::EnsembleSpec ens(sp, table, N);
      const auto w = coboson::make_count_window(sp, t, N);
      const auto p1 = coboson::marginal_count(ens, N / 2, w);
      auto f = open_output(out_path("fig3_invkfa" + label), common.force);
      write_provenance(f, {spectrum_stamp(sp), "N = " + std::to_string(N),
                           "M = " + std::to_string(N / 2),
                           "t = " + std::to_string(t)});
      f << "n1,P1\n";
      for (std::size_t n = 0; n < p1.size() && n <= t; ++n)
        f << n << ',' << coboson::format_g17(p1[n]) << "\n";
      std::cout << "wrote " << out_path("fig3_invkfa" + label) << "\n";
    }
    return exit_ok;
  }
  if (which == "fig4") {
    const auto sp = load_preset(presets_dir, "0.5");
    const std::size_t n_to = std::min<std::size_t>(N, sp.size());
    const OccupationSweep sweep_ctx(sp, j, n_to, chi_options(common));
    auto f = open_output(out_path("fig4"), common.force);
    write_provenance(f, {spectrum_stamp(sp), "j = " + std::to_string(j),
                         "balanced M = N/2"});
    f << "j,N,M,NDj,chsh\n";
    f << "# classical bound = 2, tsirelson bound = "
      << coboson::format_g17(coboson::chsh_tsirelson_bound) << "\n";
    for (const std::size_t n : log_grid(10, n_to, 60)) {
      const double D = sweep_ctx.occupation(n);
      f << j << ',' << n << ',' << n / 2 << ','
        << coboson::format_g17(n * D) << ','
        << coboson::format_g17(
               coboson::chsh_value(n, n / 2, std::min(D, 1.0 / n)))
        << "\n";
    }
    std::cout << "wrote " << out_path("fig4") << "\n";
    return exit_ok;
  }
  if (which == "fig5") {
    const auto sp = load_preset(presets_dir, "0.5");
    const std::size_t n_to = std::min<std::size_t>(N, sp.size());
    const OccupationSweep sweep_ctx(sp, 1, n_to, chi_options(common));
    const double lam1 = sp.lambda(1);
    auto f = open_output(out_path("fig5"), common.force);
    write_provenance(f, {spectrum_stamp(sp),
                         "occupation of the lowest state vs its estimate"});
    f << "N,D1,D1_approx,rel_dev\n";
    for (const std::size_t n : log_grid(2, n_to, 40)) {
      const double d_exact = sweep_ctx.occupation(n);
      const double d_approx = coboson::occupation_approx(lam1, n);
      f << n << ',' << coboson::format_g17(d_exact) << ','
        << coboson::format_g17(d_approx) << ','
        << coboson::format_g17(std::fabs(d_exact - d_approx) /
                               std::max(d_exact, 1e-300))
        << "\n";
    }
    std::cout << "wrote " << out_path("fig5") << "\n";
    return exit_ok;
  }
  throw usage_error("unknown figure '" + which + "'");
}

int run_verify(std::size_t trials, std::uint64_t seed, std::size_t max_s) {
  coboson::verify::SweepConfig cfg;
  cfg.trials = trials;
  cfg.seed = seed;
  if (max_s > 0) {
    cfg.ranks.clear();
    for (std::size_t s = 2; s <= max_s; ++s) cfg.ranks.push_back(s);
  }
  const auto results = coboson::verify::run_all(cfg);
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  ("
              << r.detail << ")\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? exit_ok : 1;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) {
    if (i) g_command_line += ' ';
    g_command_line += argv[i];
  }

  CLI::App app{"coboson: entanglement and counting statistics of "
               "paired-fermion ensembles"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_flag("--force", common.force, "allow overwriting output files");
  app.add_option("--threads", common.threads,
                 "worker threads for sweeps (or COBOSON_THREADS)");

  // ---- spectrum ----
  auto* spectrum =
      app.add_subcommand("spectrum", "produce or inspect spectra");
  spectrum->require_subcommand(1);

  auto* solve = spectrum->add_subcommand("solve", "solve the two-body model");
  std::string out, preset_label;
  double inv_kfa = 1.0, a_direct = 0.0, x_max = 7.0, range_frac = 0.5;
  std::size_t n_ref = 360, grid_points = 900, keep_min = 4000;
  int l_max = 24;
  solve->add_option("-o,--output", out, "spectrum file")->required();
  solve->add_option("--preset", preset_label,
                    "bundled configuration: 0.5, 1 or 2");
  solve->add_option("--invkfa", inv_kfa, "(k_F a)^(-1) at the reference N");
  solve->add_option("--a", a_direct,
                    "scattering length over L (overrides --invkfa)");
  solve->add_option("--n-ref", n_ref, "reference pair count for k_F");
  solve->add_option("--grid-points", grid_points, "radial grid points");
  solve->add_option("--x-max", x_max, "hard wall radius (units of L)");
  solve->add_option("--l-max", l_max, "largest angular momentum channel");
  solve->add_option("--well-range-frac", range_frac,
                    "well range as a fraction of a");
  solve->add_option("--keep-min", keep_min,
                    "keep at least this many flattened coefficients");

  auto* synth = spectrum->add_subcommand("synth", "synthetic spectra");
  std::string kind = "geometric";
  std::size_t size = 100;
  double ratio = 0.9;
  std::vector<double> weights;
  std::string synth_out;
  synth->add_option("--kind", kind, "flat | geometric | custom");
  synth->add_option("--size", size, "number of coefficients");
  synth->add_option("--ratio", ratio, "geometric ratio in (0,1)");
  synth->add_option("--weights", weights, "custom weights")->delimiter(',');
  synth->add_option("-o,--output", synth_out, "spectrum file")->required();

  auto* inspect = spectrum->add_subcommand("inspect", "summarize a spectrum");
  std::string inspect_in, inspect_tab;
  inspect->add_option("--spectrum", inspect_in, "spectrum file")->required();
  inspect->add_option("--tabular", inspect_tab, "write the per-shell table");

  // ---- chi ----
  auto* chi = app.add_subcommand("chi", "symmetric-polynomial tables");
  std::string chi_in, chi_method = "dp", chi_export, chi_other;
  std::size_t chi_k = 0, chi_ratio_n = 0, chi_na = 0, chi_nb = 0;
  chi->add_option("--spectrum", chi_in, "spectrum file")->required();
  chi->add_option("--k", chi_k, "table order")->required();
  chi->add_option("--method", chi_method, "dp | newton");
  chi->add_option("--export", chi_export, "write k,log_e_k,method table");
  chi->add_option("--ratio", chi_ratio_n,
                  "print the normalization ratio at this N");
  chi->add_option("--universality", chi_other,
                  "second spectrum for the universality diagnostic");
  chi->add_option("--n-a", chi_na, "pair count for the first spectrum");
  chi->add_option("--n-b", chi_nb, "pair count for the second spectrum");

  // ---- density ----
  auto* density =
      app.add_subcommand("density", "occupations / spectral density");
  std::string den_in, den_out;
  std::size_t den_n = 1, den_jmax = 0;
  bool den_shell = false;
  density->add_option("--spectrum", den_in)->required();
  density->add_option("--n", den_n, "pair count")->required();
  density->add_option("--j-max", den_jmax, "limit per-state rows");
  density->add_flag("--per-shell", den_shell, "one row per (n,l) shell");
  density->add_option("-o,--output", den_out)->required();

  // ---- counts ----
  auto* counts = app.add_subcommand("counts", "window counting statistics");
  std::string cnt_in, cnt_out, cnt_report, cnt_joint;
  std::size_t cnt_n = 1, cnt_t = 1;
  long cnt_m = -1;
  counts->add_option("--spectrum", cnt_in)->required();
  counts->add_option("--n", cnt_n, "pair count")->required();
  counts->add_option("--t", cnt_t, "window size")->required();
  counts->add_option("--m", cnt_m,
                     "splitting: pairs in mode 1 (emits the marginal)");
  counts->add_option("--report", cnt_report, "write the window report");
  counts->add_option("--joint", cnt_joint, "write the joint table");
  counts->add_option("-o,--output", cnt_out)->required();

  // ---- purity ----
  auto* purity_cmd = app.add_subcommand("purity", "split-ensemble purity");
  std::string pur_in, pur_out;
  std::size_t pur_n = 2, pur_step = 1;
  long pur_m = -1;
  bool pur_sweep = false;
  purity_cmd->add_option("--spectrum", pur_in)->required();
  purity_cmd->add_option("--n", pur_n, "pair count")->required();
  purity_cmd->add_option("--m", pur_m, "pairs in mode 1 (default N/2)");
  purity_cmd->add_flag("--sweep-m", pur_sweep, "sweep M = 0..N");
  purity_cmd->add_option("--m-step", pur_step, "sweep stride");
  purity_cmd->add_option("-o,--output", pur_out);

  // ---- bell ----
  auto* bell = app.add_subcommand("bell", "CHSH correlators");
  std::string bell_in, bell_out;
  std::size_t bell_j = 1, bell_n = 2, bell_from = 0, bell_to = 0,
              bell_steps = 60;
  long bell_m = -1;
  bool bell_bounds = false, bell_fluct = false;
  double fl_n1 = 0, fl_dn1 = 0, fl_n2 = 0, fl_dn2 = 0, fl_d = 0, fl_dd = 0;
  bell->add_option("--spectrum", bell_in);
  bell->add_option("--j", bell_j, "target state index");
  bell->add_option("--n", bell_n, "pair count (single evaluation)");
  bell->add_option("--m", bell_m, "pairs in mode 1 (default N/2)");
  bell->add_option("--n-from", bell_from, "sweep start");
  bell->add_option("--n-to", bell_to, "sweep end");
  bell->add_option("--log-steps", bell_steps, "points in the log sweep");
  bell->add_flag("--emit-bounds", bell_bounds,
                 "include the classical and quantum bounds");
  bell->add_option("-o,--output", bell_out);
  bell->add_flag("--fluct", bell_fluct,
                 "mean-value evaluation with uncertainties");
  bell->add_option("--nbar1", fl_n1, "mean pairs in mode 1");
  bell->add_option("--dnbar1", fl_dn1, "uncertainty of nbar1");
  bell->add_option("--nbar2", fl_n2, "mean pairs in mode 2");
  bell->add_option("--dnbar2", fl_dn2, "uncertainty of nbar2");
  bell->add_option("--dbar", fl_d, "mean occupation factor");
  bell->add_option("--ddbar", fl_dd, "uncertainty of dbar");

  // ---- figures ----
  auto* figures = app.add_subcommand(
      "figures", "figure-data pipelines over the bundled presets");
  std::string fig_which, fig_dir = "data/presets", fig_prefix = "figure";
  std::size_t fig_n = 0, fig_t = 56, fig_j = 1;
  figures->add_option("which", fig_which,
                      "fig1a|fig1b|fig1c|fig2|fig3|fig4|fig5")
      ->required();
  figures->add_option("--presets-dir", fig_dir, "preset spectrum directory");
  figures->add_option("-o,--prefix", fig_prefix, "output file prefix");
  figures->add_option("--n", fig_n, "pair count (defaults per figure)");
  figures->add_option("--t", fig_t, "window size");
  figures->add_option("--j", fig_j, "target state index");

  // ---- verify ----
  auto* verify_cmd =
      app.add_subcommand("verify", "run the oracle-equivalence suite");
  std::size_t ver_trials = 100, ver_max_s = 0;
  std::uint64_t ver_seed = 20250817;
  verify_cmd->add_option("--trials", ver_trials, "spectra per configuration");
  verify_cmd->add_option("--seed", ver_seed, "sweep seed");
  verify_cmd->add_option("--max-s", ver_max_s,
                         "sweep ranks 2..max-s (the oracle refuses past its "
                         "cap)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help path
    app.exit(e);
    return exit_usage;
  }

  try {
    if (solve->parsed())
      return run_spectrum_solve(out, common, inv_kfa, a_direct, n_ref,
                                grid_points, x_max, l_max, range_frac,
                                keep_min, preset_label);
    if (synth->parsed())
      return run_spectrum_synth(synth_out, common, kind, size, ratio,
                                weights);
    if (inspect->parsed())
      return run_spectrum_inspect(inspect_in, inspect_tab, common);
    if (chi->parsed()) {
      if (!chi_other.empty())
        return run_chi_universality(chi_in, chi_other, chi_na, chi_nb);
      return run_chi(chi_in, chi_k, chi_method, chi_export, chi_ratio_n,
                     common);
    }
    if (density->parsed())
      return run_density(den_in, den_n, den_jmax, den_shell, den_out, common);
    if (counts->parsed())
      return run_counts(cnt_in, cnt_n, cnt_t, cnt_m, cnt_out, cnt_report,
                        cnt_joint, common);
    if (purity_cmd->parsed())
      return run_purity(pur_in, pur_n, pur_m, pur_sweep, pur_step, pur_out,
                        common);
    if (bell->parsed()) {
      if (bell_fluct)
        return run_bell_fluct(fl_n1, fl_dn1, fl_n2, fl_dn2, fl_d, fl_dd);
      if (bell_in.empty())
        throw usage_error("bell needs --spectrum (or --fluct inputs)");
      return run_bell(bell_in, bell_j, bell_n, bell_m, bell_from, bell_to,
                      bell_steps, bell_bounds, bell_out, common);
    }
    if (figures->parsed()) {
      std::size_t n_default = fig_n;
      if (n_default == 0)
        n_default = (fig_which == "fig1a" || fig_which == "fig1b") ? 360
                    : (fig_which == "fig4" || fig_which == "fig5")
                        ? 3000
                        : 1000;
      return run_figure(fig_which, fig_dir, fig_prefix, n_default, fig_t,
                        fig_j, common);
    }
    if (verify_cmd->parsed())
      return run_verify(ver_trials, ver_seed, ver_max_s);
    throw usage_error("no subcommand given");
  } catch (const coboson::cap_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_cap;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const coboson::numeric_range_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_range;
  } catch (const coboson::instability_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_range;
  } catch (const coboson::format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_range;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
