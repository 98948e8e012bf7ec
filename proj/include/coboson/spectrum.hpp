/// Schmidt spectra: the distribution of pair-state coefficients that every
/// other module consumes. A spectrum is a sequence of (n,l) shells, each
/// carrying one coefficient replicated over the 2l+1 magnetic substates,
/// flattened into a single energy-ordered index.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "coboson/common.hpp"

namespace coboson {

struct Shell {
  int n = 0;           // radial index within the l channel (1-based)
  int l = 0;           // angular momentum, degeneracy 2l+1
  double lambda = 0;   // coefficient shared by all 2l+1 substates
  double energy = 0;   // single-particle energy used for ordering
  int degeneracy() const { return 2 * l + 1; }
};

struct TruncationRecord {
  double discarded_weight = 0.0;  // weight dropped before renormalization
  double renorm_factor = 1.0;     // kept coefficients were divided by this
  std::size_t shells_dropped = 0;
};

struct TruncationOptions {
  double cumulative_target = 1.0 - 1e-10;  // keep shells until this weight
  std::size_t keep_min = 0;                // lower bound on flattened size
  double tail_floor = 0.0;                 // drop lambda below floor*max
};

class SchmidtSpectrum {
 public:
  SchmidtSpectrum() = default;

  /// Shells are reordered by (energy, l, n), degeneracy-expanded, truncated
  /// per `opts`, then renormalized so the flattened coefficients sum to 1.
  static SchmidtSpectrum from_shells(std::vector<Shell> shells,
                                     std::string provenance,
                                     const TruncationOptions& opts = {}) {
    if (shells.empty())
      throw numeric_range_error("spectrum: no shells given");
    std::sort(shells.begin(), shells.end(), [](const Shell& a, const Shell& b) {
      if (a.energy != b.energy) return a.energy < b.energy;
      if (a.l != b.l) return a.l < b.l;
      return a.n < b.n;
    });
    for (const Shell& s : shells)
      if (!(s.lambda > 0.0))
        throw numeric_range_error("spectrum: coefficients must be positive");

    NeumaierSum total;
    for (const Shell& s : shells) total.add(s.lambda * s.degeneracy());
    const double tot = total.total();
    if (!(tot > 0.0))
      throw numeric_range_error("spectrum: non-normalizable (zero weight)");

    const double lam_max = std::max_element(
        shells.begin(), shells.end(),
        [](const Shell& a, const Shell& b) { return a.lambda < b.lambda; })
        ->lambda;

    // shell-atomic truncation (skipped entirely at target >= 1)
    std::size_t keep = shells.size();
    if (opts.cumulative_target < 1.0 || opts.tail_floor > 0.0) {
      NeumaierSum cum;
      std::size_t flat = 0;
      const double target = opts.cumulative_target * tot;
      for (std::size_t i = 0; i < shells.size(); ++i) {
        const bool enough_count = flat >= opts.keep_min;
        if (i > 0 && enough_count &&
            shells[i].lambda < opts.tail_floor * lam_max) {
          keep = i;
          break;
        }
        cum.add(shells[i].lambda * shells[i].degeneracy());
        flat += shells[i].degeneracy();
        if (cum.total() >= target && flat >= opts.keep_min) {
          keep = i + 1;
          break;
        }
      }
    }

    SchmidtSpectrum out;
    out.provenance_ = std::move(provenance);
    out.truncation_.shells_dropped = shells.size() - keep;
    shells.resize(keep);

    NeumaierSum kept;
    for (const Shell& s : shells) kept.add(s.lambda * s.degeneracy());
    out.truncation_.discarded_weight = (tot - kept.total()) / tot;
    out.truncation_.renorm_factor = kept.total();
    for (Shell& s : shells) s.lambda /= kept.total();

    out.shells_ = std::move(shells);
    out.expand();
    return out;
  }

  /// lambda_j = 1/S.
  static SchmidtSpectrum flat(std::size_t size) {
    require_size(size);
    std::vector<Shell> sh(size);
    for (std::size_t j = 0; j < size; ++j)
      sh[j] = Shell{static_cast<int>(j + 1), 0, 1.0 / size,
                    static_cast<double>(j + 1)};
    return from_shells(std::move(sh), "synthetic flat", no_truncation());
  }

  /// lambda_j = q^(j-1) (1-q) / (1-q^S).
  static SchmidtSpectrum geometric(double ratio, std::size_t size) {
    require_size(size);
    if (!(ratio > 0.0 && ratio < 1.0))
      throw numeric_range_error("geometric spectrum: ratio must be in (0,1)");
    const double log_q = std::log(ratio);
    const double log_norm =
        std::log1p(-ratio) - std::log1p(-std::exp(size * log_q));
    std::vector<Shell> sh(size);
    for (std::size_t j = 0; j < size; ++j) {
      const double lam = std::exp(static_cast<double>(j) * log_q + log_norm);
      sh[j] = Shell{static_cast<int>(j + 1), 0,
                    lam > 0 ? lam : std::numeric_limits<double>::min(),
                    static_cast<double>(j + 1)};
    }
    return from_shells(std::move(sh), "synthetic geometric", no_truncation());
  }

  /// Arbitrary nonnegative weights, normalized; zero entries rejected.
  static SchmidtSpectrum custom(std::span<const double> weights) {
    require_size(weights.size());
    NeumaierSum total;
    for (double w : weights) {
      if (w < 0.0)
        throw numeric_range_error("custom spectrum: negative weight");
      total.add(w);
    }
    if (!(total.total() > 0.0))
      throw numeric_range_error("custom spectrum: all weights zero");
    std::vector<Shell> sh;
    sh.reserve(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] == 0.0)
        throw numeric_range_error("custom spectrum: zero weight entry");
      sh.push_back(Shell{static_cast<int>(j + 1), 0,
                         weights[j] / total.total(),
                         static_cast<double>(j + 1)});
    }
    return from_shells(std::move(sh), "synthetic custom", no_truncation());
  }

  std::size_t size() const { return lam_.size(); }
  std::span<const double> lambdas() const { return lam_; }
  const std::vector<Shell>& shells() const { return shells_; }
  const TruncationRecord& truncation() const { return truncation_; }
  const std::string& provenance() const { return provenance_; }

  /// Flattened coefficient, j is 1-based.
  double lambda(std::size_t j) const {
    if (j < 1 || j > lam_.size())
      throw numeric_range_error("lambda index out of range");
    return lam_[j - 1];
  }
  /// Shell owning flattened index j (1-based j).
  const Shell& shell_of(std::size_t j) const {
    if (j < 1 || j > lam_.size())
      throw numeric_range_error("lambda index out of range");
    return shells_[shell_of_[j - 1]];
  }
  /// Magnetic substate of flattened index j, in -l..l.
  int m_of(std::size_t j) const {
    const Shell& s = shell_of(j);
    std::size_t first = j - 1;
    while (first > 0 && shell_of_[first - 1] == shell_of_[j - 1]) --first;
    return static_cast<int>(j - 1 - first) - s.l;
  }

  double sum() const {
    NeumaierSum s;
    for (double x : lam_) s.add(x);
    return s.total();
  }

  std::uint64_t fingerprint() const { return fingerprint_doubles(lam_); }

  static TruncationOptions no_truncation() {
    TruncationOptions t;
    t.cumulative_target = 1.0;
    return t;
  }

  /// Rebuild from already-normalized shells in final order, preserving the
  /// coefficients bit-exactly (used by the deserializer).
  static SchmidtSpectrum from_shells_exact(std::vector<Shell> shells,
                                           std::string provenance) {
    SchmidtSpectrum out;
    out.provenance_ = std::move(provenance);
    out.shells_ = std::move(shells);
    out.expand();
    const double dev = std::fabs(out.sum() - 1.0);
    if (dev > 1e-9)
      throw format_error("spectrum: coefficients sum to 1 " +
                         format_g17(dev) + " away from 1");
    return out;
  }

 private:
  static void require_size(std::size_t s) {
    if (s < 1) throw numeric_range_error("spectrum size must be >= 1");
  }

  void expand() {
    lam_.clear();
    shell_of_.clear();
    for (std::size_t i = 0; i < shells_.size(); ++i) {
      for (int m = 0; m < shells_[i].degeneracy(); ++m) {
        lam_.push_back(shells_[i].lambda);
        shell_of_.push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  std::vector<Shell> shells_;
  std::vector<double> lam_;
  std::vector<std::uint32_t> shell_of_;
  TruncationRecord truncation_;
  std::string provenance_;
};

// ---------------------------------------------------------------------------
// Serialization. Canonical format: '#' metadata lines, then a CSV body with
// header j,n,l,m,lambda,energy (one row per flattened state). The plain
// tabular flavor j,n,l,lambda,energy has one row per shell.
// ---------------------------------------------------------------------------

inline void write_spectrum(std::ostream& os, const SchmidtSpectrum& sp) {
  os << "# coboson spectrum v1\n";
  os << "# provenance = " << sp.provenance() << "\n";
  os << "# shells = " << sp.shells().size() << "\n";
  os << "# S = " << sp.size() << "\n";
  os << "# sum_lambda = " << format_g17(sp.sum()) << "\n";
  os << "# discarded_weight = " << format_g17(sp.truncation().discarded_weight)
     << "\n";
  os << "# renorm_factor = " << format_g17(sp.truncation().renorm_factor)
     << "\n";
  os << "# shells_dropped = " << sp.truncation().shells_dropped << "\n";
  os << "# fingerprint = " << hex64(sp.fingerprint()) << "\n";
  os << "j,n,l,m,lambda,energy\n";
  std::size_t j = 1;
  for (const Shell& s : sp.shells()) {
    for (int m = -s.l; m <= s.l; ++m, ++j)
      os << j << ',' << s.n << ',' << s.l << ',' << m << ','
         << format_g17(s.lambda) << ',' << format_g17(s.energy) << "\n";
  }
}

/// One row per shell; lambda is the per-substate coefficient.
inline void write_spectrum_tabular(std::ostream& os,
                                   const SchmidtSpectrum& sp) {
  os << "j,n,l,lambda,energy\n";
  std::size_t j = 1;
  for (const Shell& s : sp.shells()) {
    os << j << ',' << s.n << ',' << s.l << ',' << format_g17(s.lambda) << ','
       << format_g17(s.energy) << "\n";
    j += s.degeneracy();
  }
}

inline SchmidtSpectrum read_spectrum(std::istream& is) {
  std::string line;
  std::string provenance = "file";
  std::optional<std::string> fingerprint;
  std::vector<std::string> header;
  // metadata
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
          s.erase(0, s.find_first_not_of(" \t"));
          s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(val);
        if (key == "provenance") provenance = val;
        if (key == "fingerprint") fingerprint = val;
      }
      continue;
    }
    break;  // header row reached
  }
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (!col.empty() && col.back() == '\r') col.pop_back();
      header.push_back(col);
    }
  }
  const bool per_state =
      header == std::vector<std::string>{"j", "n", "l", "m", "lambda",
                                         "energy"};
  const bool per_shell =
      header == std::vector<std::string>{"j", "n", "l", "lambda", "energy"};
  if (!per_state && !per_shell)
    throw format_error("spectrum file: unrecognized header row");

  struct Row {
    int n, l, m;
    double lambda, energy;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() != header.size())
      throw format_error("spectrum file: bad field count in row");
    Row r{};
    r.n = std::stoi(fields[1]);
    r.l = std::stoi(fields[2]);
    if (per_state) {
      r.m = std::stoi(fields[3]);
      r.lambda = std::stod(fields[4]);
      r.energy = std::stod(fields[5]);
    } else {
      r.m = 0;
      r.lambda = std::stod(fields[3]);
      r.energy = std::stod(fields[4]);
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw format_error("spectrum file: no rows");

  // regroup into shells; per-state rows must come in complete (n,l) blocks
  std::vector<Shell> shells;
  if (per_shell) {
    for (const Row& r : rows)
      shells.push_back(Shell{r.n, r.l, r.lambda, r.energy});
  } else {
    std::size_t i = 0;
    while (i < rows.size()) {
      const Row& r = rows[i];
      const std::size_t g = 2 * static_cast<std::size_t>(r.l) + 1;
      if (i + g > rows.size())
        throw format_error("spectrum file: incomplete shell block");
      for (std::size_t k = 1; k < g; ++k) {
        if (rows[i + k].n != r.n || rows[i + k].l != r.l ||
            rows[i + k].lambda != r.lambda)
          throw format_error("spectrum file: inconsistent shell block");
      }
      shells.push_back(Shell{r.n, r.l, r.lambda, r.energy});
      i += g;
    }
  }
  SchmidtSpectrum sp =
      SchmidtSpectrum::from_shells_exact(std::move(shells), provenance);
  if (fingerprint && *fingerprint != hex64(sp.fingerprint()))
    throw format_error("spectrum file: fingerprint mismatch");
  return sp;
}

inline SchmidtSpectrum read_spectrum_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw format_error("cannot open spectrum file: " + path);
  return read_spectrum(f);
}

inline void write_spectrum_file(const std::string& path,
                                const SchmidtSpectrum& sp) {
  std::ofstream f(path);
  if (!f) throw format_error("cannot write spectrum file: " + path);
  write_spectrum(f, sp);
}

}  // namespace coboson
