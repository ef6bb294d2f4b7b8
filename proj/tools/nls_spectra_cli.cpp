// nls_spectra command-line front end. Exit status: 0 success, 1 validation
// error, 2 solver failure (a failed verification counts as one).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nls_spectra/nls_spectra.hpp"

namespace ns = nls_spectra;
namespace io = nls_spectra::io;

namespace {

struct Common {
  int n = 1;
  int m = 0;
  double r_max = 30.0;
  double dr = 0.01;
  double residual_tol = 1e-10;
  std::string out;
};

struct Args {
  Common c;
  double p = 3.0;
  int k = 0;
  std::string op = "calL";
  int count = 12;
  std::string shift = "0.02";
  double p_from = 0, p_to = 0, p_step = 0.01;
  std::vector<double> p_values;
  std::vector<std::string> ops{"calL", "Lplus", "Lminus"};
  std::string sectors;
  std::string plot, style = "curves";
  std::string suite = "interlacing";
  double p_lo = 0, p_hi = 0, width = 5e-4;
  double delta = 0.01, lo = 0, hi = 0;
  int k_from = 0, k_to = 9;
};

/// Output sink: file when a path was given, standard output otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ns::UsageError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<double> p_grid(const Args& a) {
  if (!a.p_values.empty()) return a.p_values;
  if (!(a.p_step > 0) || !(a.p_to >= a.p_from)) throw ns::UsageError("need p_from <= p_to and p_step > 0");
  const auto steps = static_cast<long>(std::floor((a.p_to - a.p_from) / a.p_step + 1e-9));
  std::vector<double> v;
  for (long i = 0; i <= steps; ++i) v.push_back(std::round((a.p_from + i * a.p_step) * 1e12) / 1e12);
  return v;
}

/// "a..b" or a single integer.
std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int k = io::parse_int(s, "sector");
    return {k, k};
  }
  const int a = io::parse_int(s.substr(0, dots), "sector range"), b = io::parse_int(s.substr(dots + 2), "sector range");
  if (b < a) throw ns::UsageError("empty sector range '" + s + "'");
  return {a, b};
}

ns::SweepSpec make_spec(const Args& a, std::vector<double> ps, std::vector<std::string> ops) {
  ns::SweepSpec s;
  s.n = a.c.n;
  s.m = a.c.m;
  s.p_values = std::move(ps);
  s.operator_kinds = std::move(ops);
  s.r_max = a.c.r_max;
  s.dr = a.c.dr;
  s.eig_count = a.count;
  s.shift = io::parse_complex(a.shift);
  s.solver.residual_tol = a.c.residual_tol;
  if (!a.sectors.empty()) std::tie(s.k_from, s.k_to) = parse_range(a.sectors);
  return s;
}

void maybe_plot(const Args& a, const ns::SweepDataset& ds, const std::string& title) {
  if (a.plot.empty()) return;
  if (a.style != "curves" && a.style != "complex") throw ns::UsageError("plot style must be curves or complex");
  std::ofstream f(a.plot);
  if (!f) throw ns::UsageError("cannot open plot file '" + a.plot + "'");
  io::emit_plot(f, ds, a.style == "curves" ? io::PlotStyle::curves_vs_log_p : io::PlotStyle::complex_plane, title);
}

int run_groundstate(const Args& a) {
  const ns::RadialMesh mesh = a.c.m > 0 ? ns::sector_mesh(a.c.r_max, a.c.dr) : ns::default_mesh(a.c.n, a.c.r_max, a.c.dr);
  ns::SolverOptions o;
  o.residual_tol = a.c.residual_tol;
  const ns::GroundStateProfile prof = ns::solve_ground_state(a.c.n, a.p, a.c.m, mesh, o);
  Sink s(a.c.out);
  io::write_profile_csv(s.os(), prof, {{"command", "groundstate"}});
  std::cerr << "alpha = " << io::fmt(prof.alpha) << ", residual_inf = " << prof.residual_inf << ", iterations = "
            << prof.iterations << '\n';
  return 0;
}

int run_spectrum(const Args& a) {
  Args b = a;
  if (a.op == "sector") b.sectors = std::to_string(a.k);
  const ns::SweepDataset ds = ns::run_sweep(make_spec(b, {a.p}, {a.op}));
  Sink s(a.c.out);
  io::write_sweep_csv(s.os(), ds, {{"command", "spectrum"}});
  maybe_plot(a, ds, "spectrum of " + a.op);
  return 0;
}

int run_sweep(const Args& a) {
  std::vector<std::string> ops = a.ops;
  if (!a.sectors.empty() && std::find(ops.begin(), ops.end(), "sector") == ops.end()) {
    if (a.c.m != 0) ops.clear();
    ops.push_back("sector");
  }
  const ns::SweepDataset ds = ns::run_sweep(make_spec(a, p_grid(a), ops));
  Sink s(a.c.out);
  io::write_sweep_csv(s.os(), ds, {{"command", "sweep"}});
  maybe_plot(a, ds, "n = " + std::to_string(a.c.n) + ", m = " + std::to_string(a.c.m));
  return 0;
}

int verdict(bool ok, const std::string& what) {
  std::cout << (ok ? "PASS " : "FAIL ") << what << '\n';
  return ok ? 0 : 2;
}

int run_verify(const Args& a) {
  std::cout.precision(10);
  if (a.suite == "interlacing") {
    const ns::InterlacingReport r = ns::verify_interlacing(a.p, std::nullopt, a.c.dr);
    std::cout << "p = " << r.p << ", k = " << r.k << ", r_max = " << r.r_max << '\n';
    for (const auto& e : r.entries) {
      std::cout << "  mu_" << e.j + 1 << " = " << e.mu << " in (" << e.bounds.lower << ", " << e.bounds.upper
                << (e.bounds.upper_inclusive ? "]" : ")") << "  margins " << e.lower_margin << ' ' << e.upper_margin;
      if (e.sharper_margin) std::cout << "  sharper " << *e.sharper_margin;
      std::cout << (e.ok ? "" : "  VIOLATED") << '\n';
    }
    return verdict(r.passed, "interlacing");
  }
  if (a.suite == "variational") {
    const ns::VariationalReport r = ns::variational_consistency(a.c.n, a.p, a.c.r_max, a.c.dr);
    for (const auto& e : r.entries)
      std::cout << "  mu = " << e.mu << "  quotient = " << e.quotient << "  orthogonality = " << e.orthogonality
                << '\n';
    return verdict(r.max_relative_error <= 1e-4, "variational (max relative error " +
                                                     io::fmt(r.max_relative_error) + ")");
  }
  if (a.suite == "bifurcation") {
    const ns::BifurcationCheck c = ns::bifurcation_check(a.c.n, a.delta, a.c.r_max, a.c.dr);
    std::cout << "p_c = " << c.p_c << "  predicted slope = " << c.predicted_slope
              << "  measured slope = " << c.measured_slope << "  relative error = " << c.relative_error << '\n';
    return verdict(c.sign_change && c.relative_error <= 0.2, "bifurcation");
  }
  if (a.suite == "crossing") {
    if (!(a.lo < a.hi)) throw ns::UsageError("crossing needs --lo < --hi");
    const double pc = ns::crossing_point(a.c.n, a.lo, a.hi, 1e-4, a.c.r_max, a.c.dr);
    std::cout << "crossing p = " << pc << '\n';
    return 0;
  }
  if (a.suite == "nullspace") {
    const ns::NullspaceCount c = ns::nullspace_dimension(a.c.n, a.p, a.c.r_max, a.c.dr);
    std::cout << "tol_zero = " << c.tol_zero << "  dimension = " << c.dimension << "  expected = " << c.expected
              << '\n';
    return verdict(c.dimension == c.expected, "nullspace");
  }
  if (a.suite == "crossval") {
    const ns::CrossValidationReport r =
        ns::cross_validate_algorithms(a.c.m, a.p, a.k_from, a.k_to, 1e-6, a.c.r_max, a.c.dr);
    for (const auto& s : r.sectors)
      std::cout << "  k = " << s.k << "  compared " << s.compared << " + " << s.compared_band
                << "  max difference " << s.max_difference << "  zero cluster " << s.zero_cluster_X << '/'
                << s.zero_cluster_Z << "  unpaired " << s.unpaired.size() << '\n';
    return verdict(r.passed, "cross-validation");
  }
  if (a.suite == "oracle") {
    Sink s(a.c.out);
    s.os() << io::oracle_json(a.p, a.c.n).dump(2) << '\n';
    return 0;
  }
  throw ns::UsageError("unknown suite '" + a.suite + "'");
}

int run_collision(const Args& a) {
  ns::CollisionOptions o;
  o.r_max = a.c.r_max;
  o.dr = a.c.dr;
  o.width = a.width;
  const ns::CollisionEvent e = ns::locate_collision(a.c.m, a.k, a.p_lo, a.p_hi, o);
  Sink s(a.c.out);
  io::write_collision_csv(s.os(), {e},
                          {{"command", "collision"}, {"m", std::to_string(a.c.m)}, {"k", std::to_string(a.k)},
                           {"p_lo", io::fmt(a.p_lo)}, {"p_hi", io::fmt(a.p_hi)}, {"width", io::fmt(a.width)},
                           {"r_max", io::fmt(a.c.r_max)}, {"dr", io::fmt(a.c.dr)}});
  return 0;
}

int run_resonance(const Args& a) {
  const ns::ResonanceTable t = ns::resonance_study(p_grid(a), a.c.r_max, a.c.dr);
  Sink s(a.c.out);
  io::write_resonance_csv(s.os(), t, {{"command", "resonance"}, {"r_max", io::fmt(a.c.r_max)},
                                      {"dr", io::fmt(a.c.dr)}});
  return 0;
}

/// Appends "--key value" for config entries not already given as flags.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i)
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
  if (path.empty()) return args;
  const io::Config cfg = io::load_config(path);
  static const std::vector<std::string> commands{"groundstate", "spectrum", "sweep", "verify", "collision", "resonance"};
  const bool has_command =
      std::any_of(args.begin(), args.end(), [](const std::string& s) {
        return std::find(commands.begin(), commands.end(), s) != commands.end();
      });
  if (auto it = cfg.find("command"); it != cfg.end() && !has_command) args.insert(args.begin(), it->second);
  for (const auto& [key, value] : cfg) {
    if (key == "command") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    args.push_back(flag);
    if (!value.empty()) {
      // list-valued keys are whitespace separated
      std::istringstream vs(value);
      std::string tok;
      while (vs >> tok) args.push_back(tok);
    }
  }
  return args;
}

void add_common(CLI::App* s, Args& a, bool with_m = true) {
  s->add_option("--n", a.c.n, "spatial dimension")->check(CLI::Range(1, 64));
  if (with_m) s->add_option("--m", a.c.m, "angular index (n = 2)")->check(CLI::NonNegativeNumber);
  s->add_option("--r-max", a.c.r_max, "outer radius");
  s->add_option("--dr", a.c.dr, "mesh spacing");
  s->add_option("--residual-tol", a.c.residual_tol, "ground-state residual tolerance");
  s->add_option("--out", a.c.out, "output file (default: standard output)");
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  CLI::App app{"Solitary-wave profiles and spectra of linearized NLS operators"};
  app.require_subcommand(1, 1);

  auto* gs = app.add_subcommand("groundstate", "compute a ground-state profile, write CSV");
  add_common(gs, a);
  gs->add_option("--p", a.p, "nonlinearity exponent")->required();

  auto* sp = app.add_subcommand("spectrum", "spectrum of one operator at one p");
  add_common(sp, a);
  sp->add_option("--p", a.p, "nonlinearity exponent")->required();
  sp->add_option("--op", a.op, "calL, Lplus, Lminus, H or sector")
      ->check(CLI::IsMember({"calL", "Lplus", "Lminus", "H", "sector"}));
  sp->add_option("--k", a.k, "sector index (op = sector)");
  sp->add_option("--count", a.count, "eigenvalues requested");
  sp->add_option("--shift", a.shift, "shift, e.g. 0.01i or 0.02+0.3i");
  sp->add_option("--plot", a.plot, "SVG output");
  sp->add_option("--style", a.style, "curves or complex");

  auto* sw = app.add_subcommand("sweep", "spectra over a p grid");
  add_common(sw, a);
  sw->add_option("--p-from", a.p_from);
  sw->add_option("--p-to", a.p_to);
  sw->add_option("--p-step", a.p_step);
  sw->add_option("--p-values", a.p_values, "explicit p grid (overrides from/to/step)");
  sw->add_option("--ops", a.ops, "operator kinds");
  sw->add_option("--sectors", a.sectors, "sector range a..b (n = 2)");
  sw->add_option("--count", a.count);
  sw->add_option("--shift", a.shift);
  sw->add_option("--plot", a.plot, "SVG output");
  sw->add_option("--style", a.style, "curves or complex");

  auto* vf = app.add_subcommand("verify", "run a verification suite");
  add_common(vf, a);
  vf->add_option("--suite", a.suite, "interlacing, variational, bifurcation, crossing, nullspace, crossval, oracle")
      ->check(CLI::IsMember({"interlacing", "variational", "bifurcation", "crossing", "nullspace", "crossval", "oracle"}));
  vf->add_option("--p", a.p);
  vf->add_option("--delta", a.delta, "bifurcation offset");
  vf->add_option("--lo", a.lo, "crossing bracket");
  vf->add_option("--hi", a.hi, "crossing bracket");
  vf->add_option("--k-from", a.k_from);
  vf->add_option("--k-to", a.k_to);

  auto* co = app.add_subcommand("collision", "locate an eigenvalue collision by bisection in p");
  add_common(co, a);
  co->add_option("--k", a.k, "sector")->required();
  co->add_option("--p-lo", a.p_lo)->required();
  co->add_option("--p-hi", a.p_hi)->required();
  co->add_option("--width", a.width, "final bracket width");

  auto* rs = app.add_subcommand("resonance", "resonance deviation table near p = 3 (n = 1)");
  add_common(rs, a, false);
  rs->add_option("--p-from", a.p_from);
  rs->add_option("--p-to", a.p_to);
  rs->add_option("--p-step", a.p_step);
  rs->add_option("--p-values", a.p_values);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ns::Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (*gs) return run_groundstate(a);
    if (*sp) return run_spectrum(a);
    if (*sw) return run_sweep(a);
    if (*vf) return run_verify(a);
    if (*co) return run_collision(a);
    if (*rs) {
      if (rs->count("--r-max") == 0) a.c.r_max = 130.0;
      return run_resonance(a);
    }
  } catch (const ns::Error& e) {
    std::cerr << e.what() << '\n';
    return ns::is_validation_error(e) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
