#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"
#include "oracle.hpp"

namespace nls_spectra::io {

/// Resolved key/value configuration; ordered so echoes are deterministic.
using Config = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// 17 significant digits: reads back to the same double.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& what = "value") {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw UsageError("cannot parse " + what + " '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s, const std::string& what = "value") {
  const std::string t = trim(s);
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(t, &pos);
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " '" + s + "'");
  }
  if (pos != t.size()) throw UsageError("cannot parse " + what + " '" + s + "'");
  return v;
}

/// Accepts "0.5", "0.01i", "0.02+0.5i", "-1e-3-0.2i".
inline cplx parse_complex(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) throw UsageError("empty complex value");
  if (t.back() != 'i') return {parse_double(t, "complex value"), 0.0};
  t.pop_back();
  // split at the last sign that is not part of an exponent
  for (std::size_t i = t.size(); i-- > 1;) {
    if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E')
      return {parse_double(t.substr(0, i), "complex value"),
              parse_double(t.substr(i) == "+" || t.substr(i) == "-" ? t.substr(i) + "1" : t.substr(i),
                           "complex value")};
  }
  if (t.empty() || t == "+") return {0.0, 1.0};
  if (t == "-") return {0.0, -1.0};
  return {0.0, parse_double(t, "complex value")};
}

/// key = value lines; '#' starts a comment. Duplicate keys are rejected.
inline Config parse_config(std::istream& in) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    if (!c.emplace(key, trim(line.substr(eq + 1))).second)
      throw UsageError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  return parse_config(f);
}

inline void reject_unknown_keys(const Config& c, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : c)
    if (!allowed.count(k)) throw UsageError("unknown configuration key '" + k + "'");
}

// ---------------------------------------------------------------------------
// CSV. Every file starts with "# key = value" lines echoing the resolved
// configuration, then a column header, then rows.

struct CsvTable {
  Config header;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw UsageError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
};

inline void write_header(std::ostream& out, const Config& cfg) {
  for (const auto& [k, v] : cfg) out << "# " << k << " = " << v << '\n';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      const Config c = parse_config(h);
      t.header.insert(c.begin(), c.end());
      continue;
    }
    if (t.columns.empty()) {
      t.columns = split_csv_line(line);
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != t.columns.size())
      throw UsageError("CSV row has " + std::to_string(f.size()) + " fields, expected " +
                       std::to_string(t.columns.size()));
    t.rows.push_back(std::move(f));
  }
  return t;
}

// profile: r, value

inline Config profile_config(const GroundStateProfile& prof) {
  return {{"n", std::to_string(prof.n)},
          {"p", fmt(prof.p)},
          {"m", std::to_string(prof.m)},
          {"dr", fmt(prof.mesh.dr)},
          {"r_max", fmt(prof.mesh.r_max)},
          {"alpha", fmt(prof.alpha)},
          {"residual_inf", fmt(prof.residual_inf)}};
}

inline void write_profile_csv(std::ostream& out, const GroundStateProfile& prof, Config extra = {}) {
  Config cfg = profile_config(prof);
  cfg.insert(extra.begin(), extra.end());
  write_header(out, cfg);
  out << "r,value\n";
  const Vec r = prof.mesh.coords();
  for (Eigen::Index i = 0; i < r.size(); ++i) out << fmt(r[i]) << ',' << fmt(prof.values[i]) << '\n';
}

struct ProfileTable {
  Config header;
  std::vector<double> r, value;
};

inline ProfileTable read_profile_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t cr = t.column("r"), cv = t.column("value");
  ProfileTable p{t.header, {}, {}};
  for (const auto& row : t.rows) {
    p.r.push_back(parse_double(row[cr]));
    p.value.push_back(parse_double(row[cv]));
  }
  return p;
}

// sweep: p, operator, eig_index, re, im, class, residual (plus k and degraded)

inline Config sweep_config(const SweepSpec& s) {
  std::string ps, kinds;
  for (double p : s.p_values) ps += (ps.empty() ? "" : " ") + fmt(p);
  for (const auto& k : s.operator_kinds) kinds += (kinds.empty() ? "" : " ") + k;
  return {{"n", std::to_string(s.n)},
          {"m", std::to_string(s.m)},
          {"p_values", ps},
          {"operators", kinds},
          {"r_max", fmt(s.r_max)},
          {"dr", fmt(s.dr)},
          {"count", std::to_string(s.eig_count)},
          {"shift", fmt(s.shift.real()) + (s.shift.imag() < 0 ? "" : "+") + fmt(s.shift.imag()) + "i"},
          {"k_from", std::to_string(s.k_from)},
          {"k_to", std::to_string(s.k_to)},
          {"gs_residual_tol", fmt(s.solver.residual_tol)}};
}

inline void write_sweep_csv(std::ostream& out, const SweepDataset& ds, Config extra = {}) {
  Config cfg = sweep_config(ds.spec);
  cfg.insert(extra.begin(), extra.end());
  write_header(out, cfg);
  out << "p,operator,k,eig_index,re,im,class,residual,degraded\n";
  for (const auto& r : ds.rows)
    out << fmt(r.p) << ',' << r.op << ',' << r.k << ',' << r.index << ',' << fmt(r.value.real()) << ','
        << fmt(r.value.imag()) << ',' << to_string(r.cls) << ',' << fmt(r.residual) << ','
        << (r.degraded ? 1 : 0) << '\n';
}

inline SpectralClass spectral_class_from_string(const std::string& s) {
  for (SpectralClass c : {SpectralClass::zero, SpectralClass::real_pair, SpectralClass::imaginary_pair,
                          SpectralClass::complex_quadruple, SpectralClass::continuous_band})
    if (to_string(c) == s) return c;
  throw UsageError("unknown spectral class '" + s + "'");
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& in, Config* header = nullptr) {
  const CsvTable t = read_csv(in);
  if (header) *header = t.header;
  const std::size_t cp = t.column("p"), co = t.column("operator"), ck = t.column("k"), ci = t.column("eig_index"),
                    cre = t.column("re"), cim = t.column("im"), cc = t.column("class"),
                    cres = t.column("residual"), cd = t.column("degraded");
  std::vector<SweepRow> rows;
  for (const auto& f : t.rows)
    rows.push_back({parse_double(f[cp]), f[co], parse_int(f[ck]), parse_int(f[ci]),
                    cplx(parse_double(f[cre]), parse_double(f[cim])), spectral_class_from_string(f[cc]),
                    parse_double(f[cres]), 0.0, f[cd] == "1"});
  return rows;
}

// collision events: m, k, p_star, re_star, im_star (plus kind and steps)

inline void write_collision_csv(std::ostream& out, const std::vector<CollisionEvent>& ev, const Config& cfg = {}) {
  write_header(out, cfg);
  out << "m,k,p_star,re_star,im_star,kind,bisection_steps\n";
  for (const auto& e : ev)
    out << e.m << ',' << e.k << ',' << fmt(e.p_star) << ',' << fmt(e.lambda_star.real()) << ','
        << fmt(e.lambda_star.imag()) << ',' << to_string(e.kind) << ',' << e.bisection_steps << '\n';
}

inline std::vector<CollisionEvent> read_collision_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t cm = t.column("m"), ck = t.column("k"), cp = t.column("p_star"), cre = t.column("re_star"),
                    cim = t.column("im_star"), ckind = t.column("kind"), cs = t.column("bisection_steps");
  std::vector<CollisionEvent> ev;
  for (const auto& f : t.rows)
    ev.push_back({parse_int(f[cm]), parse_int(f[ck]), parse_double(f[cp]),
                  cplx(parse_double(f[cre]), parse_double(f[cim])),
                  f[ckind] == "origin_collision" ? CollisionKind::origin_collision : CollisionKind::off_axis_collision,
                  parse_int(f[cs])});
  return ev;
}

// resonance table: p, deviation (plus mu); delta goes in the header

inline void write_resonance_csv(std::ostream& out, const ResonanceTable& t, Config cfg = {}) {
  cfg["delta"] = fmt(t.delta);
  write_header(out, cfg);
  out << "p,deviation,mu\n";
  for (const auto& r : t.rows) out << fmt(r.p) << ',' << fmt(r.deviation) << ',' << fmt(r.mu) << '\n';
}

inline ResonanceTable read_resonance_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  ResonanceTable r;
  const auto it = t.header.find("delta");
  r.delta = it == t.header.end() ? 0.0 : parse_double(it->second);
  const std::size_t cp = t.column("p"), cd = t.column("deviation"), cm = t.column("mu");
  for (const auto& f : t.rows) r.rows.push_back({parse_double(f[cp]), parse_double(f[cm]), parse_double(f[cd])});
  return r;
}

// ---------------------------------------------------------------------------
// Oracle report: {p, n, ladder[], bounds[], expected_dims}.

inline nlohmann::json oracle_json(double p, int n) {
  nlohmann::json j;
  j["p"] = p;
  j["n"] = n;
  j["ladder"] = nlohmann::json::array();
  j["bounds"] = nlohmann::json::array();
  if (n == 1) {
    for (const auto& e : oracle::ladder(p).entries)
      j["ladder"].push_back({{"m", e.m},
                             {"k", e.k},
                             {"lambda", e.lambda},
                             {"parity", e.parity == oracle::Parity::even ? "even" : "odd"},
                             {"carrier", e.belongs_to == oracle::Carrier::Lplus ? "Lplus" : "Lplus,Lminus"}});
    if (oracle::interlacing_regime(p)) {
      const int k = *oracle::interlacing_regime(p);
      for (int jj = 1; jj <= k; ++jj) {
        const auto b = oracle::interlacing_bounds(p, jj);
        nlohmann::json e{{"j", b.j},
                         {"k", b.k},
                         {"lower", b.lower},
                         {"upper", b.upper},
                         {"upper_inclusive", b.upper_inclusive},
                         {"conjectured_lower", b.conjectured_lower}};
        e["sharper_lower"] = b.sharper_lower ? nlohmann::json(*b.sharper_lower) : nlohmann::json(nullptr);
        j["bounds"].push_back(e);
      }
    }
  }
  j["expected_dims"] = {{"nullspace", oracle::expected_nullspace_dim(n, p)}};
  return j;
}

// ---------------------------------------------------------------------------
// SVG plots. Layout depends only on the data, so equal datasets give equal
// bytes.

enum class PlotStyle { curves_vs_log_p, complex_plane };

namespace detail {
inline std::string svg_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline const char* class_colour(SpectralClass c) {
  switch (c) {
    case SpectralClass::zero: return "#555555";
    case SpectralClass::real_pair: return "#c0392b";
    case SpectralClass::imaginary_pair: return "#2e6fb7";
    case SpectralClass::complex_quadruple: return "#27ae60";
    case SpectralClass::continuous_band: return "#aaaaaa";
  }
  return "#000000";
}

struct Frame {
  double x0, x1, y0, y1;
  double W = 640, H = 420, L = 60, R = 20, T = 30, B = 50;
  double sx(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
  double sy(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

inline void svg_axes(std::ostream& o, const Frame& f, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel) {
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << f.W << "\" height=\"" << f.H
    << "\" viewBox=\"0 0 " << f.W << ' ' << f.H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<rect x=\"" << f.L << "\" y=\"" << f.T << "\" width=\"" << f.W - f.L - f.R << "\" height=\""
    << f.H - f.T - f.B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0, y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << svg_num(f.sx(x)) << "\" y=\"" << svg_num(f.H - f.B + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << svg_num(x) << "</text>\n";
    o << "<text x=\"" << svg_num(f.L - 6) << "\" y=\"" << svg_num(f.sy(y) + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">" << svg_num(y) << "</text>\n";
  }
  if (f.y0 < 0 && f.y1 > 0)
    o << "<line x1=\"" << f.L << "\" x2=\"" << f.W - f.R << "\" y1=\"" << svg_num(f.sy(0)) << "\" y2=\""
      << svg_num(f.sy(0)) << "\" stroke=\"#cccccc\"/>\n";
  o << "<text x=\"" << f.W / 2 << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" << title << "</text>\n"
    << "<text x=\"" << f.W / 2 << "\" y=\"" << f.H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel
    << "</text>\n"
    << "<text x=\"14\" y=\"" << f.H / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << f.H / 2 << ")\">" << ylabel << "</text>\n";
}
}  // namespace detail

/// curves_vs_log_p: every eigenvalue as two marks over log10(p - 1), filled
/// for Re and hollow for Im, coloured by class. complex_plane: Re against Im
/// inside |Re|, |Im| < 1.
inline void emit_plot(std::ostream& o, const SweepDataset& ds, PlotStyle style, const std::string& title = "") {
  if (ds.empty()) throw EmptyDataset("nothing to plot");
  detail::Frame f{};
  if (style == PlotStyle::curves_vs_log_p) {
    f.x0 = f.x1 = std::log10(ds.rows.front().p - 1.0);
    f.y0 = -1;
    f.y1 = 1;
    for (const auto& r : ds.rows) {
      const double x = std::log10(r.p - 1.0);
      f.x0 = std::min(f.x0, x);
      f.x1 = std::max(f.x1, x);
    }
    if (f.x1 - f.x0 < 1e-9) { f.x0 -= 0.5; f.x1 += 0.5; }
    detail::svg_axes(o, f, title, "log10(p - 1)", "Re, Im of eigenvalue");
    for (const auto& r : ds.rows) {
      const double x = std::log10(r.p - 1.0);
      const char* c = detail::class_colour(r.cls);
      if (std::abs(r.value.real()) <= 1)
        o << "<circle cx=\"" << detail::svg_num(f.sx(x)) << "\" cy=\"" << detail::svg_num(f.sy(r.value.real()))
          << "\" r=\"1.6\" fill=\"" << c << "\"/>\n";
      if (std::abs(r.value.imag()) <= 1)
        o << "<circle cx=\"" << detail::svg_num(f.sx(x)) << "\" cy=\"" << detail::svg_num(f.sy(r.value.imag()))
          << "\" r=\"1.6\" fill=\"none\" stroke=\"" << c << "\"/>\n";
    }
  } else {
    f.x0 = f.y0 = -1;
    f.x1 = f.y1 = 1;
    f.W = 460;
    f.H = 460;
    detail::svg_axes(o, f, title, "Re", "Im");
    for (const auto& r : ds.rows) {
      if (!(std::abs(r.value.real()) < 1 && std::abs(r.value.imag()) < 1)) continue;
      o << "<circle cx=\"" << detail::svg_num(f.sx(r.value.real())) << "\" cy=\""
        << detail::svg_num(f.sy(r.value.imag())) << "\" r=\"2\" fill=\"" << detail::class_colour(r.cls)
        << "\"/>\n";
    }
  }
  o << "</svg>\n";
}

}  // namespace nls_spectra::io
