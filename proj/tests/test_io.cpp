#include <gtest/gtest.h>

#include <sstream>

#include "nls_spectra/io.hpp"

using namespace nls_spectra;
namespace io = nls_spectra::io;

TEST(Config, ParsesKeyValue) {
  std::istringstream in("# comment\nn = 2\n  p=3.5 # trailing\n\nsectors = 0..9\n");
  const io::Config c = io::parse_config(in);
  EXPECT_EQ(c.at("n"), "2");
  EXPECT_EQ(c.at("p"), "3.5");
  EXPECT_EQ(c.at("sectors"), "0..9");
  EXPECT_NO_THROW(io::reject_unknown_keys(c, {"n", "p", "sectors"}));
  EXPECT_THROW(io::reject_unknown_keys(c, {"n", "p"}), UsageError);
}

TEST(Config, RejectsMalformed) {
  std::istringstream a("n 2\n"), b("n = 1\nn = 2\n"), c(" = 3\n");
  EXPECT_THROW(io::parse_config(a), UsageError);
  EXPECT_THROW(io::parse_config(b), UsageError);
  EXPECT_THROW(io::parse_config(c), UsageError);
  EXPECT_THROW(io::load_config("/nonexistent/cfg"), UsageError);
}

TEST(Parse, Numbers) {
  EXPECT_EQ(io::parse_complex("0.01i"), cplx(0, 0.01));
  EXPECT_EQ(io::parse_complex("0.02+0.5i"), cplx(0.02, 0.5));
  EXPECT_EQ(io::parse_complex("-1e-3-2e-1i"), cplx(-1e-3, -0.2));
  EXPECT_EQ(io::parse_complex("1.5"), cplx(1.5, 0));
  EXPECT_EQ(io::parse_complex("i"), cplx(0, 1));
  EXPECT_THROW(io::parse_complex("abc"), UsageError);
  EXPECT_THROW(io::parse_double("1.0x"), UsageError);
  EXPECT_THROW(io::parse_int("2.5"), UsageError);
}

TEST(Csv, DoublesRoundTripExactly) {
  for (double x : {0.1, 1.0 / 3.0, -2.2250738585072014e-308, 1.7976931348623157e308, 6.02214076e23})
    EXPECT_EQ(io::parse_double(io::fmt(x)), x);
}

TEST(Csv, ProfileRoundTrip) {
  const GroundStateProfile g = solve_ground_state(1, 3.0, 0, RadialMesh::make(1, 8.0, 0.1));
  std::stringstream s;
  io::write_profile_csv(s, g);
  const io::ProfileTable t = io::read_profile_csv(s);
  EXPECT_EQ(t.header.at("n"), "1");
  EXPECT_EQ(io::parse_double(t.header.at("alpha")), g.alpha);
  EXPECT_EQ(io::parse_double(t.header.at("residual_inf")), g.residual_inf);
  ASSERT_EQ(t.value.size(), static_cast<std::size_t>(g.values.size()));
  for (std::size_t i = 0; i < t.value.size(); ++i) {
    EXPECT_EQ(t.value[i], g.values[i]);
    EXPECT_EQ(t.r[i], g.mesh.coord(i));
  }
}

namespace {
SweepDataset toy_dataset() {
  SweepDataset ds;
  ds.spec.p_values = {1.5, 2.0};
  ds.rows.push_back({1.5, "calL", 0, 0, cplx(0.0, 0.123456789012345678), SpectralClass::imaginary_pair, 1e-12, 0, false});
  ds.rows.push_back({2.0, "calL", 0, 1, cplx(0.3, 0.0), SpectralClass::real_pair, 2e-11, 0, true});
  ds.rows.push_back({2.0, "sector", 3, 0, cplx(0.05, -0.2), SpectralClass::complex_quadruple, 3e-12, 0, false});
  return ds;
}
}  // namespace

TEST(Csv, SweepRoundTripWithConfigEcho) {
  const SweepDataset ds = toy_dataset();
  std::stringstream s;
  io::write_sweep_csv(s, ds, {{"command", "sweep"}});
  io::Config h;
  const auto rows = io::read_sweep_csv(s, &h);
  EXPECT_EQ(h.at("command"), "sweep");
  EXPECT_EQ(h.at("p_values"), "1.5 2");
  ASSERT_EQ(rows.size(), ds.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].p, ds.rows[i].p);
    EXPECT_EQ(rows[i].op, ds.rows[i].op);
    EXPECT_EQ(rows[i].k, ds.rows[i].k);
    EXPECT_EQ(rows[i].value, ds.rows[i].value);
    EXPECT_EQ(rows[i].cls, ds.rows[i].cls);
    EXPECT_EQ(rows[i].residual, ds.rows[i].residual);
    EXPECT_EQ(rows[i].degraded, ds.rows[i].degraded);
  }
}

TEST(Csv, CollisionAndResonanceRoundTrip) {
  const std::vector<CollisionEvent> ev{{1, 2, 1.0160888671875, cplx(0, -0.015862934), CollisionKind::off_axis_collision, 6},
                                       {2, 0, 2.9998046875, 0.0, CollisionKind::origin_collision, 9}};
  std::stringstream s;
  io::write_collision_csv(s, ev, {{"r_max", "30"}});
  const auto back = io::read_collision_csv(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].p_star, ev[0].p_star);
  EXPECT_EQ(back[0].lambda_star, ev[0].lambda_star);
  EXPECT_EQ(back[1].kind, CollisionKind::origin_collision);

  ResonanceTable t{1.358833, {{2.99, 0.9991, 0.0767212}, {3.01, 1.0001, 0.07689}}};
  std::stringstream r;
  io::write_resonance_csv(r, t);
  const ResonanceTable tb = io::read_resonance_csv(r);
  EXPECT_EQ(tb.delta, t.delta);
  ASSERT_EQ(tb.rows.size(), 2u);
  EXPECT_EQ(tb.rows[1].deviation, t.rows[1].deviation);
  EXPECT_EQ(tb.rows[0].mu, t.rows[0].mu);
}

TEST(Csv, RowWidthChecked) {
  std::istringstream in("a,b\n1,2\n3\n");
  EXPECT_THROW(io::read_csv(in), UsageError);
}

TEST(Json, OracleReport) {
  const auto j = io::oracle_json(2.5, 1);
  EXPECT_EQ(j.at("n"), 1);
  EXPECT_DOUBLE_EQ(j.at("p").get<double>(), 2.5);
  // lambda_0 = -33/16, lambda_1 = 0, lambda_2 = 15/16
  ASSERT_EQ(j.at("ladder").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("ladder")[0].at("lambda").get<double>(), -33.0 / 16.0);
  EXPECT_NEAR(j.at("ladder")[1].at("lambda").get<double>(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(j.at("ladder")[2].at("lambda").get<double>(), 15.0 / 16.0);
  ASSERT_EQ(j.at("bounds").size(), 1u);
  EXPECT_DOUBLE_EQ(j.at("bounds")[0].at("lower").get<double>(), 225.0 / 256.0);
  EXPECT_FALSE(j.at("bounds").empty());
  EXPECT_EQ(j.at("expected_dims").at("nullspace"), 4);
  EXPECT_TRUE(io::oracle_json(2.0, 2).at("ladder").empty());
}

TEST(Svg, DeterministicAndNonEmpty) {
  const SweepDataset ds = toy_dataset();
  std::ostringstream a, b, c;
  io::emit_plot(a, ds, io::PlotStyle::curves_vs_log_p, "t");
  io::emit_plot(b, ds, io::PlotStyle::curves_vs_log_p, "t");
  io::emit_plot(c, ds, io::PlotStyle::complex_plane);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("log10(p - 1)"), std::string::npos);
  EXPECT_NE(a.str().find("<circle"), std::string::npos);
  EXPECT_NE(c.str().find("</svg>"), std::string::npos);
  std::ostringstream e;
  EXPECT_THROW(io::emit_plot(e, SweepDataset{}, io::PlotStyle::complex_plane), EmptyDataset);
}
