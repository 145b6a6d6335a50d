#include <gtest/gtest.h>

#include <random>

#include "caflow/affine.hpp"
#include "caflow/curve.hpp"
#include "oracle.hpp"

using namespace caflow;

namespace {

double d(real v) { return static_cast<double>(v); }

FourierSpec standard_spec() { return FourierSpec{1, {{real{0.1}, 0}}}; }

}  // namespace

TEST(MakeCircle, UnitCircle) {
  const SupportCurve c = make_circle(1, 128);
  for (real v : c.h()) EXPECT_EQ(v, 1);
  const ScalarInvariants inv = analyze(c).invariants;
  EXPECT_NEAR(d(inv.area), d(pi), 1e-17);
  EXPECT_NEAR(d(inv.affine_length), d(two_pi), 1e-17);
}

TEST(MakeCircle, SigmaScalesAsFourThirdsPower) {
  const AffineState s = analyze(make_circle(2, 128)).state;
  for (real v : s.sigma) EXPECT_NEAR(d(v), std::pow(2.0, 4.0 / 3), 1e-15);
}

TEST(MakeCircle, Errors) {
  EXPECT_THROW(make_circle(1, 15), InvalidArgument);
  EXPECT_THROW(make_circle(0, 128), InvalidArgument);
  EXPECT_THROW(make_circle(-1, 128), InvalidArgument);
}

TEST(MakeEllipse, DegenerateIsCircle) {
  const SupportCurve e = make_ellipse(1, 1, 128);
  const SupportCurve c = make_circle(1, 128);
  for (int j = 0; j < 128; ++j) EXPECT_EQ(e.h()[j], c.h()[j]);
}

TEST(MakeEllipse, SigmaIsOneAndAreaPi) {
  const AffineAnalysis a = analyze(make_ellipse(2, 0.5L, 256));
  // Oracle: sigma from the jet of sqrt(p + q cos 2 theta), independent of the FFT path.
  const oracle::Invariants o = oracle::invariants(oracle::ellipse(2, 0.5L));
  EXPECT_NEAR(d(o.min_sigma), 1.0, 1e-15);
  EXPECT_NEAR(d(o.max_sigma), 1.0, 1e-15);
  EXPECT_NEAR(d(o.area), d(pi), 1e-15);
  EXPECT_LT(d((a.state.sigma - 1).sup_norm()), 1e-10);
  EXPECT_NEAR(d(a.invariants.area), d(o.area), 1e-12);
}

TEST(MakeEllipse, FlowSpeedVanishes) {
  const AffineState s = analyze(make_ellipse(2, 0.5L, 256)).state;
  EXPECT_LT(d(flow_speed(s).sup_norm()), 1e-8);
}

TEST(MakeEllipse, NodesMatchClosedForm) {
  const SupportCurve e = make_ellipse(3, 0.7L, 64);
  for (int j = 0; j < 64; ++j) {
    const real t = e.grid().theta(j);
    EXPECT_NEAR(d(e.h()[j]), d(std::sqrt(9 * std::cos(t) * std::cos(t) + real{0.49} * std::sin(t) * std::sin(t))),
                1e-17);
  }
}

TEST(MakeEllipse, Errors) {
  EXPECT_THROW(make_ellipse(0, 1, 64), InvalidArgument);
  EXPECT_THROW(make_ellipse(1, -1, 64), InvalidArgument);
  EXPECT_THROW(make_ellipse(1, 1, 17), InvalidArgument);
}

TEST(MakeFourier, StandardCurveRadiusRange) {
  const SupportCurve c = make_fourier(standard_spec(), 256);
  const oracle::Invariants o = oracle::invariants(oracle::TrigPoly{1, {{2, 0.1L, 0}}});
  EXPECT_NEAR(d(o.min_r), 0.7, 1e-15);
  EXPECT_NEAR(d(o.max_r), 1.3, 1e-15);
  EXPECT_NEAR(d(c.r().min()), 0.7, 1e-15);
  EXPECT_NEAR(d(c.r().max()), 1.3, 1e-15);
}

TEST(MakeFourier, StandardCurveArea) {
  const SupportCurve c = make_fourier(standard_spec(), 256);
  const oracle::Invariants o = oracle::invariants(oracle::TrigPoly{1, {{2, 0.1L, 0}}});
  const real want = real{0.985} * pi;
  EXPECT_NEAR(d(o.area), d(want), 1e-15);
  EXPECT_NEAR(d(analyze(c).invariants.area), d(want), 1e-15);
  EXPECT_NEAR(3.094468, d(want), 1e-6);
}

TEST(MakeFourier, ZeroCoefficientsGiveCircle) {
  const SupportCurve c = make_fourier(FourierSpec{1, {{0, 0}, {0, 0}}}, 64);
  for (real v : c.h()) EXPECT_EQ(v, 1);
}

TEST(MakeFourier, RescalesToConvexityFloor) {
  // h = 1 + 0.5 cos 2 theta has r = 1 - 1.5 cos 2 theta < 0 somewhere.
  const SupportCurve c = make_fourier(FourierSpec{1, {{0.5L, 0}}}, 128);
  const real ratio = c.r().min() / c.r().mean();
  EXPECT_GE(d(ratio), 0.1);
  EXPECT_LT(d(ratio), 0.1 + 1e-12);
  // A single damping factor: the harmonic keeps its shape, h - 1 is a multiple of cos 2 theta.
  const real amp = c.h()[0] - 1;
  for (int j = 0; j < 128; ++j) EXPECT_NEAR(d(c.h()[j] - 1), d(amp * std::cos(2 * c.grid().theta(j))), 1e-17);
}

TEST(MakeFourier, Errors) {
  EXPECT_THROW(make_fourier(FourierSpec{0, {{0.1L, 0}}}, 64), InvalidArgument);
  EXPECT_THROW(make_fourier(FourierSpec{-1, {}}, 64), InvalidArgument);
  EXPECT_THROW(make_fourier(FourierSpec{1, std::vector<Harmonic>(8)}, 32), InvalidArgument);
}

TEST(MakeFourier, Deterministic) {
  const FourierSpec spec{1, {{0.03L, -0.02L}, {0.004L, 0.001L}}};
  const SupportCurve a = make_fourier(spec, 256);
  const SupportCurve b = make_fourier(spec, 256);
  for (int j = 0; j < 256; ++j) EXPECT_EQ(a.h()[j], b.h()[j]);
}

TEST(Embed, CirclePointsOnUnitCircle) {
  for (const Point2& p : embed(make_circle(1, 128))) EXPECT_NEAR(d(std::hypot(p.x, p.y)), 1.0, 1e-14);
}

TEST(Embed, EllipseImplicitEquation) {
  for (const Point2& p : embed(make_ellipse(2, 0.5L, 256))) EXPECT_NEAR(d(p.x * p.x / 4 + 4 * p.y * p.y), 1.0, 1e-10);
}

TEST(Embed, ShoelaceAreaConvergesSecondOrder) {
  const oracle::TrigPoly h{1, {{2, 0.1L, 0}}};
  const real want = oracle::invariants(h).area;
  // Each chord cuts off r^2 (D - sin D) / 2 ~ r^2 D^3 / 12 for a normal-angle step D,
  // so the inscribed polygon misses D^2 / 12 * \oint r^2 dtheta.
  real r2 = 0;
  const int m = 4096;
  for (int j = 0; j < m; ++j) {
    const real r = oracle::pointwise(h(2 * oracle::pi * j / m)).r;
    r2 += r * r * 2 * oracle::pi / m;
  }
  real prev = 0;
  for (int n : {64, 128, 256}) {
    const real err = std::abs(polygon_area(embed(make_fourier(standard_spec(), n))) - want);
    const real step = 2 * oracle::pi / n;
    EXPECT_NEAR(d(err / (step * step * r2 / 12)), 1.0, 0.03) << n;
    if (prev > 0) EXPECT_NEAR(d(prev / err), 4.0, 0.2) << n;
    prev = err;
  }
}

TEST(Embed, SymmetricCurveGivesSymmetricPolygon) {
  const std::vector<Point2> pts = embed(make_fourier(FourierSpec{1, {{0.05L, 0.02L}}}, 64));
  for (int j = 0; j < 32; ++j) {
    EXPECT_NEAR(d(pts[j].x + pts[j + 32].x), 0.0, 1e-15);
    EXPECT_NEAR(d(pts[j].y + pts[j + 32].y), 0.0, 1e-15);
  }
}

TEST(Validate, Circle) {
  const CurveDiagnostics v = validate(make_circle(1, 64));
  EXPECT_EQ(v.min_h, 1);
  EXPECT_NEAR(d(v.min_r), 1.0, 1e-18);
  EXPECT_EQ(v.symmetry_defect, 0);
  EXPECT_TRUE(v.valid());
}

TEST(Validate, EvenHarmonicIsSymmetric) {
  EXPECT_LT(d(validate(make_fourier(standard_spec(), 256)).symmetry_defect), 1e-15);
}

TEST(Validate, ReportsNegativeRadiusWithoutThrowing) {
  const PeriodicField h =
      PeriodicField::sample(AngularGrid(128), [](real t) { return 1 + real{0.5} * std::cos(2 * t); });
  const CurveDiagnostics v = validate(h);
  EXPECT_NEAR(d(v.min_r), -0.5, 1e-15);
  EXPECT_FALSE(v.strictly_convex());
  EXPECT_FALSE(v.valid());
  EXPECT_THROW(SupportCurve{h}, ConvexityError);
}

TEST(Validate, OriginOutsideIsRejected) {
  // A unit circle centred at (2, 0): h = 1 + 2 cos theta, negative for theta near pi.
  const PeriodicField h = PeriodicField::sample(AngularGrid(64), [](real t) { return 1 + 2 * std::cos(t); });
  EXPECT_FALSE(validate(h).encloses_origin());
  EXPECT_THROW(SupportCurve{h}, ConvexityError);
}

TEST(Validate, AsymmetricCurveIsFlagged) {
  // Translated circle: still strictly convex, but not origin-symmetric.
  const PeriodicField h = PeriodicField::sample(AngularGrid(64), [](real t) { return 1 + real{0.1} * std::cos(t); });
  const SupportCurve c(h);
  const CurveDiagnostics v = validate(c);
  EXPECT_TRUE(v.valid());
  EXPECT_FALSE(v.origin_symmetric());
  EXPECT_NEAR(d(v.symmetry_defect), 0.2, 1e-15);
}

TEST(CurveProperties, ConstructorsAreValidAndBitwiseSymmetric) {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    FourierSpec spec{1 + std::abs(u(eng)), {}};
    const int count = 1 + trial % 4;
    for (int k = 0; k < count; ++k) spec.harmonics.push_back({u(eng), u(eng)});
    const SupportCurve c = make_fourier(spec, 128);
    const CurveDiagnostics v = validate(c);
    EXPECT_TRUE(v.valid());
    EXPECT_GE(d(v.min_r), 0.1 * d(v.mean_r) * (1 - 1e-15));
    for (int j = 0; j < 64; ++j) ASSERT_EQ(c.h()[j], c.h()[j + 64]);
  }
  for (real a : {real{0.3}, real{1}, real{2.5}}) {
    const SupportCurve e = make_ellipse(a, 1 / a, 128);
    EXPECT_TRUE(validate(e).valid());
    for (int j = 0; j < 64; ++j) ASSERT_EQ(e.h()[j], e.h()[j + 64]);
  }
}

TEST(CurveProperties, ShoelaceMatchesSupportArea) {
  const std::vector<FourierSpec> specs = {standard_spec(), FourierSpec{2, {{0.02L, 0.05L}, {0.01L, -0.003L}}}};
  for (const FourierSpec& spec : specs) {
    const SupportCurve c = make_fourier(spec, 512);
    const real support_area = integrate_theta(c.h() * c.r()) / 2;
    const real poly = polygon_area(embed(c));
    EXPECT_LT(d(std::abs(poly - support_area) / support_area), 1e-4);
  }
}
