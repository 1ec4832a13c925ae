#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ybcav/lightshift.hpp"

using namespace ybcav;

namespace {

const LevelScheme& scheme() {
  static const LevelScheme s = build_level_scheme();
  return s;
}

}  // namespace

TEST(BeamIntensity, PeakOfReferenceBeam) {
  // 2 * 9e-3 / (pi * (50e-6)^2)
  EXPECT_NEAR(beam_intensity(0.0, reference_light_shift_beam()), 2291831.180523293, 1e-6);
}

TEST(BeamIntensity, GaussianFalloff) {
  const auto b = reference_light_shift_beam();
  EXPECT_NEAR(beam_intensity(b.waist, b) / beam_intensity(0.0, b), std::exp(-2.0), 1e-14);
}

TEST(BeamIntensity, RadialOffsetIgnoresPropagationAxis) {
  BeamParams b = reference_light_shift_beam();
  b.axis_offset = 3e-6;
  EXPECT_DOUBLE_EQ(beam_radial_offset({123.0, 7e-6, 0.0}, b), 4e-6);
  EXPECT_DOUBLE_EQ(beam_radial_offset({0.0, 3e-6, -5e-6}, b), 5e-6);
}

TEST(BeamParams, ValidationRejectsBadValues) {
  BeamParams b = reference_light_shift_beam();
  b.power = -1.0;
  EXPECT_THROW(b.validate(), ConfigError);
  b = reference_light_shift_beam();
  b.waist = 0.0;
  EXPECT_THROW(beam_intensity(0.0, b), ConfigError);
}

TEST(StarkShift, StretchedSublevelAtReferenceBeam) {
  const double d = stark_shift(half(3), reference_light_shift_beam(), scheme(), Vec3{});
  EXPECT_NEAR(to_mhz(d), 6.8, 0.68);
}

TEST(StarkShift, SignedSublevelsShareShifts) {
  const auto b = reference_light_shift_beam();
  EXPECT_DOUBLE_EQ(stark_shift(half(3), b, scheme(), {}), stark_shift(half(-3), b, scheme(), {}));
  EXPECT_DOUBLE_EQ(stark_shift(half(1), b, scheme(), {}), stark_shift(half(-1), b, scheme(), {}));
}

TEST(StarkShift, CalibrationReproducesFrozenScale) {
  EXPECT_NEAR(calibrate_stark_scale(mhz(6.8), reference_light_shift_beam(), scheme()), scheme().stark_scale, 1e-12);
}

TEST(StarkShift, RejectsNonPiBeamAndInvalidSublevel) {
  BeamParams b = reference_light_shift_beam();
  b.polarization = BeamPolarization::sigma_plus;
  EXPECT_THROW(stark_shift(half(3), b, scheme(), {}), DomainError);
  EXPECT_THROW(stark_shift(half(5), reference_light_shift_beam(), scheme(), {}), DomainError);
  EXPECT_THROW(stark_shift(HalfInt::from_int(1), reference_light_shift_beam(), scheme(), {}), DomainError);
}

TEST(StarkShift, ResonantBeamHitsSingularityFloor) {
  BeamParams b = reference_light_shift_beam();
  b.detuning = 0.0;  // on the F''=1/2 component
  EXPECT_THROW(stark_shift(half(1), b, scheme(), {}), NumericalError);
  b.detuning = -scheme().d1_hyperfine_splitting + khz(50.0);  // within 10 linewidths of F''=3/2
  EXPECT_THROW(stark_shift(half(3), b, scheme(), {}), NumericalError);
}

TEST(StarkShift, LinearInPower) {
  BeamParams b = reference_light_shift_beam();
  b.power = milliwatts(1.0);
  const double ref = stark_shift(half(3), b, scheme(), {}) / b.power;
  for (double p : {2.0, 5.0, 10.0}) {
    b.power = milliwatts(p);
    EXPECT_NEAR(stark_shift(half(3), b, scheme(), {}) / b.power, ref, 0.01 * std::abs(ref));
  }
}

TEST(StarkShift, ContributionFlipsWithItsDetuning) {
  // m'=3/2 couples only to F''=3/2, whose detuning is beam.detuning + splitting.
  BeamParams a = reference_light_shift_beam();
  BeamParams b = a;
  const double x = mhz(500.0);
  a.detuning = -scheme().d1_hyperfine_splitting + x;
  b.detuning = -scheme().d1_hyperfine_splitting - x;
  const double sa = stark_shift(half(3), a, scheme(), {});
  const double sb = stark_shift(half(3), b, scheme(), {});
  EXPECT_GT(sa, 0.0);
  EXPECT_NEAR(sa, -sb, 1e-12 * std::abs(sa));
}

TEST(StarkShift, InnerAndStretchedShiftsHaveOppositeSigns) {
  const auto r = stark_shifts(reference_light_shift_beam(), scheme(), {});
  EXPECT_GT(r.delta_32, 0.0);
  EXPECT_LT(r.delta_12, 0.0);
  EXPECT_EQ(r.splitting, r.delta_32 - r.delta_12);
}

TEST(SublevelSplitting, FromMeasuredStretchedShift) {
  const auto r = sublevel_splitting(mhz(8.5), scheme());
  EXPECT_NEAR(to_mhz(r.delta_12), -16.0, 1.0);
  EXPECT_NEAR(to_mhz(r.splitting), 24.0, 2.0);
  EXPECT_EQ(r.splitting, r.delta_32 - r.delta_12);
}

TEST(SublevelSplitting, RescalesLinearly) {
  const auto a = sublevel_splitting(mhz(8.5), scheme());
  const auto b = sublevel_splitting(mhz(6.8), scheme());
  EXPECT_NEAR(b.splitting / a.splitting, 6.8 / 8.5, 1e-14);
  // 24 MHz measured at 8.5 MHz, scaled to 6.8 MHz, carries the same 1/12 relative uncertainty.
  EXPECT_NEAR(to_mhz(b.splitting), 24.0 / 8.5 * 6.8, 2.0 / 8.5 * 6.8);
}

TEST(SublevelSplitting, RatioIsIntensityIndependent) {
  BeamParams b = reference_light_shift_beam();
  const double r1 = shift_ratio(b, scheme());
  b.power *= 0.1;
  b.waist *= 2.0;
  EXPECT_DOUBLE_EQ(shift_ratio(b, scheme()), r1);
}

TEST(ShiftField, PointwiseAndGaussian) {
  const auto beam = reference_light_shift_beam();
  std::vector<Vec3> grid;
  for (int i = -8; i <= 8; ++i) grid.push_back({0.0, i * beam.waist / 4.0, 0.0});
  const auto field = shift_field(grid, beam, scheme());
  ASSERT_EQ(field.size(), grid.size());
  const auto centre = stark_shifts(beam, scheme(), {});
  EXPECT_EQ(field[8].delta_32, centre.delta_32);
  EXPECT_EQ(field[8].delta_12, centre.delta_12);
  EXPECT_NEAR(field[12].delta_32 / centre.delta_32, std::exp(-2.0), 1e-12);
  for (std::size_t i = 0; i < field.size(); ++i) {
    EXPECT_LE(field[i].delta_32, centre.delta_32);
    EXPECT_EQ(field[i].splitting, field[i].delta_32 - field[i].delta_12);
  }
}

TEST(ShiftField, EmptyGridIsAnError) {
  EXPECT_THROW(shift_field({}, reference_light_shift_beam(), scheme()), DomainError);
}

TEST(ShiftResult, SublevelLookup) {
  const auto r = ShiftResult::from_components(3.0, -1.0);
  EXPECT_EQ(r.of(half(-3)), 3.0);
  EXPECT_EQ(r.of(half(1)), -1.0);
  EXPECT_EQ(r.splitting, 4.0);
}
