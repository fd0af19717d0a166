#include <cmath>

#include <gtest/gtest.h>

#include "biopsim/errors.hpp"
#include "biopsim/tissue.hpp"

using namespace biopsim;

namespace {

TissueSample single(const TissueLayer& layer) { return TissueSample("single", {layer}); }

}  // namespace

TEST(StandardSamples, Stacks) {
  const auto s = standard_samples();
  EXPECT_NEAR(s[0].total_thickness(), 12e-3, 1e-15);
  EXPECT_NEAR(s[1].total_thickness(), 17e-3, 1e-15);
  EXPECT_NEAR(s[2].total_thickness(), 14e-3, 1e-15);
  EXPECT_NEAR(s[3].total_thickness(), 19e-3, 1e-15);
  for (const auto& sample : s) {
    ASSERT_EQ(sample.layers().size(), 2u);
    EXPECT_EQ(sample.layers()[0].name, "skin-superficial");
    EXPECT_EQ(sample.punctured_count(), 0u);
  }
  EXPECT_EQ(s[0].layers()[1].name, "fibrous");
  EXPECT_EQ(s[1].layers()[1].name, "duct-embedded");
  EXPECT_NEAR(s[2].layers()[0].thickness, 4e-3, 1e-18);
  EXPECT_NEAR(s[3].layers()[1].thickness, 15e-3, 1e-18);
}

TEST(StandardSamples, DeepLayersDifferInElasticity) {
  EXPECT_NE(fibrous_layer(1e-2).stiffness_k, duct_embedded_layer(1e-2).stiffness_k);
}

TEST(AxialForce, ZeroAtZeroDepth) {
  for (const auto& s : standard_samples()) EXPECT_EQ(axial_force(s, 0.0, 1e-3).force, 0.0);
}

TEST(AxialForce, NegativeDepthIsDomainError) {
  EXPECT_THROW(axial_force(standard_samples()[0], -1e-6, 0.0), DomainError);
}

TEST(AxialForce, SkinPuncturesAtTwoMillimetres) {
  const TissueLayer skin = skin_layer(4e-3);
  EXPECT_DOUBLE_EQ(skin.puncture_force, skin.stiffness_k * 2e-3 + skin.stiffness_a * 4e-6);
  const TissueSample s = single(skin);
  const auto before = axial_force(s, 2e-3 - 1e-7, 0.0);
  EXPECT_FALSE(before.punctured_layer);
  EXPECT_NEAR(-before.force, skin.elastic(2e-3 - 1e-7), 1e-12);
  const auto at = axial_force(s, 2e-3, 0.0);
  ASSERT_TRUE(at.punctured_layer);
  EXPECT_EQ(*at.punctured_layer, 0u);
  // The elastic term vanishes entirely; only cutting remains at rest.
  EXPECT_DOUBLE_EQ(-at.force, skin.cutting_f);
}

TEST(AxialForce, MonotoneLoadingBeforePuncture) {
  for (const TissueLayer& layer : {skin_layer(5e-3), fibrous_layer(5e-3), duct_embedded_layer(5e-3)}) {
    const TissueSample s = single(layer);
    // Sweep strictly below the puncture indentation.
    const double d_p = (-layer.stiffness_k + std::sqrt(layer.stiffness_k * layer.stiffness_k +
                                                       4 * layer.stiffness_a * layer.puncture_force)) /
                       (2 * layer.stiffness_a);
    double previous = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double d = d_p * 0.999 * i / 1000.0;
      const auto f = axial_force(s, d, 1e-3);
      ASSERT_FALSE(f.punctured_layer) << layer.name << " " << d;
      ASSERT_GT(std::abs(f.force), previous) << layer.name << " " << d;
      previous = std::abs(f.force);
    }
  }
}

TEST(AxialForce, RetractionSeesNoElasticForce) {
  const TissueSample s = single(skin_layer(4e-3));
  EXPECT_EQ(axial_force(s, 1e-3, -1e-3).force, 0.0);
}

TEST(AxialForce, PuncturedLayersContributeCuttingAtRest) {
  TissueSample s = standard_samples()[0];
  const double v = 1e-3;
  for (double d = 0.0; d <= 11e-3; d += 1e-5) s = axial_force(s, d, v).sample;
  ASSERT_EQ(s.punctured_count(), 2u);
  const double expected = s.layers()[0].cutting_f + s.layers()[1].cutting_f;
  EXPECT_DOUBLE_EQ(-axial_force(s, 11e-3, 0.0).force, expected);
  const double with_friction = s.layers()[0].cutting_f + s.layers()[1].cutting_f +
                               (s.layers()[0].friction_mu + s.layers()[1].friction_mu) * v;
  EXPECT_NEAR(-axial_force(s, 11e-3, v).force, with_friction, 1e-12);
  // Retracting inside punctured tissue: friction only, pointing the other way.
  EXPECT_GT(axial_force(s, 11e-3, -v).force, 0.0);
}

TEST(AxialForce, OneDiscontinuityPerLayerAndOrderedLatches) {
  for (const auto& fresh : standard_samples()) {
    TissueSample s = fresh;
    const double v = 1e-3, step = 1e-6;
    double previous = 0.0;
    int jumps = 0;
    std::size_t latched = 0;
    for (double d = 0.0; d <= fresh.total_thickness() + 1e-3; d += step) {
      const auto f = axial_force(s, d, v);
      if (f.punctured_layer) {
        EXPECT_EQ(*f.punctured_layer, latched);
        ++latched;
      }
      for (std::size_t i = 0; i < s.layers().size(); ++i)
        if (s.punctured(i)) EXPECT_TRUE(f.sample.punctured(i));  // never reverts
      if (std::abs(std::abs(f.force) - previous) > 0.05) ++jumps;
      previous = std::abs(f.force);
      s = f.sample;
      EXPECT_EQ(s.punctured_count(), latched);
    }
    EXPECT_EQ(latched, fresh.layers().size()) << fresh.name();
    EXPECT_EQ(jumps, static_cast<int>(fresh.layers().size())) << fresh.name();
  }
}

TEST(Reset, ClearsLatchesIdempotently) {
  TissueSample s = standard_samples()[3];
  for (double d = 0.0; d <= 8e-3; d += 1e-5) s = axial_force(s, d, 1e-3).sample;
  ASSERT_GT(s.punctured_count(), 0u);
  const TissueSample once = reset(s);
  const TissueSample twice = reset(once);
  EXPECT_EQ(once.punctured_count(), 0u);
  EXPECT_EQ(once.punctured(), twice.punctured());
  const auto fresh = standard_samples()[3];
  EXPECT_EQ(axial_force(once, 1e-3, 1e-3).force, axial_force(fresh, 1e-3, 1e-3).force);
}

TEST(TissueSample, Validation) {
  EXPECT_THROW(TissueSample("empty", {}), ConfigError);
  TissueLayer l = skin_layer(2e-3);
  l.thickness = 0.0;
  EXPECT_THROW(TissueSample("bad", {l}), ConfigError);
  l = skin_layer(2e-3);
  l.puncture_force = 0.0;
  EXPECT_THROW(TissueSample("bad", {l}), ConfigError);
  l = skin_layer(2e-3);
  l.friction_mu = -1.0;
  EXPECT_THROW(TissueSample("bad", {l}), ConfigError);
}
