#include "biopsim/tissue.hpp"

#include <cmath>
#include <numeric>

#include "biopsim/errors.hpp"

namespace biopsim {

TissueSample::TissueSample(std::string name, std::vector<TissueLayer> layers)
    : name_(std::move(name)), layers_(std::move(layers)), punctured_(layers_.size(), false) {
  if (layers_.empty()) throw ConfigError("tissue sample '" + name_ + "' has no layers");
  for (const auto& l : layers_) {
    const auto where = "tissue layer '" + l.name + "'";
    if (!(l.thickness > 0.0)) throw ConfigError(where + ": thickness must be > 0");
    if (!(l.puncture_force > 0.0)) throw ConfigError(where + ": puncture_force must be > 0");
    if (!(l.stiffness_k >= 0.0) || !(l.stiffness_a >= 0.0) || !(l.friction_mu >= 0.0) ||
        !(l.cutting_f >= 0.0))
      throw ConfigError(where + ": coefficients must be >= 0");
    if (!(l.stiffness_k > 0.0) && !(l.stiffness_a > 0.0))
      throw ConfigError(where + ": needs a positive elastic coefficient to ever puncture");
  }
}

double TissueSample::total_thickness() const {
  return std::accumulate(layers_.begin(), layers_.end(), 0.0,
                         [](double acc, const TissueLayer& l) { return acc + l.thickness; });
}

double TissueSample::layer_start(std::size_t layer) const {
  double start = 0.0;
  for (std::size_t i = 0; i < layer && i < layers_.size(); ++i) start += layers_[i].thickness;
  return start;
}

std::size_t TissueSample::punctured_count() const {
  std::size_t n = 0;
  while (n < punctured_.size() && punctured_[n]) ++n;
  return n;
}

struct TissueAccess {
  static void latch(TissueSample& s, std::size_t i) { s.punctured_[i] = true; }
  static void clear(TissueSample& s) { s.punctured_.assign(s.layers_.size(), false); }
};

AxialForce axial_force(const TissueSample& sample, double depth, double velocity) {
  if (!(depth >= 0.0)) throw DomainError("tissue depth must be >= 0");
  AxialForce out{0.0, sample, std::nullopt};
  const auto& layers = sample.layers();
  double start = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const TissueLayer& layer = layers[i];
    if (depth <= start) break;
    if (!out.sample.punctured(i)) {
      if (velocity < 0.0) break;  // elastic loading only resists advance
      const double elastic = layer.elastic(depth - start);
      if (elastic < layer.puncture_force) {
        out.force -= elastic;
        break;
      }
      TissueAccess::latch(out.sample, i);
      out.punctured_layer = i;
    }
    if (velocity >= 0.0) {
      out.force -= layer.cutting_f + layer.friction_mu * velocity;
    } else {
      out.force -= layer.friction_mu * velocity;
    }
    start += layer.thickness;
  }
  return out;
}

TissueSample reset(const TissueSample& sample) {
  TissueSample fresh = sample;
  TissueAccess::clear(fresh);
  return fresh;
}

namespace {

TissueLayer calibrated(std::string name, double thickness, double k, double a,
                       double puncture_depth, double mu, double cutting) {
  TissueLayer l{std::move(name), thickness, k, a, 0.0, mu, cutting};
  l.puncture_force = l.elastic(puncture_depth);
  return l;
}

}  // namespace

TissueLayer skin_layer(double thickness) {
  return calibrated("skin-superficial", thickness, 1000.0, 2.5e5, 2.0e-3, 20.0, 0.3);
}

TissueLayer fibrous_layer(double thickness) {
  return calibrated("fibrous", thickness, 600.0, 1.5e5, 3.0e-3, 40.0, 0.5);
}

TissueLayer duct_embedded_layer(double thickness) {
  return calibrated("duct-embedded", thickness, 300.0, 1.0e5, 4.0e-3, 30.0, 0.4);
}

std::array<TissueSample, 4> standard_samples() {
  return {
      TissueSample("setup1-skin2-fibrous10", {skin_layer(2e-3), fibrous_layer(10e-3)}),
      TissueSample("setup2-skin2-duct15", {skin_layer(2e-3), duct_embedded_layer(15e-3)}),
      TissueSample("setup3-skin4-fibrous10", {skin_layer(4e-3), fibrous_layer(10e-3)}),
      TissueSample("setup4-skin4-duct15", {skin_layer(4e-3), duct_embedded_layer(15e-3)}),
  };
}

}  // namespace biopsim
