#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace biopsim {

/// One tissue layer. Before puncture the layer resists advance elastically
/// with k·d + a·d², d being the indentation into the layer; once that force
/// reaches `puncture_force` the layer latches punctured and from then on
/// resists with friction_mu·v + cutting_f.
struct TissueLayer {
  std::string name;
  double thickness = 0.0;        // m
  double stiffness_k = 0.0;      // N/m
  double stiffness_a = 0.0;      // N/m²
  double puncture_force = 0.0;   // N
  double friction_mu = 0.0;      // N·s/m
  double cutting_f = 0.0;        // N

  /// Elastic force magnitude at indentation `d`.
  double elastic(double d) const { return stiffness_k * d + stiffness_a * d * d; }
};

/// Layer stack, entry side first, with per-layer puncture latches.
class TissueSample {
 public:
  TissueSample() = default;
  /// Throws ConfigError on empty stacks or invalid layer parameters.
  explicit TissueSample(std::string name, std::vector<TissueLayer> layers);

  const std::string& name() const noexcept { return name_; }
  const std::vector<TissueLayer>& layers() const noexcept { return layers_; }
  const std::vector<bool>& punctured() const noexcept { return punctured_; }
  bool punctured(std::size_t layer) const { return punctured_.at(layer); }

  double total_thickness() const;
  /// Depth of the entry face of `layer`.
  double layer_start(std::size_t layer) const;

  /// Number of leading punctured layers; latches are always a prefix.
  std::size_t punctured_count() const;

 private:
  friend struct TissueAccess;
  std::string name_;
  std::vector<TissueLayer> layers_;
  std::vector<bool> punctured_;
};

struct NeedleSpec {
  double diameter = 1.7e-3;
  std::string gauge_label = "16G";
};

struct AxialForce {
  /// Signed force along the insertion axis; negative resists advance.
  double force = 0.0;
  TissueSample sample;
  /// Layer that latched during this evaluation, if any.
  std::optional<std::size_t> punctured_layer;
};

/// Throws DomainError for negative depth.
AxialForce axial_force(const TissueSample& sample, double depth, double velocity);

/// Clears every puncture latch.
TissueSample reset(const TissueSample& sample);

/// Default layer parameters. The skin layer is calibrated to puncture at
/// 2 mm indentation; fibrous and duct-embedded layers differ in stiffness.
TissueLayer skin_layer(double thickness);
TissueLayer fibrous_layer(double thickness);
TissueLayer duct_embedded_layer(double thickness);

/// The four bench setups: 2 or 4 mm skin over 10 mm fibrous or 15 mm
/// duct-embedded tissue, in that order.
std::array<TissueSample, 4> standard_samples();

}  // namespace biopsim
