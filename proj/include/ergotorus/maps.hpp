#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergotorus/geometry.hpp"

namespace ergotorus {

struct Ball {
  TorusPoint center;
  double radius = 0.0;
};

// Certificate that a map is exactly linear (with the given torus-coordinate
// differential) on the chart ball around center.
struct LocalLinearity {
  TorusPoint center;
  double radius = 0.0;
  Mat3 matrix = Mat3::Identity();
};

// Where a map may differ from its linear model. A map with linear_outside
// set agrees exactly with that matrix away from the listed balls.
struct SupportInfo {
  std::optional<Mat3> linear_outside;
  std::vector<Ball> balls;
  std::vector<LocalLinearity> linear_on;
};

struct MapNode {
  virtual ~MapNode() = default;
  virtual TorusPoint eval(const TorusPoint& q) const = 0;
  virtual Mat3 differential(const TorusPoint& q) const = 0;
  virtual TorusPoint inverse(const TorusPoint& q) const = 0;

  std::string label;
  SupportInfo support;
};

// Immutable volume-preserving diffeomorphism of the 3-torus. Copies share
// the underlying node; all evaluation paths are pure functions, so a map may
// be used from many threads at once.
class SmoothMap {
 public:
  SmoothMap() = default;
  explicit SmoothMap(std::shared_ptr<const MapNode> node) : node_(std::move(node)) {}

  bool valid() const { return static_cast<bool>(node_); }

  TorusPoint eval(const TorusPoint& q) const { return node().eval(q); }
  Mat3 differential(const TorusPoint& q) const { return node().differential(q); }
  TorusPoint inverse(const TorusPoint& q) const { return node().inverse(q); }
  const std::string& label() const { return node().label; }
  const SupportInfo& support() const { return node().support; }

  TorusPoint iterate(const TorusPoint& q, int n) const;  // n may be negative

 private:
  const MapNode& node() const {
    require(static_cast<bool>(node_), "map is empty");
    return *node_;
  }
  std::shared_ptr<const MapNode> node_;
};

struct IntegerMatrixSpec {
  long long entries[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
};

struct IntegerMatrix2Spec {
  long long entries[2][2] = {{1, 0}, {0, 1}};
};

// Hyperbolic automorphism of T^3 from an integer matrix. Requires det = +1
// (not_volume_preserving otherwise) and no eigenvalue within 1e-9 of the unit
// circle (not_hyperbolic otherwise).
SmoothMap linear_anosov(const IntegerMatrixSpec& spec);

// Automorphism of T^3 acting by the 2x2 block on (x, y) and by the identity
// on z. The block must be det = +1 and hyperbolic; the center eigenvalue of
// the product is exactly 1.
SmoothMap product_with_identity(const IntegerMatrix2Spec& spec);

// Rigid translation; volume preserving, useful as a support-check foil.
SmoothMap translation(const Vec3& offset);

// outer after inner. Support descriptors are merged conservatively.
SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner);

// Unvalidated map from callables; intended for tests and diagnostics.
SmoothMap from_rules(std::string label,
                     std::function<TorusPoint(const TorusPoint&)> eval,
                     std::function<Mat3(const TorusPoint&)> differential,
                     std::function<TorusPoint(const TorusPoint&)> inverse);

// Same map with a replacement support descriptor. The caller asserts the
// descriptor; nothing is rechecked here.
SmoothMap with_support(const SmoothMap& map, SupportInfo info);

// Chart-local diffeomorphism used inside a surgery ball. Outside
// support_radius the map must coincide exactly with its linearization, and it
// must carry the ball of any radius >= support_radius onto itself after
// normalization by that linearization.
class LocalMap {
 public:
  virtual ~LocalMap() = default;
  virtual Vec3 eval(const Vec3& c) const = 0;
  virtual Mat3 differential(const Vec3& c) const = 0;
  virtual Vec3 inverse(const Vec3& c) const = 0;
  virtual Mat3 linearization() const = 0;
  virtual double support_radius() const = 0;

  // worst relative first-integral drift over every trajectory integrated so
  // far, when the map is flow based; 0 for closed-form maps
  virtual double integration_drift() const { return 0.0; }
};

struct LocalSurgerySpec {
  Chart chart;                            // orthonormal frame at the surgery point
  double ball_radius = 0.0;               // declared agreement radius
  std::shared_ptr<const LocalMap> local;  // equals the base linearization outside its support
  int shell_samples = 512;
  double shell_tol = 1e-12;
};

// Replaces base inside the chart ball by the local map, glued through the
// chart. The base must be exactly linear on the ball: globally linear with
// no overlapping perturbation ball, or covered by a linear_on certificate.
// The result agrees with base bit-for-bit outside the local support radius.
SmoothMap apply_surgery(const SmoothMap& base, const LocalSurgerySpec& spec);

// Standalone gluing map: the identity outside the local support radius, and
// chart^-1 . (lam^-1 . local) . chart inside. Checks that local matches lam
// on the shell between its support and ball_radius, so the glue is seamless.
struct RearrangementSpec {
  Chart chart;
  Mat3 lam = Mat3::Identity();  // normalizing linearization, chart coordinates
  double ball_radius = 0.0;
  std::shared_ptr<const LocalMap> local;
  int shell_samples = 512;
  double shell_tol = 1e-12;
  std::string label = "rearr";
};
SmoothMap make_rearrangement(const RearrangementSpec& spec);

// Trace of how a surgery was resolved; exposed for construction reports.
struct SurgeryResolution {
  Mat3 torus_linearization;
  Mat3 chart_linearization;
  double gate_radius = 0.0;
};
SurgeryResolution resolve_surgery(const SmoothMap& base, const LocalSurgerySpec& spec);

}  // namespace ergotorus
