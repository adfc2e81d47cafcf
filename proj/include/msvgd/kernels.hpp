#pragma once

#include <cmath>
#include <variant>

#include "msvgd/types.hpp"

namespace msvgd {

enum class KernelVariant {
  // k(x, x') = exp(-2 ||x - x'||^2 / h^2)
  AutoRBF,
  // k(x, x') = exp(-||x - x'||^2 / h)
  MedianRBF,
};

struct FixedBandwidth {
  double h = 5.0;
};

// Bandwidth recomputed from the current cloud: max(floor, med^2 / log(N + 1)).
struct MedianHeuristic {
  double floor = 1e-3;
};

using BandwidthPolicy = std::variant<FixedBandwidth, MedianHeuristic>;

struct KernelSpec {
  KernelVariant variant = KernelVariant::AutoRBF;
  BandwidthPolicy bandwidth = FixedBandwidth{};

  static KernelSpec auto_rbf(double h = 5.0) { return {KernelVariant::AutoRBF, FixedBandwidth{h}}; }
  static KernelSpec median_rbf(double floor = 1e-3) {
    return {KernelVariant::MedianRBF, MedianHeuristic{floor}};
  }
};

// Throws ContractViolation if the bandwidth policy carries a non-positive value.
void validate(const KernelSpec& spec);

double rbf_eval(const KernelSpec& spec, double h, const VectorRef& x, const VectorRef& y);

// Gradient of k(x, y) with respect to x.
Vector rbf_grad1(const KernelSpec& spec, double h, const VectorRef& x, const VectorRef& y);

// Median heuristic over the N(N-1)/2 pairwise Euclidean distances of the rows of `points`.
double median_heuristic(const Particles& points, double floor);

// Bandwidth for a kernel evaluated on `points`: fixed, or from the median heuristic.
double resolve_bandwidth(const KernelSpec& spec, const Particles& points);

// Kernel value as a function of the squared distance; shared by the dense SVGD loops.
inline double rbf_from_sq_dist(KernelVariant variant, double h, double sq_dist) {
  return variant == KernelVariant::AutoRBF ? std::exp(-2.0 * sq_dist / (h * h))
                                           : std::exp(-sq_dist / h);
}

// Factor c such that grad_1 k(x, y) = c * (x - y) * k(x, y).
inline double rbf_grad_factor(KernelVariant variant, double h) {
  return variant == KernelVariant::AutoRBF ? -4.0 / (h * h) : -2.0 / h;
}

}  // namespace msvgd
