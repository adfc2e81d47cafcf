#include "msvgd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "msvgd/errors.hpp"

namespace msvgd {

void validate(const KernelSpec& spec) {
  if (const auto* fixed = std::get_if<FixedBandwidth>(&spec.bandwidth)) {
    detail::require(fixed->h > 0.0, "kernel bandwidth must be positive");
  } else {
    detail::require(std::get<MedianHeuristic>(spec.bandwidth).floor > 0.0,
                    "median heuristic floor must be positive");
  }
}

namespace {

void check_args(double h, const VectorRef& x, const VectorRef& y) {
  detail::require(x.size() == y.size(), "kernel arguments differ in dimension");
  detail::require(h > 0.0, "kernel bandwidth must be positive");
}

}  // namespace

double rbf_eval(const KernelSpec& spec, double h, const VectorRef& x, const VectorRef& y) {
  check_args(h, x, y);
  return rbf_from_sq_dist(spec.variant, h, (x - y).squaredNorm());
}

Vector rbf_grad1(const KernelSpec& spec, double h, const VectorRef& x, const VectorRef& y) {
  check_args(h, x, y);
  const double k = rbf_from_sq_dist(spec.variant, h, (x - y).squaredNorm());
  return (rbf_grad_factor(spec.variant, h) * k) * (x - y);
}

double median_heuristic(const Particles& points, double floor) {
  detail::require(points.rows() >= 1, "median heuristic needs at least one point");
  detail::require(floor > 0.0, "median heuristic floor must be positive");
  const Eigen::Index n = points.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dists.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  double med = 0.0;
  if (!dists.empty()) {
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    med = m % 2 == 1 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  }
  return std::max(floor, med * med / std::log(static_cast<double>(n) + 1.0));
}

double resolve_bandwidth(const KernelSpec& spec, const Particles& points) {
  if (const auto* fixed = std::get_if<FixedBandwidth>(&spec.bandwidth)) {
    detail::require(fixed->h > 0.0, "kernel bandwidth must be positive");
    return fixed->h;
  }
  return median_heuristic(points, std::get<MedianHeuristic>(spec.bandwidth).floor);
}

}  // namespace msvgd
