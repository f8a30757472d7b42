// Copyright 2026 The qfilter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>

#include "qfilter/davies.hpp"
#include "qfilter/errors.hpp"

namespace qfilter {

GaussLegendre gauss_legendre(int order) {
  if (order < 1 || order > 256) throw InvalidInput("Gauss-Legendre order must be in [1, 256]");
  const int n = order;
  GaussLegendre gl;
  gl.nodes.assign(static_cast<std::size_t>(n), 0.0);
  gl.weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre recurrence for P_n(x) and P_{n-1}(x).
      double p1 = 1.0, p2 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k - 1.0) * x * p2 - (k - 1.0) * p3) / k;
      }
      dp = n * (x * p1 - p2) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) {
        // One more evaluation so dp matches the final root.
        p1 = 1.0;
        p2 = 0.0;
        for (int k = 1; k <= n; ++k) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * k - 1.0) * x * p2 - (k - 1.0) * p3) / k;
        }
        dp = n * (x * p1 - p2) / (x * x - 1.0);
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    gl.nodes[lo] = -x;
    gl.nodes[hi] = x;
    gl.weights[lo] = w;
    gl.weights[hi] = w;
  }
  if (n % 2 == 1) gl.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return gl;
}

namespace {

// Depth-first walk over jump records; every node adds the mass of the
// records that stop at that depth.
class SectorWalker {
 public:
  SectorWalker(const UnravelingSplit& split, double horizon, const GuichardetOptions& opt)
      : flow_(split.smooth), horizon_(horizon), opt_(opt), gl_(gauss_legendre(opt.order)) {
    const Index n = split.smooth.dim();
    const Index n2 = n * n;
    const CVector id = vec(CMatrix::Identity(n, n));
    jump_ = Superoperator::conjugation(split.jump_operator).matrix();
    if (flow_.diagonalized()) {
      const CMatrix& w = flow_.eigenvectors();
      const CMatrix& wi = flow_.inverse_eigenvectors();
      jump_ = wi * jump_ * w;
      trace_ = (id.transpose() * w).transpose();
    } else {
      trace_ = id;
    }
    mass_.assign(static_cast<std::size_t>(opt.max_sector) + 1, 0.0);
    buffers_.assign(static_cast<std::size_t>(opt.max_sector) + 2, CVector(n2));
    scratch_.assign(static_cast<std::size_t>(opt.max_sector) + 2, CVector(n2));
  }

  std::vector<double> run(const CVector& plain_start, double start) {
    CVector y = flow_.diagonalized() ? CVector(flow_.inverse_eigenvectors() * plain_start)
                                     : plain_start;
    y = propagate(start, y);
    descend(0, start, y);
    return mass_;
  }

 private:
  CVector propagate(double dt, const CVector& y) const {
    CVector out(y.size());
    propagate_into(dt, y, out);
    return out;
  }

  void propagate_into(double dt, const CVector& y, CVector& out) const {
    if (flow_.diagonalized()) {
      const CVector& l = flow_.eigenvalues();
      for (Index k = 0; k < y.size(); ++k) out(k) = std::exp(l(k) * dt) * y(k);
    } else {
      out.noalias() = expm(flow_.generator(), dt).matrix() * y;
    }
  }

  // Tr of y propagated to the horizon; transpose without conjugation.
  double mass_at_horizon(double a, const CVector& y, CVector& scratch) const {
    propagate_into(horizon_ - a, y, scratch);
    Complex s{0.0, 0.0};
    for (Index k = 0; k < scratch.size(); ++k) s += trace_(k) * scratch(k);
    return s.real();
  }

  void descend(int depth, double a, const CVector& y) {
    const auto d = static_cast<std::size_t>(depth);
    CVector& scratch = scratch_[d];
    mass_[d] += mass_at_horizon(a, y, scratch);
    if (depth == opt_.max_sector) return;
    const double half = 0.5 * (horizon_ - a);
    if (!(half > 0.0)) return;
    CVector& next = buffers_[d + 1];
    for (std::size_t i = 0; i < gl_.nodes.size(); ++i) {
      const double ui = a + half * (1.0 + gl_.nodes[i]);
      propagate_into(ui - a, y, scratch);
      next.noalias() = jump_ * scratch;
      next *= half * gl_.weights[i];
      descend(depth + 1, ui, next);
    }
  }

  SemigroupPropagator flow_;
  double horizon_;
  GuichardetOptions opt_;
  GaussLegendre gl_;
  CMatrix jump_;
  CVector trace_;
  std::vector<double> mass_;
  std::vector<CVector> buffers_;
  std::vector<CVector> scratch_;
};

}  // namespace

GuichardetMass guichardet_mass(const UnravelingSplit& split, const DensityMatrix& rho0,
                               double horizon, const GuichardetOptions& options) {
  if (rho0.dim() != split.smooth.dim()) throw DimensionMismatch("guichardet_mass: state dimension");
  if (!std::isfinite(horizon) || horizon < 0.0) throw InvalidInput("horizon must be >= 0");
  if (options.max_sector < 0) throw InvalidInput("max_sector must be >= 0");
  if (!(options.window_start >= 0.0) || options.window_start > horizon) {
    throw InvalidInput("window_start must lie in [0, horizon]");
  }
  SectorWalker walker(split, horizon, options);
  GuichardetMass out;
  out.sector = walker.run(vec(rho0.matrix()), options.window_start);
  for (double m : out.sector) out.total += m;
  return out;
}

}  // namespace qfilter
