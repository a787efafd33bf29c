#pragma once

#include <map>

#include "nvjac/frames.hpp"
#include "nvjac/solver.hpp"

namespace nvjac {

// Ground truth for synthetic reconstruction runs: scalar conductivity per
// region, A = gamma I, b = c = q = 0.
struct Phantom {
  Scene scene;
  std::vector<Expr> gamma;  // per region, closed form
  Vec2 anchor = Vec2::Zero();
  double anchor_value = 1.0;

  double gamma_at(const Vec2& x) const { return gamma.at(scene.region_of(x) - 1)(x); }
  std::shared_ptr<CoefficientSet> coefficients(double lambda) const;
};

struct JumpEstimate {
  int interface_id = 0;  // child region / circle id
  double value = 0.0;    // [ln gamma] across the interface, parent to child
  double dispersion = 0.0;
  int used = 0;
  int excluded = 0;
};

// Flux-continuity jump recovery: at interface samples pick the member with the
// largest one-sided gradient, difference the log normal derivatives across
// probe pairs, median over samples.
JumpEstimate recover_jumps(const std::vector<SolutionField>& us, const Interface& iface,
                           const FrameField& frames, double probe_offset, int n_samples = 64);

struct GradientField {
  int region = 0;
  double spacing = 0.0;
  std::vector<Vec2> points;
  std::vector<Vec2> g;  // recovered D ln gamma
  std::vector<double> residual;
  std::vector<char> flagged;  // rank-deficient stack
};

// Pointwise least squares for D ln gamma from Du_l . g = -Lap u_l.
GradientField recover_log_gradient(const std::vector<SolutionField>& us, int region,
                                   double spacing, double tube_halfwidth);

struct ReconResult {
  std::map<int, JumpEstimate> jumps;        // keyed by interface (child) id
  std::vector<GradientField> gradients;     // per region
  std::vector<double> region_offset;        // additive ln gamma constant per region
  double anchor_value = 1.0;
  Vec2 anchor = Vec2::Zero();

  // ln gamma at x: potential interpolation plus the region constant
  double log_gamma_at(const Vec2& x) const;
  double gamma_at(const Vec2& x) const { return std::exp(log_gamma_at(x)); }

  double gamma_rel_l2_error = -1.0;  // vs phantom, off the interface tubes
  double tube_halfwidth = 0.0;

 private:
  friend ReconResult assemble_conductivity(const Scene& scene,
                                           const std::vector<JumpEstimate>& jumps,
                                           const std::vector<GradientField>& gradients,
                                           const Vec2& anchor, double anchor_value,
                                           const Phantom* truth);
  Scene scene_;
  // per region: lattice potential (ln gamma up to a constant)
  struct Potential {
    double spacing = 0.0;
    Vec2 origin = Vec2::Zero();
    std::vector<Vec2> points;
    std::vector<double> phi;
    std::map<std::pair<long, long>, int> index;  // lattice key -> point id

    std::pair<long, long> key(const Vec2& p) const {
      return {std::lround((p.x() - origin.x()) / spacing),
              std::lround((p.y() - origin.y()) / spacing)};
    }
    int nearest(const Vec2& x) const;  // ring search on the lattice
  };
  std::vector<Potential> potentials_;
};

// Per-region potential fit of the recovered gradients, constants stitched
// across interfaces along the nesting tree, normalization at the anchor.
ReconResult assemble_conductivity(const Scene& scene, const std::vector<JumpEstimate>& jumps,
                                  const std::vector<GradientField>& gradients, const Vec2& anchor,
                                  double anchor_value, const Phantom* truth = nullptr);

struct ReconOptions {
  double h = 1.0 / 64.0;
  double lambda = 0.25;
  std::vector<Expr> traces;       // boundary traces of the internal data family
  double probe_offset_factor = 2.0;  // probe distance in units of h
  double gradient_spacing_factor = 2.0;
  int jump_samples = 64;
};

// Forward solves under the phantom, jump recovery on every interface,
// per-region gradient recovery, assembly. The full application pipeline.
ReconResult run_recon(const Phantom& phantom, const ReconOptions& opts);

}  // namespace nvjac
