#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "nvjac/frames.hpp"
#include "nvjac/solver.hpp"

namespace nvjac {

// Sampling layout for admissibility checks: an interior lattice with the
// interface tubes removed plus one-sided probe pairs along every interface.
struct GridSpec {
  double spacing = 0.0;          // lattice pitch; <= 0 means the mesh size h
  double tube_halfwidth = 0.0;   // <= 0 means 2h
  double probe_offset = 0.0;     // <= 0 means 2h
  int probes_per_interface = 64;
};

// P x (d+1) matrix whose row l is (d1 u_l, d2 u_l, u_l)(x), one-sided.
Eigen::MatrixXd jac_matrix(const std::vector<SolutionField>& us, const Vec2& x, int side = 0);

// ((A Du + b u) . f1, Du . f2, u) at x, one-sided.
Eigen::RowVector3d flux_jac(const SolutionField& u, const FrameField& frames,
                            const OperatorSpec& op, const Vec2& x, int side = 0);

int matrix_rank(const Eigen::MatrixXd& m, double rel_threshold = 1e-8);

// Sum over (d+1)-subsets of |det| of the selected rows.
double det_margin(const Eigen::MatrixXd& rows);

// Precomputed per-sample rows of every field, reusable across recombinations.
struct SampleTable {
  struct Point {
    Vec2 x;
    int side = 0;
    int interface_id = 0;  // 0 for lattice samples; probe pairs are adjacent ±
    int pair = -1;         // index of the opposite-side probe, -1 for lattice
  };
  std::vector<Point> points;
  // rows[f] is S x 3: row s = (d1 u_f, d2 u_f, u_f) at points[s]
  std::vector<Eigen::MatrixXd> rows;
  int field_count() const { return static_cast<int>(rows.size()); }
};

SampleTable build_sample_table(const std::vector<SolutionField>& us, const GridSpec& grid);

struct JacobianSampleRecord {
  Vec2 x;
  int side = 0;
  int interface_id = 0;
  int rank = 0;
  double margin = 0.0;
};

struct InterfaceProbeRecord {
  int interface_id = 0;
  Vec2 x;
  double fluxjac_margin = 0.0;      // Det margin of the flux-Jacobian rows, + side
  double fluxjac_jump = 0.0;        // max row-wise one-sided flux-Jacobian difference
  double raw_gradient_jump = 0.0;   // max row-wise one-sided gradient difference
};

struct JacobianReport {
  int P = 0;
  double margin = std::numeric_limits<double>::infinity();  // min over samples
  bool admissible = false;
  std::vector<JacobianSampleRecord> samples;
  std::vector<InterfaceProbeRecord> interface_probes;
};

JacobianReport admissibility_margin(const std::vector<SolutionField>& us, const Scene& scene,
                                    const FrameField& frames, const OperatorSpec& op,
                                    const GridSpec& grid);

// v_i = u_i - a_i u_P without re-solving.
std::vector<SolutionField> reduce_with(const std::vector<SolutionField>& us,
                                       const Eigen::VectorXd& a);

// Rank/margin scan of the reduced family directly from a sample table.
struct ReductionCheck {
  bool ok = false;
  double min_margin = 0.0;
  int min_rank = 0;
  int max_rank = 0;
};
ReductionCheck check_reduction(const SampleTable& table, const Eigen::VectorXd& a,
                               double margin_floor = 0.0);

struct ReduceResult {
  bool ok = false;
  Eigen::VectorXd a;
  int draws_used = 0;
  int failures = 0;
  double post_margin = 0.0;
  std::vector<SolutionField> fields;
};

// Whitney projection step: draw a in [-1,1]^{P-1} from the seeded generator,
// re-check admissibility on the sample grid, redraw on failure.
ReduceResult whitney_reduce(const std::vector<SolutionField>& us, const Scene& scene,
                            const FrameField& frames, const OperatorSpec& op,
                            const GridSpec& grid, std::uint64_t seed, int retry_cap);

// Indices (i, j) maximizing |det(Du_i, Du_j)(x)|; rank J must be d+1 at x.
std::array<int, 2> gradient_subfamily(const std::vector<SolutionField>& us, const Vec2& x,
                                      int side = 0);

// P*(d, alpha) = floor((d + d* + 1)/alpha), the reduction target.
int p_star(int d, double alpha);

}  // namespace nvjac
