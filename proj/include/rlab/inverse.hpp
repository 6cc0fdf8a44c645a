#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "rlab/parallel.hpp"
#include "rlab/point.hpp"
#include "rlab/system.hpp"

namespace rlab {

/// Representatives of Z^m / A Z^m.
struct CosetSet {
  std::vector<IntVector> reps;
  std::size_t size() const { return reps.size(); }
};

/// Integer points of the half-open parallelepiped A [0,1)^m, in
/// lexicographic order. Membership uses the exact adjugate, so there is no
/// rounding at the faces.
CosetSet coset_representatives(const IntMatrix& A);

struct NewtonConfig {
  double tol = 1e-12;
  int max_iters = 50;
  double min_branch_separation = 1e-3;
};

struct Preimage {
  Point point;
  int label = 0;
};

/// Inverse branches of one system with the coset data precomputed. Cheap to
/// copy and safe to share between threads.
class InverseBranches {
 public:
  InverseBranches(const System& sys, NewtonConfig cfg = {});

  const System& system() const { return sys_; }
  const CosetSet& cosets() const { return cosets_; }
  const NewtonConfig& config() const { return cfg_; }
  int degree() const { return sys_.degree(); }

  /// All d preimages of x, ordered by branch label. Throws NewtonDivergence
  /// or BranchCollision.
  std::vector<Preimage> preimages(const Point& x) const;

  /// Same as preimages() but reuses `out` (cleared first).
  void preimages_into(const Point& x, std::vector<Preimage>& out) const;

  /// The single preimage with the given branch label.
  Point branch(const Point& x, int label) const;

 private:
  Point toral_branch(const Point& x, std::size_t coset) const;
  // Solves the torus part g(u') = u on the lift seeded from coset `k`.
  void skew_torus_branch(double u1, double u2, std::size_t coset, double& v1, double& v2) const;

  System sys_;
  NewtonConfig cfg_;
  CosetSet cosets_;
  std::vector<Vec> shifts_;  // A^{-1} k for each coset representative
};

/// Convenience wrapper over InverseBranches.
std::vector<Preimage> preimages(const System& sys, const Point& x, const NewtonConfig& cfg = {});

struct TreeNode {
  Point point;
  std::int64_t parent = -1;
  int label = -1;
  /// Mass of this node when the root carries mass 1 and every node splits
  /// its mass evenly among its surviving children.
  double weight = 1.0;
};

struct TreeOptions {
  NewtonConfig newton;
  std::size_t node_budget = 10'000'000;
  /// Basin half-width; NaN selects default_v_margin(sys).
  double v_margin = std::numeric_limits<double>::quiet_NaN();
  unsigned threads = 1;
};

struct PreimageTree {
  Point root;
  int depth = 0;
  /// levels[0] holds the root alone.
  std::vector<std::vector<TreeNode>> levels;
  /// Children discarded because they left U.
  std::size_t pruned = 0;

  std::vector<std::size_t> level_sizes() const;
};

/// Breadth-first region-pruned preimage tree of depth n. Per-level node
/// order is (parent index, branch label) whatever the thread count.
PreimageTree preimage_tree(const System& sys, const Point& z, int n, const TreeOptions& opt = {});

/// Streams the levels of the same tree without retaining old ones; `visit`
/// sees each level once, level 0 first.
void for_each_level(const System& sys, const Point& z, int n, const TreeOptions& opt,
                    const std::function<void(int, const std::vector<TreeNode>&)>& visit);

/// Expands one level into the next. Exposed for callers that build trees
/// incrementally.
std::vector<TreeNode> expand_level(const InverseBranches& inv, const std::vector<TreeNode>& level,
                                   const Executor& exec, std::size_t* pruned = nullptr);

void write_tree_csv(std::ostream& os, const System& sys, const PreimageTree& tree);

struct RepellorReport {
  std::size_t grid_points = 0;
  std::size_t with_preimage_in_region = 0;
  double fraction = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
  int min_count = std::numeric_limits<int>::max();
  int max_count = 0;
  bool count_constant = false;
  std::size_t failures = 0;  // grid points where branch continuation failed
  std::vector<int> counts;   // per grid point, grid order

  bool ok() const { return fraction == 1.0 && count_constant && failures == 0; }
};

/// Grid check of the repellor condition closure(U) in f(U). Toral systems
/// use a uniform grid on the torus; PerturbedSkew a grid over
/// radius x angle x T^2 covering the closed annulus.
RepellorReport check_repellor(const System& sys, double grid_step, const NewtonConfig& cfg = {},
                              unsigned threads = 1);

/// orbit[k], k = 0..m, with orbit[m] = x and orbit[k] a preimage of
/// orbit[k+1] inside U, the branch drawn uniformly from `seed`. orbit[0] is
/// a point whose forward orbit stays in U for m steps.
std::vector<Point> backward_orbit(const System& sys, const Point& x, int m, std::uint64_t seed,
                                  const NewtonConfig& cfg = {});

}  // namespace rlab
