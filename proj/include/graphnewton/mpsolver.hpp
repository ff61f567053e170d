#pragma once

#include <Eigen/Dense>

#include "graphnewton/kkt.hpp"
#include "graphnewton/treedecomp.hpp"

namespace gn {

/// Assignment of KKT pieces to bags. Every Q block, rhs block, and constraint
/// row lands in exactly one covering bag; summing over bags reconstructs the
/// system.
struct DistributedBlocks {
  std::vector<std::vector<std::pair<int, int>>> q_blocks;  // per bag: (a, b) keys into k.Q
  std::vector<std::vector<int>> rhs_nodes;                 // per bag: primal rhs blocks
  std::vector<std::vector<int>> constraint_rows;           // per bag: indices into k.constraints
};

/// Requires td to cover the moralized support of k (vertex index == node index).
DistributedBlocks distribute_blocks(const KktSystem& k, const TreeDecomposition& td);

/// Partial-elimination Schur data passed child-to-parent.
struct GatherMessage {
  std::vector<int> sep_scalars;  // global primal scalar indices of the separator
  Mat Q;                         // over sep scalars
  Vec b;
  std::vector<int> fwd_mult;  // global multiplier scalar indices forwarded un-eliminated
  Mat G;                      // fwd_mult x sep_scalars residual constraint rows
  Vec h;
  Mat C;  // coupling among forwarded multipliers (zero unless pivots were deferred)
};

/// Elimination record of one clique, retained for back-substitution.
struct CliqueFactor {
  std::vector<int> elim;  // local indices eliminated
  std::vector<int> kept;  // local indices remaining, original order
  Eigen::FullPivLU<Mat> lu;  // M(elim, elim)
  Mat cross;                 // M(elim, kept)
  Vec rhs_elim;
  Mat schur;  // reduced system over kept
  Vec rhs_kept;
};

/// Partial symmetric-indefinite elimination of a dense clique system M x = rhs.
/// All of must_eliminate is eliminated (else SingularPivotError); members of
/// may_eliminate (multiplier rows) are eliminated as far as rank-revealing
/// pivoting allows, the rest are forwarded. Pivot tolerance is
/// 1e-12 * max|entry| of the candidate block.
CliqueFactor factorize_clique(const Mat& M, const Vec& rhs,
                              const std::vector<int>& must_eliminate,
                              const std::vector<int>& may_eliminate, int bag_id = -1);

struct TreeFactorization {
  int root = 0;
  std::vector<int> bag_parent;       // -1 for root
  std::vector<int> gather_order;     // post-order used
  // Per bag: global scalar indices eliminated there plus the factor record.
  struct BagRecord {
    std::vector<int> elim_globals;
    std::vector<int> kept_globals;
    Eigen::FullPivLU<Mat> lu;
    Mat cross;
    Vec rhs_elim;
  };
  std::vector<BagRecord> records;     // indexed by bag, unused for root
  std::vector<GatherMessage> messages;  // indexed by bag (message to parent)
  std::vector<int> root_globals;
  Eigen::FullPivLU<Mat> root_lu;
  Vec root_rhs;
  Mat root_matrix;
};

/// Post-order gather pass: eliminates each bag's interior and sends Schur
/// messages rootward, leaving a dense system over the root bag.
TreeFactorization gather(const KktSystem& k, const TreeDecomposition& td,
                         const DistributedBlocks& dist, int root = 0);

/// Pre-order back-substitution recovering every eliminated primal and multiplier.
KktSolution backsolve(const KktSystem& k, const TreeFactorization& tf);

/// distribute -> gather -> root dense solve -> backsolve.
KktSolution solve_kkt_tree(const KktSystem& k, const TreeDecomposition& td, int root = 0);

}  // namespace gn
