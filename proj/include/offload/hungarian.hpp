#pragma once

#include <vector>

namespace offload {

/// Result of a max-weight assignment: for each left vertex the matched right
/// vertex, the total weight summed in left-vertex order, and whether every
/// left vertex got a permitted edge.
struct AssignmentResult {
  std::vector<int> match_of_left;
  double total_weight = 0.0;
  bool complete = false;
};

/// Exact maximum-weight matching that covers every left vertex, via the
/// Hungarian algorithm with potentials on the negated weights. `weight` is
/// left-major with `rows <= cols`; entries below `forbidden_below` mark
/// non-edges. Deterministic: scan order breaks ties.
AssignmentResult max_weight_assignment(const std::vector<double>& weight, int rows,
                                       int cols, double forbidden_below);

}  // namespace offload
