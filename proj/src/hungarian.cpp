#include "offload/hungarian.hpp"

#include <limits>
#include <stdexcept>

namespace offload {

namespace {
// Cost assigned to forbidden cells. Real edge weights live in (0, 1]; any
// matching forced through a forbidden cell ends up detectably expensive.
constexpr double kForbiddenCost = 1.0e9;
}  // namespace

AssignmentResult max_weight_assignment(const std::vector<double>& weight, int rows,
                                       int cols, double forbidden_below) {
  if (rows > cols)
    throw std::invalid_argument("max_weight_assignment: needs rows <= cols");
  if (static_cast<int>(weight.size()) != rows * cols)
    throw std::invalid_argument("max_weight_assignment: bad matrix size");

  auto cost = [&](int i, int j) {
    double w = weight[static_cast<std::size_t>(i) * cols + j];
    return w < forbidden_below ? kForbiddenCost : -w;
  };

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] = row matched to column j, 0 = free
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);

  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    // augment along the found path
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult res;
  res.match_of_left.assign(rows, -1);
  for (int j = 1; j <= cols; ++j)
    if (p[j] != 0) res.match_of_left[p[j] - 1] = j - 1;

  res.complete = true;
  res.total_weight = 0.0;
  for (int i = 0; i < rows; ++i) {
    int j = res.match_of_left[i];
    double w = weight[static_cast<std::size_t>(i) * cols + j];
    if (j < 0 || w < forbidden_below) {
      res.complete = false;
    } else {
      res.total_weight += w;
    }
  }
  return res;
}

}  // namespace offload
