#include "infobif/types.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace infobif {

std::string_view to_string(BifurcationKind kind) {
  return kind == BifurcationKind::PitchforkLike ? "pitchfork_like" : "saddle_node";
}

std::string_view to_string(BranchProvenance provenance) {
  switch (provenance) {
    case BranchProvenance::UniformRoot:
      return "uniform_root";
    case BranchProvenance::PitchforkChild:
      return "pitchfork_child";
    case BranchProvenance::JumpChild:
      return "jump_child";
    case BranchProvenance::ConstrainedRecovery:
      return "constrained_recovery";
  }
  return "unknown";
}

std::vector<std::vector<int>> symmetry_groups(const Matrix& q, double tol) {
  const int n = static_cast<int>(q.rows());
  std::vector<int> owner(n, -1);
  std::vector<std::vector<int>> groups;
  for (int a = 0; a < n; ++a) {
    if (owner[a] >= 0) continue;
    owner[a] = static_cast<int>(groups.size());
    std::vector<int> g{a};
    for (int b = a + 1; b < n; ++b) {
      if (owner[b] < 0 && (q.row(a) - q.row(b)).cwiseAbs().maxCoeff() < tol) {
        owner[b] = owner[a];
        g.push_back(b);
      }
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<int> symmetry_signature(const Matrix& q, double tol) {
  std::vector<int> sizes;
  for (const auto& g : symmetry_groups(q, tol)) sizes.push_back(static_cast<int>(g.size()));
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

Matrix canonical_form(const Matrix& q) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(q.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
      if (q(a, k) != q(b, k)) return q(a, k) > q(b, k);
    }
    return false;
  });
  Matrix out(q.rows(), q.cols());
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = q.row(order[r]);
  }
  return out;
}

}  // namespace infobif
