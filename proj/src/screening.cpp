#include <cmath>
#include <numeric>

#include "ksgl/solver.hpp"

namespace ksgl {

std::vector<int> threshold_components(const Matrix& m, double threshold, int* count) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      if (std::abs(m(i, j)) > threshold) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  // Relabel so that components are numbered by their smallest member.
  std::vector<int> label(static_cast<std::size_t>(n), -1), out(static_cast<std::size_t>(n));
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (label[r] < 0) label[r] = next++;
    out[i] = label[r];
  }
  if (count) *count = next;
  return out;
}

Screening screen_blocks(const SampleStats& stats, const SolverConfig& cfg) {
  Screening s;
  s.theta_component = threshold_components(stats.s, cfg.gamma_theta, &s.theta_blocks);
  s.psi_component = threshold_components(stats.t, cfg.gamma_psi, &s.psi_blocks);
  return s;
}

}  // namespace ksgl
