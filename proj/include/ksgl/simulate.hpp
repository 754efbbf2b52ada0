#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ksgl/core.hpp"
#include "ksgl/solver.hpp"

namespace ksgl {

enum class GraphKind { random, clustered };

struct GraphSpec {
  GraphKind kind = GraphKind::random;
  int size = 0;          // p
  int target_nnz = 0;    // random kind, counts the diagonal
  int num_blocks = 5;    // clustered kind
  std::uint64_t seed = 0;

  void validate() const;
};

// theta = A A^T + diag(sigma_i + 1e-4), with A_ij in {-1, 0, 1} and
// P(A_ij = 0) calibrated so the expected fill of theta hits target_nnz.
Matrix gen_random_graph(const GraphSpec& spec, Rng& rng);

// Block-diagonal; each block is a random graph aiming at `size` nonzeros
// (capped by what the block can hold), redrawn until connected when that
// target leaves room for a connected support.
Matrix gen_cluster_graph(const GraphSpec& spec, Rng& rng);

Matrix gen_graph(const GraphSpec& spec, Rng& rng);

// Expected nonzero count of A A^T for an n x n A whose entries are nonzero
// with probability `density` (diagonal counted, always nonzero here).
double expected_fill(int n, double density);

// Y = Q_psi Z' Q_theta^T with Z'_kl = Z_kl / sqrt(lambda_theta_l + lambda_psi_k),
// so vec(Y) ~ N(0, (theta (+) psi)^-1).
std::vector<Matrix> sample_data(const KsModel& model, int n, Rng& rng);

std::size_t support_size(const Matrix& m, double threshold = 0.0);

const char* to_string(GraphKind k);
GraphKind parse_graph_kind(const std::string& s);

}  // namespace ksgl
