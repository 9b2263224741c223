#pragma once

#include <random>
#include <string>
#include <vector>

#include "kbp/tensor.hpp"
#include "kbp/tn_graph.hpp"

namespace kbp::testing {

// Element-wise nested-loop contraction, independent of the GEMM path.
Tensor brute_contract(const Tensor& a, const std::vector<LegId>& legs_a, const Tensor& b,
                      const std::vector<LegId>& legs_b);

// ||a - b|| / ||b|| after folding scale exponents; b's leg order is matched to a.
double relative_difference(const Tensor& a, const Tensor& b);

// Ket (p, legs...) contracted with its conjugate over p; every virtual pair fused ket-major.
Tensor braket_of(const Tensor& ket);

// rows x cols grid, node "r{i}c{j}", legs listed counter-clockwise (E, N, W, S).
// With braket=true each node is braket_of a random ket of bond `bond`.
TNGraph square_grid(std::size_t rows, std::size_t cols, std::size_t bond, std::mt19937_64& rng,
                    bool braket = true);
std::string grid_id(std::size_t r, std::size_t c);
SweepPlan row_major_plan(std::size_t rows, std::size_t cols);

// Random tree on n nodes with leg extents in [1, max_dim] (closed network).
TNGraph random_tree(std::size_t n, std::size_t max_dim, std::mt19937_64& rng);
// Longest shortest path between nodes.
std::size_t tree_diameter(const TNGraph& tn);

// Exact environment of `node`: everything else contracted, legs named like the node's legs.
Tensor exact_environment(const TNGraph& tn, const NodeId& node);

// || a - phase * b || for unit-normalized a, b with the optimal phase.
double aligned_distance(const Tensor& a, const Tensor& b);

// Closed 2 x 2 torus of braket nodes (legs E, N, W, S) from random kets of bond D;
// `positive` takes absolute values of the ket entries.
TNGraph braket_torus(std::size_t D, std::mt19937_64& rng, bool positive = false);

}  // namespace kbp::testing
