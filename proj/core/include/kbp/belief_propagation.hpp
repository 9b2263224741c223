#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "kbp/kagome_block.hpp"
#include "kbp/mps.hpp"
#include "kbp/tensor.hpp"
#include "kbp/tn_graph.hpp"

namespace kbp {

enum class HermitizePolicy {
  Never,
  Every,  // after every update
  Auto,   // once the largest message distance drops below auto_threshold
};

enum class Schedule {
  Synchronous,  // every face reads the previous iteration's messages
  Sequential,   // updates are installed as soon as they are computed
};

struct BPConfig {
  std::size_t max_iterations = 50;
  double threshold = 1e-7;
  double damping = 1.0;  // weight of the new message
  std::size_t chi = 8;
  std::uint64_t seed = 0;
  HermitizePolicy hermitize = HermitizePolicy::Auto;
  double auto_threshold = 1e-3;
  Schedule schedule = Schedule::Synchronous;
  std::size_t workers = 1;
  std::size_t init_bond = 1;  // bond of the random factor X in X^dagger X

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// ---------------------------------------------------------------------------------------------
// Vanilla BP on a closed tensor network. One vector message per edge and direction.

struct DirectedEdge {
  std::size_t edge = 0;
  bool forward = true;  // a -> b of tn.edges()[edge]
  auto operator<=>(const DirectedEdge&) const = default;
};

struct BPResult {
  std::map<DirectedEdge, Tensor> messages;  // rank-1 tensors, leg "m", unit norm
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> history;        // largest distance per iteration
  std::vector<std::size_t> unsettled;  // messages that moved by more than the threshold
};

BPResult bp_run(const TNGraph& tn, const BPConfig& cfg);
// Outer product of incoming messages, legs in the node's leg order, unit norm.
Tensor bp_environment(const TNGraph& tn, const BPResult& result, const NodeId& node);

// ---------------------------------------------------------------------------------------------
// BlockBP: one block sending MPS messages to itself across opposite faces.

struct FaceUpdate {
  std::size_t iteration = 0;
  std::size_t face = 0;  // face whose message was replaced
  std::string face_name;
  double distance = 0.0;
  double wall_ms = 0.0;
  double truncation_error = 0.0;
};

struct BlockBPResult {
  std::vector<MPS> messages;  // one per face, attached to that face's edges in rank order
  std::size_t iterations = 0;
  bool converged = false;
  double final_distance = 0.0;
  bool hermitized = false;  // the last iteration hermitized its messages
  std::vector<FaceUpdate> log;
};

// Random PSD product messages (X^dagger X per bond), unit norm. Legs match each face's D^2 legs.
std::vector<MPS> init_messages(const Block& block, const BPConfig& cfg);
std::vector<MPS> init_messages(const Block& block, std::size_t init_bond, std::mt19937_64& rng);

// Outgoing message of face f computed from the block and every message but face f's,
// placed on the opposite face's edges.
struct OutgoingMessage {
  MPS message;
  double truncation_error = 0.0;
};
OutgoingMessage outgoing_message(const Block& block, const std::vector<MPS>& messages, std::size_t face,
                                 std::size_t chi);

BlockBPResult blockbp_run(const Block& block, const BPConfig& cfg,
                          std::optional<std::vector<MPS>> initial = std::nullopt);

// Messages for rotate_block(block, 120 * steps).
std::vector<MPS> rotate_messages(const Block& block, const std::vector<MPS>& messages, int steps);

// Header "iteration,face,distance,wall_ms".
void write_convergence_csv(std::ostream& out, const BlockBPResult& result, bool with_timing = true);

}  // namespace kbp
