#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "kbp/kagome_block.hpp"
#include "run_config.hpp"

namespace kbp::cli {

// <output.dir>/<output.prefix>_<suffix>; creates the directory.
std::filesystem::path output_file(const RunConfig& cfg, const std::string& suffix);

// Unit cell from `state` when set, otherwise random tensors from the master seed.
UnitCell initial_unit_cell(const RunConfig& cfg);

struct RepresentRow {
  std::string method;
  int N = 0;
  std::size_t tensors = 0;
  std::size_t bp_iterations = 0;
  double one_minus_fidelity = 0.0;
  double wall_ms = 0.0;
};

// Two-site density matrices of one bond from each method and block size, scored against a
// larger block with random boundary messages.
std::vector<RepresentRow> represent_rows(const RunConfig& cfg, const UnitCell& uc, std::ostream& log);
// Header "method,N,tensors,bp_iterations,one_minus_fidelity[,wall_ms]".
void write_represent_csv(std::ostream& out, const std::vector<RepresentRow>& rows, bool with_timing = true);

int cmd_ite(const RunConfig& cfg, std::ostream& log);
int cmd_bp(const RunConfig& cfg, std::ostream& log);
int cmd_contract(const RunConfig& cfg, std::ostream& log);
int cmd_represent(const RunConfig& cfg, std::ostream& log);
int cmd_validate_config(const RunConfig& cfg, std::ostream& log);

// Parses the command line, layers the configuration and runs a command. Returns the exit
// status: 0 on success, 2 for configuration errors, 1 for anything else.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kbp::cli
