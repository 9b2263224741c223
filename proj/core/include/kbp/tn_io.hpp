#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kbp/tn_graph.hpp"

namespace kbp {

// Complex entries as little-endian (re, im) float64 pairs, base64 encoded.
std::string encode_payload(std::span<const Complex> data);
std::vector<Complex> decode_payload(const std::string& text);

std::string tn_to_json(const TNGraph& tn);
TNGraph tn_from_json(const std::string& text);
std::string plan_to_json(const SweepPlan& plan);
SweepPlan plan_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace kbp
