#include "kbp/tn_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_tensor.hpp"
#include "kbp/error.hpp"

namespace kbp {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t v = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) v |= bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kAlphabet[v & 63] : '=';
  }
  return out;
}

std::vector<std::uint8_t> unbase64(const std::string& text) {
  int table[256];
  std::fill(std::begin(table), std::end(table), -1);
  for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kAlphabet[i])] = i;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    int v = table[static_cast<unsigned char>(c)];
    if (v < 0) throw FormatError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

void put_double(std::vector<std::uint8_t>& out, double x) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>((u >> (8 * b)) & 0xFF));
}

double get_double(const std::uint8_t* p) {
  std::uint64_t u = 0;
  for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(u);
}

nlohmann::json parse(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
}

nlohmann::json leg_json(const LegRef& r) { return nlohmann::json::array({r.node, r.leg}); }

LegRef leg_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("leg reference must be [node, leg]");
  return {j[0].get<std::string>(), j[1].get<std::string>()};
}

}  // namespace

std::string encode_payload(std::span<const Complex> data) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(data.size() * 16);
  for (const auto& z : data) {
    put_double(bytes, z.real());
    put_double(bytes, z.imag());
  }
  return base64(bytes);
}

std::vector<Complex> decode_payload(const std::string& text) {
  auto bytes = unbase64(text);
  if (bytes.size() % 16 != 0) throw FormatError("payload length is not a multiple of 16 bytes");
  std::vector<Complex> out(bytes.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Complex(get_double(&bytes[16 * i]), get_double(&bytes[16 * i + 8]));
  }
  return out;
}

std::string tn_to_json(const TNGraph& tn) {
  nlohmann::json j;
  j["format"] = "kbp-tn";
  j["version"] = 1;
  j["nodes"] = nlohmann::json::array();
  for (const auto& id : tn.node_ids()) {
    auto t = detail::tensor_to_json(tn.node(id));
    t["id"] = id;
    j["nodes"].push_back(t);
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : tn.edges()) j["edges"].push_back(nlohmann::json::array({leg_json(e.a), leg_json(e.b)}));
  j["open_legs"] = nlohmann::json::array();
  for (const auto& r : tn.open_legs()) j["open_legs"].push_back(leg_json(r));
  return j.dump(1);
}

TNGraph tn_from_json(const std::string& text) {
  auto j = parse(text);
  TNGraph tn;
  try {
    for (const auto& n : j.at("nodes")) tn.add_node(n.at("id").get<std::string>(), detail::tensor_from_json(n));
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw FormatError("edge must be [legA, legB]");
      tn.connect(leg_from(e[0]), leg_from(e[1]));
    }
    if (j.contains("open_legs")) {
      std::vector<LegRef> open;
      for (const auto& r : j.at("open_legs")) open.push_back(leg_from(r));
      tn.set_open_legs(std::move(open));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
  tn.validate();
  return tn;
}

std::string plan_to_json(const SweepPlan& plan) {
  nlohmann::json j;
  j["swallow_order"] = plan.swallow_order;
  j["emit_legs"] = nlohmann::json::array();
  for (const auto& r : plan.emit_legs) j["emit_legs"].push_back(leg_json(r));
  return j.dump(1);
}

SweepPlan plan_from_json(const std::string& text) {
  auto j = parse(text);
  SweepPlan plan;
  try {
    plan.swallow_order = j.at("swallow_order").get<std::vector<std::string>>();
    if (j.contains("emit_legs")) {
      for (const auto& r : j.at("emit_legs")) plan.emit_legs.push_back(leg_from(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
  return plan;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace kbp
