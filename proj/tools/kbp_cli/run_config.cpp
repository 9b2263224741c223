#include "run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "kbp/error.hpp"
#include "kbp/tn_io.hpp"

namespace kbp::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (used != value.size()) bad_value(key, value, "a number");
  return x;
}

long to_long(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
  if (used != value.size()) bad_value(key, value, "an integer");
  return x;
}

void choice(const RunConfig& cfg, const std::string& key, const std::vector<std::string>& allowed) {
  const std::string v = lower(cfg.get(key));
  if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : " | ") + a;
  bad_value(key, cfg.get(key), list);
}

// Message without the "ConfigError: " prefix, for rethrowing with more context.
std::string bare(const ConfigError& e) {
  const std::string m = e.what();
  const std::string tag = "ConfigError: ";
  return m.rfind(tag, 0) == 0 ? m.substr(tag.size()) : m;
}

}  // namespace

RunConfig::RunConfig() {
  entries_ = {
      {"system", "kagome", "kagome | single_bond"},
      {"hamiltonian", "heisenberg", "bond term; heisenberg is (XX + YY + ZZ) / 4"},
      {"seed", "0", "master seed; every random stream is derived from it"},
      {"d", "2", "physical dimension"},
      {"D", "2", "bond dimension"},
      {"N", "2", "hexagonal block size"},
      {"chi", "8", "truncation of BlockBP messages and of the block-to-core contraction"},
      {"dt_schedule", "0.1*100, 0.05*100, 0.01*200, 0.001*200", "imaginary time steps as value*count"},
      {"noise_sigma", "0", "relative Gaussian noise added before each time step"},
      {"shuffle_modes", "true", "pick the mode of each gate at random"},
      {"rotate", "true", "rotate the block by a random multiple of 120 degrees for each gate"},
      {"bp.threshold", "1e-7", "message distance that ends BlockBP in bp and represent"},
      {"bp.max_iterations", "50", "BlockBP iteration cap"},
      {"bp.damping", "1.0", "weight of the new message"},
      {"bp.hermitize", "auto", "never | every | auto"},
      {"bp.auto_threshold", "1e-3", "distance below which auto starts hermitizing"},
      {"bp.schedule", "synchronous", "synchronous | sequential"},
      {"bp.workers", "1", "threads for face updates (KBP_WORKERS overrides)"},
      {"bp.init_bond", "1", "bond of the random initial messages"},
      {"ite.bp_threshold", "1e-5", "message distance that ends the warm-started BlockBP before each gate"},
      {"als.max_sweeps", "50", "ALS sweep cap"},
      {"als.tolerance", "1e-10", "relative decrease of the ALS cost that ends the sweeps"},
      {"als.reduced_env", "true", "solve ALS in the QR-reduced environment"},
      {"als.tikhonov", "1e-12", "relative shift for singular normal equations"},
      {"checkpoint_every", "0", "gate applications between checkpoints; 0 writes only the final one"},
      {"resume", "", "checkpoint to continue an ite run from"},
      {"state", "", "checkpoint whose unit cell starts the run instead of random tensors"},
      {"output.dir", ".", "directory for CSV, JSON and checkpoint files"},
      {"output.prefix", "kbp", "file name prefix"},
      {"tn_file", "", "tensor network JSON for contract and bp"},
      {"plan_file", "", "sweep plan JSON for contract; empty uses a greedy plan"},
      {"contract.chi", "unlimited", "boundary MPS truncation for contract"},
      {"represent.sizes", "2, 3", "block sizes compared against the oracle"},
      {"represent.methods", "blockbp, random", "environments to compare"},
      {"represent.chi", "16", "truncation of the block-to-core contraction"},
      {"represent.oracle_N", "5", "block size of the random-environment oracle"},
      {"represent.oracle_chi", "64", "truncation used for the oracle"},
      {"represent.bond", "in_UR", "measured bond of the central triangle"},
  };
}

RunConfig::Entry& RunConfig::find(const std::string& key) {
  for (auto& e : entries_)
    if (e.key == key) return e;
  throw ConfigError("unknown key '" + key + "'");
}

const RunConfig::Entry& RunConfig::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.key == key) return e;
  throw ConfigError("unknown key '" + key + "'");
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& source) {
  Entry& e = find(key);
  e.value = value;
  e.source = source;
}

void RunConfig::assign(const std::string& assignment, const std::string& source) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), source);
}

void RunConfig::load_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    }
    try {
      assign(line, source + ":" + std::to_string(n));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(n) + ": " + bare(e));
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  load_text(read_text_file(path), path.string());
}

void RunConfig::apply_environment() {
  if (const char* w = std::getenv("KBP_WORKERS"); w && *w) set("bp.workers", w, "KBP_WORKERS");
}

const std::string& RunConfig::get(const std::string& key) const { return find(key).value; }

long RunConfig::get_int(const std::string& key) const { return to_long(key, get(key)); }

std::size_t RunConfig::get_size(const std::string& key) const {
  const long v = get_int(key);
  if (v < 0) bad_value(key, get(key), "a non-negative integer");
  return static_cast<std::size_t>(v);
}

double RunConfig::get_double(const std::string& key) const { return to_double(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = lower(get(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, get(key), "true or false");
}

std::size_t RunConfig::get_chi(const std::string& key) const {
  if (lower(get(key)) == "unlimited") return kUnlimited;
  const std::size_t v = get_size(key);
  if (v < 1) bad_value(key, get(key), "a positive integer or 'unlimited'");
  return v;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void RunConfig::validate() const {
  choice(*this, "system", {"kagome", "single_bond"});
  choice(*this, "hamiltonian", {"heisenberg"});
  choice(*this, "bp.hermitize", {"never", "every", "auto"});
  choice(*this, "bp.schedule", {"synchronous", "sequential"});
  get_size("seed");
  const long D = get_int("D");
  const long d = get_int("d");
  const long N = get_int("N");
  if (D < 1) bad_value("D", get("D"), "an integer >= 1");
  if (d < 2) bad_value("d", get("d"), "an integer >= 2");
  if (d != 2) bad_value("d", get("d"), "2 for the heisenberg term");
  if (N < 2) bad_value("N", get("N"), "an integer >= 2");
  const std::size_t chi = get_chi("chi");
  if (chi < static_cast<std::size_t>(D * D)) {
    throw ConfigError("key 'chi': " + get("chi") + " is below D^2 = " + std::to_string(D * D));
  }
  parse_dt_schedule(get("dt_schedule"));
  if (!(get_double("noise_sigma") >= 0.0)) bad_value("noise_sigma", get("noise_sigma"), "a non-negative number");
  get_bool("shuffle_modes");
  get_bool("rotate");
  get_bool("als.reduced_env");
  get_size("checkpoint_every");
  get_chi("contract.chi");
  for (const auto& s : get_list("represent.sizes")) {
    if (to_long("represent.sizes", s) < 2) bad_value("represent.sizes", s, "block sizes >= 2");
  }
  for (const auto& m : get_list("represent.methods")) {
    if (m != "blockbp" && m != "random") bad_value("represent.methods", m, "blockbp | random");
  }
  if (get_int("represent.oracle_N") < 2) bad_value("represent.oracle_N", get("represent.oracle_N"), "an integer >= 2");
  if (get_chi("represent.chi") < static_cast<std::size_t>(D * D)) {
    throw ConfigError("key 'represent.chi': " + get("represent.chi") + " is below D^2 = " + std::to_string(D * D));
  }
  get_chi("represent.oracle_chi");
  const auto bonds = kagome_bonds();
  if (std::find(bonds.begin(), bonds.end(), get("represent.bond")) == bonds.end()) {
    bad_value("represent.bond", get("represent.bond"), "a kagome bond name");
  }
  try {
    bp_config(*this).validate();
  } catch (const ConfigError& e) {
    throw ConfigError("bp settings: " + bare(e));
  }
  try {
    als_config(*this).validate();
  } catch (const ConfigError& e) {
    throw ConfigError("als settings: " + bare(e));
  }
  if (!(get_double("ite.bp_threshold") > 0.0)) bad_value("ite.bp_threshold", get("ite.bp_threshold"), "a positive number");
}

std::string RunConfig::dump() const {
  std::size_t width = 0;
  for (const auto& e : entries_) width = std::max(width, e.key.size());
  std::ostringstream out;
  for (const auto& e : entries_) {
    out << e.key << std::string(width - e.key.size(), ' ') << " = " << e.value;
    if (e.source != "default") out << "  # " << e.source;
    out << '\n';
  }
  return out.str();
}

std::vector<double> parse_dt_schedule(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t count = 1;
    std::string value = item;
    if (const auto star = item.find('*'); star != std::string::npos) {
      value = trim(item.substr(0, star));
      const long c = to_long("dt_schedule", trim(item.substr(star + 1)));
      if (c < 0) bad_value("dt_schedule", item, "a non-negative count");
      count = static_cast<std::size_t>(c);
    }
    const double dt = to_double("dt_schedule", value);
    if (!(dt > 0.0)) bad_value("dt_schedule", item, "positive time steps");
    out.insert(out.end(), count, dt);
  }
  return out;
}

BPConfig bp_config(const RunConfig& cfg) {
  BPConfig bp;
  bp.max_iterations = cfg.get_size("bp.max_iterations");
  bp.threshold = cfg.get_double("bp.threshold");
  bp.damping = cfg.get_double("bp.damping");
  bp.chi = cfg.get_chi("chi");
  bp.seed = derive_seed(cfg.get_size("seed"), "messages");
  const std::string h = lower(cfg.get("bp.hermitize"));
  bp.hermitize = h == "never" ? HermitizePolicy::Never : h == "every" ? HermitizePolicy::Every : HermitizePolicy::Auto;
  bp.auto_threshold = cfg.get_double("bp.auto_threshold");
  bp.schedule = lower(cfg.get("bp.schedule")) == "sequential" ? Schedule::Sequential : Schedule::Synchronous;
  bp.workers = cfg.get_size("bp.workers");
  bp.init_bond = cfg.get_size("bp.init_bond");
  return bp;
}

ALSConfig als_config(const RunConfig& cfg) {
  ALSConfig als;
  als.D = cfg.get_size("D");
  als.max_sweeps = cfg.get_size("als.max_sweeps");
  als.phi_tolerance = cfg.get_double("als.tolerance");
  als.use_reduced_env = cfg.get_bool("als.reduced_env");
  als.tikhonov = cfg.get_double("als.tikhonov");
  return als;
}

KagomeOptions kagome_options(const RunConfig& cfg) {
  KagomeOptions o;
  o.N = static_cast<int>(cfg.get_int("N"));
  o.d = cfg.get_size("d");
  o.D = cfg.get_size("D");
  o.bp = bp_config(cfg);
  o.bp.threshold = cfg.get_double("ite.bp_threshold");
  o.shuffle_modes = cfg.get_bool("shuffle_modes");
  o.rotate = cfg.get_bool("rotate");
  o.seed = cfg.get_size("seed");
  return o;
}

IteConfig ite_config(const RunConfig& cfg) {
  IteConfig c;
  c.als = als_config(cfg);
  c.noise_sigma = cfg.get_double("noise_sigma");
  c.checkpoint_every = cfg.get_size("checkpoint_every");
  return c;
}

}  // namespace kbp::cli
