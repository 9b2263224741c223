#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kbp/belief_propagation.hpp"
#include "kbp/ite.hpp"
#include "kbp/ite_driver.hpp"

namespace kbp::cli {

// Layered key = value settings: built-in defaults, then a file, then the environment,
// then command-line assignments. Unknown keys are errors.
class RunConfig {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::string help;
    std::string source = "default";
  };

  RunConfig();

  void load_file(const std::filesystem::path& path);
  // Lines of "key = value"; '#' starts a comment.
  void load_text(const std::string& text, const std::string& source);
  void set(const std::string& key, const std::string& value, const std::string& source);
  // "key=value".
  void assign(const std::string& assignment, const std::string& source);
  // KBP_WORKERS overrides bp.workers.
  void apply_environment();

  const std::string& get(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // "unlimited" maps to kUnlimited.
  std::size_t get_chi(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Throws ConfigError naming the first offending key.
  void validate() const;
  // Every key with its value and where the value came from.
  std::string dump() const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  Entry& find(const std::string& key);
  const Entry& find(const std::string& key) const;
  std::vector<Entry> entries_;
};

// "0.1*100, 0.05*100" -> 100 copies of 0.1 followed by 100 of 0.05.
std::vector<double> parse_dt_schedule(const std::string& text);

BPConfig bp_config(const RunConfig& cfg);
ALSConfig als_config(const RunConfig& cfg);
KagomeOptions kagome_options(const RunConfig& cfg);
IteConfig ite_config(const RunConfig& cfg);

}  // namespace kbp::cli
