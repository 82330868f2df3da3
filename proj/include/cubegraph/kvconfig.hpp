#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cubegraph {

// Flat key=value settings with a fixed set of known keys. Lines starting
// with '#' and blank lines are ignored; unknown keys are rejected.
class KeyValueConfig {
 public:
  void define(const std::string& key, const std::string& default_value, const std::string& help);

  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin);
  // Later sources override earlier ones; `origin` names the source in errors.
  void set(const std::string& key, const std::string& value, const std::string& origin);
  // Parses "key=value".
  void set_assignment(const std::string& assignment, const std::string& origin);

  bool known(const std::string& key) const { return entries_.contains(key); }
  const std::string& get(const std::string& key) const;
  const std::string& origin(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  std::vector<std::string> keys() const;
  // Sorted "key = value" lines.
  std::string dump() const;
  std::string help() const;

 private:
  struct Entry {
    std::string value;
    std::string default_value;
    std::string help;
    std::string origin = "default";
  };
  const Entry& entry(const std::string& key) const;
  std::map<std::string, Entry> entries_;
};

}  // namespace cubegraph
