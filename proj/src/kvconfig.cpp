#include "cubegraph/kvconfig.hpp"

#include <fstream>
#include <sstream>

#include "cubegraph/error.hpp"

namespace cubegraph {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void KeyValueConfig::define(const std::string& key, const std::string& default_value, const std::string& help) {
  entries_[key] = Entry{default_value, default_value, help, "default"};
}

void KeyValueConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": no such config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

void KeyValueConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    set_assignment(t, origin + ":" + std::to_string(number));
  }
}

void KeyValueConfig::set(const std::string& key, const std::string& value, const std::string& origin) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(origin + ": unknown config key '" + key + "'");
  it->second.value = value;
  it->second.origin = origin;
}

void KeyValueConfig::set_assignment(const std::string& assignment, const std::string& origin) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(origin + ": expected key=value, found '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), origin);
}

const KeyValueConfig::Entry& KeyValueConfig::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

const std::string& KeyValueConfig::get(const std::string& key) const { return entry(key).value; }

const std::string& KeyValueConfig::origin(const std::string& key) const { return entry(key).origin; }

int KeyValueConfig::get_int(const std::string& key) const {
  const Entry& e = entry(key);
  try {
    std::size_t used = 0;
    const int v = std::stoi(e.value, &used);
    if (used == e.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(e.origin + ": " + key + " expects an integer, got '" + e.value + "'");
}

double KeyValueConfig::get_double(const std::string& key) const {
  const Entry& e = entry(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used == e.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(e.origin + ": " + key + " expects a number, got '" + e.value + "'");
}

bool KeyValueConfig::get_bool(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(e.origin + ": " + key + " expects true or false, got '" + e.value + "'");
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key) const {
  const Entry& e = entry(key);
  try {
    std::size_t used = 0;
    if (!e.value.empty() && e.value[0] != '-') {
      const auto v = std::stoull(e.value, &used);
      if (used == e.value.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(e.origin + ": " + key + " expects a non-negative integer, got '" + e.value + "'");
}

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) out.push_back(k);
  return out;
}

std::string KeyValueConfig::dump() const {
  std::ostringstream out;
  for (const auto& [k, e] : entries_) out << k << " = " << e.value << '\n';
  return out.str();
}

std::string KeyValueConfig::help() const {
  std::ostringstream out;
  for (const auto& [k, e] : entries_) out << "  " << k << " (default " << e.default_value << "): " << e.help << '\n';
  return out.str();
}

}  // namespace cubegraph
