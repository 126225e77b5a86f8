#include "textvae/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[key] = value;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool Config::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string Config::get_str(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key: " + key);
  consumed_[key] = true;
  return it->second;
}

std::string Config::get_str(const std::string& key,
                            const std::string& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_[key] = true;
  return it->second;
}

long Config::get_int(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_[key] = true;
  try {
    size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size())
      throw ConfigError("config key " + key + ": not an integer: '" +
                        it->second + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: '" + it->second +
                      "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_[key] = true;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
      throw ConfigError("config key " + key + ": not a number: '" + it->second +
                        "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + it->second +
                      "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_[key] = true;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) out.push_back(k);
  return out;
}

}  // namespace textvae
