#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grf {

// Minimal TOML-style configuration: [section] headers, key = value lines,
// '#' comments, quoted or bare strings, numbers, booleans, and flat arrays
// of numbers. Keys are addressed as "section.key".
class Config {
 public:
  static Config from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string trimmed = trim(strip_comment(line));
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty())
          throw std::runtime_error("config line " + std::to_string(lineno) + ": empty section");
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || value.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key or value");
      cfg.set(section.empty() ? key : section + "." + key, value);
    }
    return cfg;
  }

  static Config from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
  }

  bool has(std::string_view key) const { return entries_.count(std::string(key)) > 0; }

  void set(std::string_view key, std::string_view raw_value) {
    entries_[std::string(key)] = unquote(std::string(raw_value));
  }

  std::string get_string(std::string_view key) const { return raw(key); }
  std::string get_string(std::string_view key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double get_double(std::string_view key) const { return parse_double(key, raw(key)); }
  double get_double(std::string_view key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(std::string_view key) const {
    const std::string v = raw(key);
    std::size_t pos = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + std::string(key) + ": not an integer: " + v);
    }
    if (pos != v.size())
      throw std::runtime_error("config key " + std::string(key) + ": not an integer: " + v);
    return out;
  }
  long long get_int(std::string_view key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_u64(std::string_view key) const {
    const std::string v = raw(key);
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
      out = std::stoull(v, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + std::string(key) + ": not an unsigned integer: " + v);
    }
    if (pos != v.size())
      throw std::runtime_error("config key " + std::string(key) + ": not an unsigned integer: " + v);
    return out;
  }

  bool get_bool(std::string_view key) const {
    const std::string v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::runtime_error("config key " + std::string(key) + ": expected true/false, got " + v);
  }
  bool get_bool(std::string_view key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  std::vector<double> get_doubles(std::string_view key) const {
    std::string v = raw(key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
      throw std::runtime_error("config key " + std::string(key) + ": expected [a, b, ...]");
    v = v.substr(1, v.size() - 2);
    std::vector<double> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(parse_double(key, t));
    }
    if (out.empty()) throw std::runtime_error("config key " + std::string(key) + ": empty array");
    return out;
  }

  // Canonical dump (sorted key=value lines); basis of the config hash that
  // every output records.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
      out += k;
      out += '=';
      out += v;
      out += '\n';
    }
    return out;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::string hash_hex() const {
    static const char* digits = "0123456789abcdef";
    const std::uint64_t h = hash();
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = digits[(h >> (4 * i)) & 0xf];
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string raw(std::string_view key) const {
    const auto it = entries_.find(std::string(key));
    if (it == entries_.end())
      throw std::runtime_error("config key missing: " + std::string(key));
    return it->second;
  }

  static double parse_double(std::string_view key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + std::string(key) + ": not a number: " + v);
    }
    if (pos != v.size())
      throw std::runtime_error("config key " + std::string(key) + ": not a number: " + v);
    return out;
  }

  static std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static std::string unquote(std::string v) {
    v = trim(v);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
  }

  std::map<std::string, std::string> entries_;
};

}  // namespace grf
