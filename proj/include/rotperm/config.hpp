#pragma once

#include <map>
#include <string>
#include <vector>

namespace rotperm {

// Flat key = value configuration with dotted section names, '#' comments.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::string& path);
  static KeyValueConfig from_string(const std::string& text,
                                    const std::string& name = "<config>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get(const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_list(
      const std::string& key, const std::vector<std::string>& fallback) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace rotperm
