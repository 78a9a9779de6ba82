#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surromap::text {

/// Shortest decimal form that reads back to the same double (at most 17 digits).
std::string format_double(double value);

std::string join(std::span<const double> values, char sep = ' ');

double parse_double(std::string_view token);

std::vector<std::string> split(std::string_view line, char sep);

std::string trim(std::string_view s);

/// Ordered `key value...` document. Lines starting with '#' are comments.
class KeyValueDocument {
 public:
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::span<const double> values);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_count(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_words(const std::string& key) const;

  std::string str() const;
  static KeyValueDocument parse(std::string_view text);

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

}  // namespace surromap::text
