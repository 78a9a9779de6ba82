#include "surromap/text_format.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <system_error>

#include "surromap/error.hpp"

namespace surromap::text {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string join(std::span<const double> values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_double(values[i]);
  }
  return out;
}

double parse_double(std::string_view token) {
  const std::string t = trim(token);
  if (t.empty()) throw IoError("empty numeric field");
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) throw IoError("malformed number '" + t + "'");
  return value;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

void KeyValueDocument::set(const std::string& key, std::string value) {
  if (!values_.contains(key)) order_.push_back(key);
  values_[key] = std::move(value);
}

void KeyValueDocument::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueDocument::set(const std::string& key, std::span<const double> values) {
  set(key, join(values));
}

bool KeyValueDocument::has(const std::string& key) const { return values_.contains(key); }

const std::string& KeyValueDocument::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw IoError("missing key '" + key + "'");
  return it->second;
}

double KeyValueDocument::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const IoError& e) {
    throw IoError("key '" + key + "': " + e.what());
  }
}

std::size_t KeyValueDocument::get_count(const std::string& key) const {
  const double v = get_double(key);
  if (!(v >= 0.0) || v != std::floor(v)) throw IoError("key '" + key + "' is not a count");
  return static_cast<std::size_t>(v);
}

std::vector<double> KeyValueDocument::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& word : get_words(key)) {
    try {
      out.push_back(parse_double(word));
    } catch (const IoError& e) {
      throw IoError("key '" + key + "': " + e.what());
    }
  }
  return out;
}

std::vector<std::string> KeyValueDocument::get_words(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<std::string> out;
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

std::string KeyValueDocument::str() const {
  std::string out;
  for (const auto& key : order_) {
    out += key;
    const auto& v = values_.at(key);
    if (!v.empty()) {
      out += ' ';
      out += v;
    }
    out += '\n';
  }
  return out;
}

KeyValueDocument KeyValueDocument::parse(std::string_view text) {
  KeyValueDocument doc;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto sp = line.find_first_of(" \t");
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? std::string{} : trim(line.substr(sp));
    if (doc.has(key)) throw IoError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    doc.set(key, value);
  }
  return doc;
}

}  // namespace surromap::text
