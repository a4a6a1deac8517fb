#include "lmcf/toml.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "lmcf/curve_io.hpp"
#include "lmcf/error.hpp"

namespace lmcf::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  throw Error(ErrorCode::kConfig, msg.str());
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

double parse_number(std::string text, int line) {
  std::string cleaned;
  for (char c : text) {
    if (c != '_') cleaned.push_back(c);
  }
  if (!cleaned.empty() && cleaned[0] == '+') cleaned.erase(0, 1);
  double v = 0.0;
  const char* b = cleaned.data();
  const char* e = b + cleaned.size();
  const auto res = std::from_chars(b, e, v);
  if (cleaned.empty() || res.ec != std::errc() || res.ptr != e) fail(line, "cannot parse value '" + text + "'");
  return v;
}

Value parse_value(const std::string& raw, int line) {
  const std::string text = trim(raw);
  Value v;
  v.line = line;
  if (text.empty()) fail(line, "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') fail(line, "unterminated string");
    v.type = Value::Type::kString;
    const std::string body = text.substr(1, text.size() - 2);
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '\\' && i + 1 < body.size()) {
        const char n = body[++i];
        v.string.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
      } else {
        v.string.push_back(body[i]);
      }
    }
    return v;
  }
  if (text == "true" || text == "false") {
    v.type = Value::Type::kBool;
    v.boolean = text == "true";
    return v;
  }
  if (text.front() == '[') {
    if (text.back() != ']') fail(line, "unterminated array");
    v.type = Value::Type::kArray;
    std::stringstream ss(text.substr(1, text.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (trim(item).empty()) continue;
      v.array.push_back(parse_number(trim(item), line));
    }
    return v;
  }
  v.type = Value::Type::kNumber;
  v.number = parse_number(text, line);
  return v;
}

}  // namespace

const char* Value::type_name() const {
  switch (type) {
    case Type::kNumber: return "number";
    case Type::kString: return "string";
    case Type::kBool: return "boolean";
    case Type::kArray: return "array";
  }
  return "number";
}

bool Value::operator==(const Value& o) const {
  if (type != o.type) return false;
  switch (type) {
    case Type::kNumber: return number == o.number;
    case Type::kString: return string == o.string;
    case Type::kBool: return boolean == o.boolean;
    case Type::kArray: return array == o.array;
  }
  return false;
}

Document parse(std::istream& in) {
  Document doc;
  Table* current = &doc.root;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(strip_comment(line));
    if (text.empty()) continue;
    if (text.rfind("[[", 0) == 0) {
      if (text.size() < 4 || text.substr(text.size() - 2) != "]]") fail(lineno, "malformed array-of-tables header");
      const std::string name = trim(text.substr(2, text.size() - 4));
      if (!valid_key(name)) fail(lineno, "invalid table name '" + name + "'");
      if (doc.tables.count(name)) fail(lineno, "'" + name + "' already defined as a table");
      auto& arr = doc.arrays[name];
      arr.emplace_back();
      arr.back().line = lineno;
      current = &arr.back();
      continue;
    }
    if (text.front() == '[') {
      if (text.back() != ']') fail(lineno, "malformed table header");
      const std::string name = trim(text.substr(1, text.size() - 2));
      if (!valid_key(name)) fail(lineno, "invalid table name '" + name + "'");
      if (doc.tables.count(name) || doc.arrays.count(name)) fail(lineno, "table '" + name + "' defined twice");
      current = &doc.tables[name];
      current->line = lineno;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    if (!valid_key(key)) fail(lineno, "invalid key '" + key + "'");
    if (current->values.count(key)) fail(lineno, "duplicate key '" + key + "'");
    current->values.emplace(key, parse_value(text.substr(eq + 1), lineno));
  }
  return doc;
}

Document parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

std::string format_value(const Value& v) {
  switch (v.type) {
    case Value::Type::kNumber: return format_double(v.number);
    case Value::Type::kBool: return v.boolean ? "true" : "false";
    case Value::Type::kString: {
      std::string out = "\"";
      for (char c : v.string) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      return out + "\"";
    }
    case Value::Type::kArray: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.array.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v.array[i]);
      }
      return out + "]";
    }
  }
  return "";
}

}  // namespace lmcf::toml
