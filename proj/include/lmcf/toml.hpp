#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace lmcf::toml {

// The subset used by scenario files: comments, bare keys, [table] and
// [[array-of-tables]] headers, and values that are numbers, booleans,
// basic strings or flat arrays of numbers.
struct Value {
  enum class Type { kNumber, kString, kBool, kArray };
  Type type = Type::kNumber;
  double number = 0.0;
  std::string string;
  bool boolean = false;
  std::vector<double> array;
  int line = 0;

  const char* type_name() const;
  bool operator==(const Value& other) const;
};

struct Table {
  std::map<std::string, Value> values;
  int line = 0;
};

struct Document {
  Table root;
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> arrays;
};

Document parse(std::istream& in);
Document parse_string(const std::string& text);

std::string format_value(const Value& v);

}  // namespace lmcf::toml
