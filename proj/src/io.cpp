#include "maxdiv/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace maxdiv::io {

bool read_csv_record(std::istream& in, CsvRecord& out, std::size_t& line_no) {
  out.clear();
  int c = in.peek();
  // Skip blank lines and comment lines.
  while (c == '\n' || c == '\r' || c == '#') {
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
      ++line_no;
    } else {
      in.get();
      if (c == '\n') ++line_no;
    }
    c = in.peek();
  }
  if (c == EOF) return false;

  const std::size_t start_line = line_no;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  while (true) {
    c = in.get();
    if (c == EOF) {
      if (in_quotes)
        throw std::runtime_error("csv: unterminated quoted field starting near line " +
                                 std::to_string(start_line));
      out.push_back(field);
      return true;
    }
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw std::runtime_error("csv: stray quote at line " + std::to_string(line_no + 1));
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        out.push_back(field);
        field.clear();
        field_was_quoted = false;
        break;
      case '\r':
        break;
      case '\n':
        ++line_no;
        out.push_back(field);
        return true;
      default:
        field.push_back(static_cast<char>(c));
        break;
    }
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char ch : field) {
    if (ch == '"') quoted += "\"\"";
    else quoted.push_back(ch);
  }
  quoted.push_back('"');
  return quoted;
}

std::string format_double(double v) {
  char buf[40];
  // Try increasing precision until the printed value round-trips.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::string& path, const std::string& config_hash,
                     const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# config " << config_hash << "\n" << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace maxdiv::io
