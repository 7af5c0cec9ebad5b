#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace maxdiv::io {

/// One parsed CSV record. RFC-4180 quoting: fields may be wrapped in double
/// quotes, embedded quotes are doubled, quoted fields may contain commas and
/// line breaks. CRLF and LF line endings are both accepted.
using CsvRecord = std::vector<std::string>;

/// Reads the next record from `in`. Returns false at end of input.
/// Lines starting with '#' outside of a quoted field are skipped as comments.
/// Throws std::runtime_error on a malformed record (stray quote), reporting
/// the 1-based line number where the record started.
bool read_csv_record(std::istream& in, CsvRecord& out, std::size_t& line_no);

/// Quotes a field if it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

/// Shortest decimal form that round-trips a double ("%.17g" fallback),
/// used everywhere a number is written so reruns are byte-identical.
std::string format_double(double v);

/// FNV-1a 64-bit over a canonical string; used for the config-hash header
/// comment carried by every output file.
std::uint64_t fnv1a64(const std::string& s);

std::string hash_hex(std::uint64_t h);

/// Opens `path` for writing and emits the `# config <hash>` header line.
/// Throws std::runtime_error when the file cannot be created.
void write_text_file(const std::string& path, const std::string& config_hash,
                     const std::string& body);

}  // namespace maxdiv::io
