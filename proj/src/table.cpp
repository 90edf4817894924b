#include "twopt/table.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "twopt/errors.hpp"

namespace twopt {

std::string format_double(double v) {
  if (std::isnan(v)) return {};
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string meta_line(const TableMeta& meta) {
  return "# config_hash=" + meta.config_hash + " seed=" + std::to_string(meta.seed) +
         " version=" + meta.version;
}

ResultTable::ResultTable(std::vector<std::string> columns, TableMeta meta)
    : columns_(std::move(columns)), meta_(std::move(meta)) {}

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) {
    throw LengthMismatch("row has " + std::to_string(row.size()) + " fields, table has " +
                         std::to_string(columns_.size()) + " columns");
  }
  rows_.push_back(std::move(row));
}

void ResultTable::write(std::ostream& os) const {
  os << meta_line(meta_) << '\n';
  for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c];
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
    os << '\n';
  }
}

std::string ResultTable::to_string() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace twopt
