#ifndef TWOPT_TABLE_HPP
#define TWOPT_TABLE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace twopt {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal that round-trips; NaN prints as an empty field.
std::string format_double(double v);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

struct TableMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
};

/// Numeric CSV with a leading `# key=value` metadata line.
class ResultTable {
 public:
  ResultTable(std::vector<std::string> columns, TableMeta meta);

  void add_row(std::vector<double> row);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const TableMeta& meta() const { return meta_; }

  void write(std::ostream& os) const;
  std::string to_string() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  TableMeta meta_;
};

std::string meta_line(const TableMeta& meta);

}  // namespace twopt

#endif  // TWOPT_TABLE_HPP
