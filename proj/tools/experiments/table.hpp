#pragma once

#include <string>
#include <variant>
#include <vector>

namespace bsgd::cli {

/// Empty cells render as nothing; reals use 17 significant digits.
using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& column) const;
  std::string text(std::size_t row, const std::string& column) const;
};

std::string render_cell(const Cell& cell);
std::string to_csv(const Table& table);

}  // namespace bsgd::cli
