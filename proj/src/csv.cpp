#include "smcstab/csv.hpp"

#include <cstdio>
#include <sstream>

#include "smcstab/errors.hpp"

namespace smcstab {

std::string format_double_17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_series_csv(const std::string& path,
                      const std::vector<std::string>& schema,
                      const std::vector<std::vector<double>>& columns) {
  if (schema.size() != columns.size())
    throw Error(ErrorCode::invalid_argument,
                "schema has " + std::to_string(schema.size()) +
                    " columns but the series has " +
                    std::to_string(columns.size()));
  std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns)
    if (c.size() != rows)
      throw Error(ErrorCode::invalid_argument,
                  "series columns have unequal lengths");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot open for writing: " + path);
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (j) out << ',';
    out << schema[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) out << ',';
      out << format_double_17(columns[j][i]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw Error(ErrorCode::io, "cannot open for writing: " + path);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out_ << ',';
    out_ << header[j];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (out_.is_open()) out_.flush();
}

void CsvWriter::begin_row() {
  if (in_row_)
    throw Error(ErrorCode::invalid_argument, "row already in progress");
  in_row_ = true;
  written_in_row_ = 0;
}

void CsvWriter::sep() {
  if (written_in_row_) out_ << ',';
  ++written_in_row_;
}

void CsvWriter::field(double v) {
  sep();
  out_ << format_double_17(v);
}

void CsvWriter::field(long long v) {
  sep();
  out_ << v;
}

void CsvWriter::field(const std::string& v) {
  sep();
  out_ << v;
}

void CsvWriter::end_row() {
  if (!in_row_ || written_in_row_ != columns_)
    throw Error(ErrorCode::invalid_argument,
                "row has " + std::to_string(written_in_row_) + " fields, header has " +
                    std::to_string(columns_));
  out_ << '\n';
  in_row_ = false;
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::io, "write failed: " + path_);
  out_.close();
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace smcstab
