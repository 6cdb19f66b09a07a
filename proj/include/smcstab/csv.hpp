#ifndef SMCSTAB_CSV_HPP
#define SMCSTAB_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace smcstab {

// Column-oriented series write. Floating values are serialized with 17
// significant digits so a read-back reproduces them bit for bit. A
// schema/series arity mismatch fails before anything is written.
void write_series_csv(const std::string& path,
                      const std::vector<std::string>& schema,
                      const std::vector<std::vector<double>>& columns);

// Streaming row writer used for long-format outputs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  void begin_row();
  void field(double v);
  void field(long long v);
  void field(const std::string& v);
  void end_row();
  void close();

 private:
  void sep();

  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t written_in_row_ = 0;
  bool in_row_ = false;
};

std::string format_double_17(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

}  // namespace smcstab

#endif
