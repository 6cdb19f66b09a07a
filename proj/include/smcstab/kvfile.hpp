#ifndef SMCSTAB_KVFILE_HPP
#define SMCSTAB_KVFILE_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace smcstab {

// Minimal structured-text format used by model and experiment files:
// `key = value` entries where a value is a number, a bare or quoted string,
// or a (possibly nested, multi-line) bracketed array. '#' starts a comment.
struct KvValue {
  enum class Kind { number, string, array };
  Kind kind = Kind::number;
  double number = 0.0;
  std::string text;
  std::vector<KvValue> items;
  int line = 0;

  double as_number(const std::string& key) const;
  long long as_integer(const std::string& key) const;
  const std::string& as_string(const std::string& key) const;
  Eigen::VectorXd as_vector(const std::string& key) const;
  Eigen::MatrixXd as_matrix(const std::string& key) const;
  std::vector<double> as_number_list(const std::string& key) const;
  std::vector<long long> as_integer_list(const std::string& key) const;
};

class KvFile {
 public:
  static KvFile parse_file(const std::string& path);
  static KvFile parse_string(const std::string& text, const std::string& name);

  const KvValue* find(const std::string& key) const;
  const KvValue& require(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }
  const std::string& name() const { return name_; }
  std::vector<std::string> keys() const;

 private:
  std::string name_;
  std::vector<std::pair<std::string, KvValue>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace smcstab

#endif
