#include "smcstab/kvfile.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "smcstab/errors.hpp"

namespace smcstab {

namespace {

struct Token {
  enum class Kind { ident, number, string, equals, lbracket, rbracket, comma, end };
  Kind kind;
  std::string text;
  double number = 0.0;
  int line = 1;
};

class Lexer {
 public:
  Lexer(const std::string& text, const std::string& name)
      : text_(text), name_(name) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    if (pos_ >= text_.size()) {
      t.kind = Token::Kind::end;
      return t;
    }
    char c = text_[pos_];
    if (c == '=') { ++pos_; t.kind = Token::Kind::equals; return t; }
    if (c == '[') { ++pos_; t.kind = Token::Kind::lbracket; return t; }
    if (c == ']') { ++pos_; t.kind = Token::Kind::rbracket; return t; }
    if (c == ',') { ++pos_; t.kind = Token::Kind::comma; return t; }
    if (c == '"') {
      ++pos_;
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\n') ++line_;
        s += text_[pos_++];
      }
      if (pos_ >= text_.size())
        fail("unterminated string literal", t.line);
      ++pos_;
      t.kind = Token::Kind::string;
      t.text = std::move(s);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
        c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E' ||
              text_[pos_] == '-' || text_[pos_] == '+'))
        ++pos_;
      t.text = text_.substr(start, pos_ - start);
      try {
        std::size_t used = 0;
        t.number = std::stod(t.text, &used);
        if (used != t.text.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail("bad numeric literal '" + t.text + "'", t.line);
      }
      t.kind = Token::Kind::number;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_' || text_[pos_] == '-' || text_[pos_] == '.' ||
              text_[pos_] == '/'))
        ++pos_;
      t.kind = Token::Kind::ident;
      t.text = text_.substr(start, pos_ - start);
      return t;
    }
    fail(std::string("unexpected character '") + c + "'", line_);
    return t;  // unreachable
  }

  [[noreturn]] void fail(const std::string& msg, int line) const {
    throw Error(ErrorCode::parse,
                name_ + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& text_;
  std::string name_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

class Parser {
 public:
  Parser(const std::string& text, const std::string& name)
      : lexer_(text, name), name_(name) {
    advance();
  }

  std::vector<std::pair<std::string, KvValue>> parse() {
    std::vector<std::pair<std::string, KvValue>> entries;
    while (current_.kind != Token::Kind::end) {
      if (current_.kind != Token::Kind::ident)
        lexer_.fail("expected a key name", current_.line);
      std::string key = current_.text;
      int line = current_.line;
      advance();
      if (current_.kind != Token::Kind::equals)
        lexer_.fail("expected '=' after key '" + key + "'", current_.line);
      advance();
      KvValue v = parse_value();
      v.line = line;
      entries.emplace_back(std::move(key), std::move(v));
    }
    return entries;
  }

 private:
  KvValue parse_value() {
    KvValue v;
    v.line = current_.line;
    switch (current_.kind) {
      case Token::Kind::number:
        v.kind = KvValue::Kind::number;
        v.number = current_.number;
        v.text = current_.text;
        advance();
        return v;
      case Token::Kind::string:
      case Token::Kind::ident:
        v.kind = KvValue::Kind::string;
        v.text = current_.text;
        advance();
        return v;
      case Token::Kind::lbracket: {
        v.kind = KvValue::Kind::array;
        advance();
        bool first = true;
        while (current_.kind != Token::Kind::rbracket) {
          if (!first) {
            if (current_.kind != Token::Kind::comma)
              lexer_.fail("expected ',' or ']' in array", current_.line);
            advance();
          }
          if (current_.kind == Token::Kind::rbracket) break;  // trailing comma
          v.items.push_back(parse_value());
          first = false;
        }
        advance();
        return v;
      }
      default:
        lexer_.fail("expected a value", current_.line);
    }
    return v;  // unreachable
  }

  void advance() { current_ = lexer_.next(); }

  Lexer lexer_;
  std::string name_;
  Token current_;
};

[[noreturn]] void conversion_error(const KvValue& v, const std::string& key,
                                   const std::string& expected) {
  throw Error(ErrorCode::parse, "line " + std::to_string(v.line) + ": field '" +
                                    key + "' " + expected);
}

}  // namespace

double KvValue::as_number(const std::string& key) const {
  if (kind != Kind::number) conversion_error(*this, key, "must be a number");
  return number;
}

long long KvValue::as_integer(const std::string& key) const {
  if (kind != Kind::number || number != std::floor(number))
    conversion_error(*this, key, "must be an integer");
  return static_cast<long long>(number);
}

const std::string& KvValue::as_string(const std::string& key) const {
  if (kind != Kind::string) conversion_error(*this, key, "must be a string");
  return text;
}

Eigen::VectorXd KvValue::as_vector(const std::string& key) const {
  if (kind != Kind::array)
    conversion_error(*this, key, "must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = items[i].as_number(key);
  return v;
}

Eigen::MatrixXd KvValue::as_matrix(const std::string& key) const {
  if (kind != Kind::array || items.empty())
    conversion_error(*this, key, "must be a non-empty array of rows");
  std::size_t cols = 0;
  for (const auto& row : items) {
    if (row.kind != Kind::array)
      conversion_error(*this, key, "must contain array rows");
    if (cols == 0) cols = row.items.size();
    if (row.items.size() != cols)
      conversion_error(*this, key, "has ragged rows");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(items.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          items[i].items[j].as_number(key);
  return m;
}

std::vector<double> KvValue::as_number_list(const std::string& key) const {
  if (kind != Kind::array)
    conversion_error(*this, key, "must be an array of numbers");
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.as_number(key));
  return out;
}

std::vector<long long> KvValue::as_integer_list(const std::string& key) const {
  if (kind != Kind::array)
    conversion_error(*this, key, "must be an array of integers");
  std::vector<long long> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.as_integer(key));
  return out;
}

KvFile KvFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

KvFile KvFile::parse_string(const std::string& text, const std::string& name) {
  KvFile f;
  f.name_ = name;
  f.entries_ = Parser(text, name).parse();
  for (std::size_t i = 0; i < f.entries_.size(); ++i) {
    const auto& key = f.entries_[i].first;
    if (f.index_.count(key))
      throw Error(ErrorCode::parse,
                  name + ":" + std::to_string(f.entries_[i].second.line) +
                      ": duplicate key '" + key + "'");
    f.index_[key] = i;
  }
  return f;
}

const KvValue* KvFile::find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

const KvValue& KvFile::require(const std::string& key) const {
  const KvValue* v = find(key);
  if (!v)
    throw Error(ErrorCode::parse, name_ + ": missing required key '" + key + "'");
  return *v;
}

std::vector<std::string> KvFile::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

}  // namespace smcstab
