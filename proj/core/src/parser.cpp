#include "qwd/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qwd {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) out += ", ";
    out += expected[i];
  }
  return out;
}

}  // namespace

SyntaxError::SyntaxError(SourceSpan span, std::vector<std::string> expected,
                         const std::string& found)
    : Error(ErrorKind::SyntaxError,
            "expected " +
                (expected.size() == 1 ? expected.front()
                                      : "one of {" + join_expected(expected) + "}") +
                ", found " + found,
            {}, span),
      expected_(std::move(expected)) {}

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.span = here();
      if (pos_ >= src_.size()) {
        t.type = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
          advance();
        t.type = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.type = Tok::Number;
        t.text = lex_number();
      } else if (src_.substr(pos_, 3) == "|0>") {
        t.type = Tok::Punct;
        t.text = "|0>";
        advance(3);
      } else if (src_.substr(pos_, 2) == ":=" || src_.substr(pos_, 2) == "->") {
        t.type = Tok::Punct;
        t.text = std::string(src_.substr(pos_, 2));
        advance(2);
      } else if (std::string_view(";:=,[]{}()+-").find(c) !=
                 std::string_view::npos) {
        t.type = Tok::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw SyntaxError(t.span, {"token"},
                          "unexpected character '" + std::string(1, c) + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  SourceSpan here() const { return {line_, col_, pos_}; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
        ++col_;  // count code points, not continuation bytes
      }
      ++pos_;
    }
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string lex_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        advance();
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        col_ = save_col;
      }
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_decl_keyword(const std::string& s) {
  return s == "var" || s == "param" || s == "gate" || s == "density" ||
         s == "obs" || s == "meas";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program run() {
    Program p;
    while (peek().type == Tok::Ident && is_decl_keyword(peek().text))
      declaration(p);
    p.body = sequence();
    if (peek().type != Tok::End) fail({"';'", "end of input"});
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  Token take() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at(const std::string& punct) const {
    return peek().type == Tok::Punct && peek().text == punct;
  }
  bool at_word(const std::string& word) const {
    return peek().type == Tok::Ident && peek().text == word;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string found = t.type == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.span, std::move(expected), found);
  }

  Token expect(const std::string& punct) {
    if (!at(punct)) fail({"'" + punct + "'"});
    return take();
  }
  Token expect_word(const std::string& word) {
    if (!at_word(word)) fail({"'" + word + "'"});
    return take();
  }
  std::string identifier() {
    if (peek().type != Tok::Ident) fail({"identifier"});
    return take().text;
  }
  long integer() {
    if (peek().type != Tok::Number) fail({"integer"});
    const Token t = take();
    long value = 0;
    auto [ptr, ec] =
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      throw SyntaxError(t.span, {"integer"}, "'" + t.text + "'");
    return value;
  }
  double number() {
    if (peek().type != Tok::Number) fail({"number"});
    const Token t = take();
    // strtod honours the full 17-digit round trip.
    return std::strtod(t.text.c_str(), nullptr);
  }

  double signed_number(bool* had_sign = nullptr) {
    double sign = 1.0;
    if (at("-")) {
      take();
      sign = -1.0;
      if (had_sign) *had_sign = true;
    } else if (at("+")) {
      take();
      if (had_sign) *had_sign = true;
    }
    return sign * number();
  }

  bool at_imag_unit() const { return at_word("i"); }

  cplx complex_literal() {
    double re = signed_number();
    if (at_imag_unit()) {
      take();
      return {0.0, re};
    }
    if (at("+") || at("-")) {
      const double sign = take().text == "-" ? -1.0 : 1.0;
      double im = sign * number();
      expect_word("i");
      return {re, im};
    }
    return {re, 0.0};
  }

  Matrix matrix() {
    expect("[");
    std::vector<std::vector<cplx>> rows;
    do {
      expect("[");
      std::vector<cplx> row;
      do {
        row.push_back(complex_literal());
      } while (at(",") && (take(), true));
      expect("]");
      rows.push_back(std::move(row));
    } while (at(",") && (take(), true));
    const Token& close = peek();
    expect("]");
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
      if (r.size() != cols)
        throw SyntaxError(close.span, {"rows of equal length"}, "ragged matrix");
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
  }

  std::vector<std::string> register_list() {
    expect("[");
    std::vector<std::string> regs;
    do {
      regs.push_back(identifier());
    } while (at(",") && (take(), true));
    expect("]");
    return regs;
  }

  void declaration(Program& p) {
    const Token kw = take();
    const SourceSpan span = kw.span;
    if (kw.text == "var") {
      Register r;
      r.span = span;
      r.name = identifier();
      expect(":");
      r.dim = static_cast<int>(integer());
      expect(";");
      p.registers.push_back(r);
    } else if (kw.text == "param") {
      Param prm;
      prm.span = span;
      prm.name = identifier();
      prm.index = static_cast<int>(p.params.size());
      expect(";");
      p.params.push_back(prm);
    } else if (kw.text == "meas") {
      MeasDecl m;
      m.span = span;
      m.name = identifier();
      expect("=");
      expect("{");
      do {
        m.labels.push_back(static_cast<int>(integer()));
        expect(":");
        m.ops.push_back(matrix());
      } while (at(",") && (take(), true));
      expect("}");
      expect(";");
      p.measurements.push_back(std::move(m));
    } else {
      MatrixDecl d;
      d.span = span;
      d.kind = kw.text == "gate"      ? MatrixKind::Gate
               : kw.text == "density" ? MatrixKind::Density
                                      : MatrixKind::Observable;
      d.name = identifier();
      if (d.kind == MatrixKind::Observable && at("[")) d.registers = register_list();
      expect("=");
      d.value = matrix();
      expect(";");
      p.matrices.push_back(std::move(d));
    }
  }

  bool at_sequence_end() const {
    return peek().type == Tok::End || at_word("od") || at_word("fi") ||
           at("}") || at(",");
  }

  Statement sequence() {
    std::vector<Statement> items;
    items.push_back(statement());
    while (at(";")) {
      take();
      if (at_sequence_end()) break;  // tolerate a trailing ';'
      items.push_back(statement());
    }
    if (items.size() == 1) return std::move(items.front());
    Statement s;
    s.kind = StmtKind::Seq;
    s.span = items.front().span;
    s.children = std::move(items);
    return s;
  }

  Statement statement() {
    const Token t = peek();
    if (t.type != Tok::Ident)
      fail({"'skip'", "'setd'", "'rot'", "'eul'", "'if'", "'while'",
            "identifier"});
    Statement s;
    s.span = t.span;
    if (t.text == "skip") {
      take();
      s.kind = StmtKind::Skip;
    } else if (t.text == "setd") {
      take();
      s.kind = StmtKind::InitDensity;
      s.name = identifier();
      s.registers = register_list();
    } else if ((t.text == "rot" || t.text == "eul") && peek(1).type == Tok::Punct &&
               peek(1).text == "(") {
      take();
      s.kind = t.text == "rot" ? StmtKind::ParamUnitary : StmtKind::Eul;
      expect("(");
      s.param = identifier();
      expect(",");
      s.name = identifier();
      expect(")");
      s.registers = register_list();
    } else if (t.text == "if") {
      take();
      s.kind = StmtKind::IfMeas;
      s.name = identifier();
      s.registers = register_list();
      expect("{");
      do {
        s.labels.push_back(static_cast<int>(integer()));
        expect("->");
        s.children.push_back(sequence());
      } while (at(",") && (take(), true));
      expect("}");
      expect_word("fi");
    } else if (t.text == "while") {
      take();
      s.kind = StmtKind::While;
      s.name = identifier();
      s.registers = register_list();
      expect("=");
      const Token one = peek();
      if (integer() != 1) throw SyntaxError(one.span, {"'1'"}, "'" + one.text + "'");
      expect_word("do");
      s.children.push_back(sequence());
      expect_word("od");
    } else {
      std::string name = identifier();
      if (at(":=")) {
        take();
        expect("|0>");
        s.kind = StmtKind::Init;
        s.registers = {name};
      } else if (at("[")) {
        s.kind = StmtKind::Unitary;
        s.name = name;
        s.registers = register_list();
      } else {
        fail({"':='", "'['"});
      }
    }
    return s;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Program parse_unchecked(std::string_view text) {
  return Parser(Lexer(text).run()).run();
}

Program parse(std::string_view text) {
  Program p = parse_unchecked(text);
  require_valid(p);
  return p;
}

Program parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

// ---------------------------------------------------------------------------
// Formatting

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string regs_text(const std::vector<std::string>& regs) {
  std::string out = "[";
  for (std::size_t i = 0; i < regs.size(); ++i) {
    if (i) out += ", ";
    out += regs[i];
  }
  return out + "]";
}

void format_into(const Statement& s, int indent, std::string& out);

std::string pad(int indent) { return std::string(2 * indent, ' '); }

void format_into(const Statement& s, int indent, std::string& out) {
  switch (s.kind) {
    case StmtKind::Skip:
      out += pad(indent) + "skip";
      break;
    case StmtKind::Init:
      out += pad(indent) + s.registers.front() + " := |0>";
      break;
    case StmtKind::InitDensity:
      out += pad(indent) + "setd " + s.name + regs_text(s.registers);
      break;
    case StmtKind::Unitary:
      out += pad(indent) + s.name + regs_text(s.registers);
      break;
    case StmtKind::ParamUnitary:
    case StmtKind::Eul:
      out += pad(indent) + (s.kind == StmtKind::Eul ? "eul(" : "rot(") +
             s.param + ", " + s.name + ")" + regs_text(s.registers);
      break;
    case StmtKind::Seq:
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        if (i) out += ";\n";
        format_into(s.children[i], indent, out);
      }
      break;
    case StmtKind::IfMeas:
      out += pad(indent) + "if " + s.name + regs_text(s.registers) + " {\n";
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        out += pad(indent + 1) + std::to_string(s.labels[i]) + " ->\n";
        format_into(s.children[i], indent + 2, out);
        out += i + 1 < s.children.size() ? ",\n" : "\n";
      }
      out += pad(indent) + "} fi";
      break;
    case StmtKind::While:
      out += pad(indent) + "while " + s.name + regs_text(s.registers) +
             " = 1 do\n";
      format_into(s.body(), indent + 1, out);
      out += "\n" + pad(indent) + "od";
      break;
  }
}

}  // namespace

std::string format_complex(cplx value) {
  const double im = value.imag();
  const bool negative = std::signbit(im);
  return fmt_double(value.real()) + (negative ? "-" : "+") +
         fmt_double(negative ? -im : im) + "i";
}

std::string format_matrix(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += ", ";
    out += "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ", ";
      out += format_complex(m(i, j));
    }
    out += "]";
  }
  return out + "]";
}

std::string format(const Statement& statement, int indent) {
  std::string out;
  format_into(statement, indent, out);
  return out;
}

std::string format(const Program& p) {
  std::string out;
  for (const auto& r : p.registers)
    out += "var " + r.name + ":" + std::to_string(r.dim) + ";\n";
  for (const auto& prm : p.params) out += "param " + prm.name + ";\n";
  for (const auto& m : p.matrices) {
    out += std::string(keyword(m.kind)) + " " + m.name;
    if (!m.registers.empty()) out += regs_text(m.registers);
    out += " = " + format_matrix(m.value) + ";\n";
  }
  for (const auto& m : p.measurements) {
    out += "meas " + m.name + " = {";
    for (std::size_t k = 0; k < m.ops.size(); ++k) {
      if (k) out += ", ";
      out += std::to_string(m.labels[k]) + ": " + format_matrix(m.ops[k]);
    }
    out += "};\n";
  }
  out += format(p.body, 0) + "\n";
  return out;
}

}  // namespace qwd
