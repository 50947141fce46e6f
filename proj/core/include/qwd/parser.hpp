#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qwd/program.hpp"

namespace qwd {

class SyntaxError : public Error {
 public:
  SyntaxError(SourceSpan span, std::vector<std::string> expected,
              const std::string& found);
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::vector<std::string> expected_;
};

// Parses .qprog text and validates the result (validation errors are thrown
// as Error with the offending span).
Program parse(std::string_view text);
// Parses without running validate().
Program parse_unchecked(std::string_view text);
Program parse_file(const std::string& path);

std::string format(const Program& program);
std::string format(const Statement& statement, int indent = 0);
std::string format_complex(cplx value);
std::string format_matrix(const Matrix& m);

}  // namespace qwd
