#include "hpmval/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "hpmval/error.hpp"

namespace hpmval {

std::string canonical_identifier(std::string_view event_name) {
  std::string out(event_name);
  for (char& c : out) {
    if (c == '.' || c == ':') c = '_';
  }
  return out;
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  Formula run() {
    Formula f;
    f.text_ = std::string(text_);
    out_ = &f;
    skip_ws();
    if (at_end()) throw ParseError("empty formula", 0, 1);
    expression();
    skip_ws();
    if (!at_end()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  // expression := term (('+'|'-') term)*
  void expression() {
    term();
    while (true) {
      skip_ws();
      if (consume('+')) {
        term();
        emit(Formula::Op::add);
      } else if (consume('-')) {
        term();
        emit(Formula::Op::sub);
      } else {
        return;
      }
    }
  }

  // term := factor (('*'|'/') factor)*
  void term() {
    factor();
    while (true) {
      skip_ws();
      if (consume('*')) {
        factor();
        emit(Formula::Op::mul);
      } else if (consume('/')) {
        factor();
        emit(Formula::Op::div);
      } else {
        return;
      }
    }
  }

  // factor := number | identifier | '(' expression ')' | '-' factor
  void factor() {
    skip_ws();
    if (at_end()) fail("expected operand");
    char c = text_[pos_];
    if (consume('(')) {
      expression();
      skip_ws();
      if (!consume(')')) fail("expected ')'");
      return;
    }
    if (consume('-')) {
      factor();
      emit(Formula::Op::neg);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (ident_start(c)) {
      identifier();
      return;
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  void number() {
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    out_->program_.push_back({Formula::Op::push_const, value, -1});
  }

  void identifier() {
    std::size_t start = pos_;
    while (!at_end() && ident_char(text_[pos_])) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    auto& idents = out_->idents_;
    auto it = std::find(idents.begin(), idents.end(), name);
    std::int32_t index;
    if (it == idents.end()) {
      index = static_cast<std::int32_t>(idents.size());
      idents.push_back(std::move(name));
    } else {
      index = static_cast<std::int32_t>(it - idents.begin());
    }
    out_->program_.push_back({Formula::Op::push_ident, 0.0, index});
  }

  void emit(Formula::Op op) { out_->program_.push_back({op, 0.0, -1}); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool at_end() const { return pos_ >= text_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " in formula '" + std::string(text_) + "'", 0,
                     static_cast<int>(pos_) + 1);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Formula* out_ = nullptr;
};

Formula Formula::parse(std::string_view text) { return FormulaParser(text).run(); }

bool Formula::uses(std::string_view ident) const {
  return std::find(idents_.begin(), idents_.end(), ident) != idents_.end();
}

double Formula::evaluate(const std::function<double(const std::string&)>& resolve) const {
  if (program_.empty()) throw EvalError("evaluating an unparsed formula");
  std::vector<double> stack;
  stack.reserve(8);
  for (const Step& step : program_) {
    switch (step.op) {
      case Op::push_const:
        stack.push_back(step.value);
        break;
      case Op::push_ident:
        stack.push_back(resolve(idents_[static_cast<std::size_t>(step.ident)]));
        break;
      case Op::neg:
        stack.back() = -stack.back();
        break;
      default: {
        double rhs = stack.back();
        stack.pop_back();
        double& lhs = stack.back();
        switch (step.op) {
          case Op::add: lhs += rhs; break;
          case Op::sub: lhs -= rhs; break;
          case Op::mul: lhs *= rhs; break;
          case Op::div:
            if (rhs == 0.0) {
              throw EvalError("division by zero in formula '" + text_ + "'");
            }
            lhs /= rhs;
            break;
          default: break;
        }
      }
    }
  }
  return stack.back();
}

double evaluate_metric(const Formula& formula, const CountMap& counts, double time_s) {
  return formula.evaluate([&](const std::string& ident) -> double {
    if (ident == "time") {
      return time_s;
    }
    if (auto it = counts.find(ident); it != counts.end()) return it->second;
    // Counts may be keyed by the raw event name; match canonically.
    for (const auto& [name, value] : counts) {
      if (canonical_identifier(name) == ident) return value;
    }
    throw EvalError("identifier '" + ident + "' has no value in formula '" +
                    formula.text() + "'");
  });
}

double evaluate_metric(std::string_view formula, const CountMap& counts, double time_s) {
  return evaluate_metric(Formula::parse(formula), counts, time_s);
}

}  // namespace hpmval
