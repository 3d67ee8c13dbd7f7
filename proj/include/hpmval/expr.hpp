#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hpmval {

// Turns an event name into the identifier used in metric formulas:
// '.' and ':' become '_', e.g. L1D.REPLACEMENT -> L1D_REPLACEMENT.
std::string canonical_identifier(std::string_view event_name);

using CountMap = std::map<std::string, double, std::less<>>;

// A parsed arithmetic formula over identifiers, numeric literals, the four
// basic operators and parentheses. Integer-valued results are exact up to
// 2^53. Division by zero raises EvalError instead of producing infinity.
class Formula {
 public:
  Formula() = default;

  static Formula parse(std::string_view text);

  double evaluate(const std::function<double(const std::string&)>& resolve) const;

  // Identifiers in first-appearance order, duplicates removed.
  const std::vector<std::string>& identifiers() const { return idents_; }
  const std::string& text() const { return text_; }
  bool uses(std::string_view ident) const;

 private:
  enum class Op : std::uint8_t { push_const, push_ident, add, sub, mul, div, neg };
  struct Step {
    Op op;
    double value = 0.0;
    std::int32_t ident = -1;
  };

  std::string text_;
  std::vector<Step> program_;
  std::vector<std::string> idents_;

  friend class FormulaParser;
};

// Evaluates `formula` against per-event counts plus the reserved symbol
// `time` (seconds). Counts may be keyed by raw event name or by canonical
// identifier.
double evaluate_metric(const Formula& formula, const CountMap& counts, double time_s);
double evaluate_metric(std::string_view formula, const CountMap& counts, double time_s);

}  // namespace hpmval
