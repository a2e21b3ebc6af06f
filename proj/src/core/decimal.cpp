#include "ctra/core/decimal.hpp"

#include <cctype>

namespace ctra {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

std::optional<Decimal> Decimal::parse(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;

  std::size_t i = 0;
  if (text[i] == '+' || text[i] == '-') ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++int_digits;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i, ++exp_digits;
    if (exp_digits == 0 || exp_digits > 4) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;
  return Decimal(Rep(std::string(text)));
}

Decimal Decimal::from_micros(std::int64_t micros) {
  return Decimal(Rep(Rep(micros) / Rep(1'000'000)));
}

std::string Decimal::to_fixed(int fraction) const {
  // Round half away from zero at the requested digit, then print exactly.
  Rep scale = boost::multiprecision::pow(Rep(10), fraction);
  Rep scaled = v_ * scale;
  Rep rounded = scaled < 0 ? -boost::multiprecision::floor(-scaled + Rep(0.5))
                           : boost::multiprecision::floor(scaled + Rep(0.5));
  if (rounded.is_zero()) rounded = 0;
  std::string digits = rounded.str(0, std::ios_base::fixed);
  bool negative = false;
  if (!digits.empty() && digits.front() == '-') {
    negative = true;
    digits.erase(0, 1);
  }
  if (auto dot = digits.find('.'); dot != std::string::npos) digits.erase(dot);
  if (fraction > 0) {
    if (digits.size() <= static_cast<std::size_t>(fraction)) {
      digits.insert(0, static_cast<std::size_t>(fraction) + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(fraction), ".");
  }
  return negative ? "-" + digits : digits;
}

std::string Decimal::to_string(int max_fraction) const {
  std::string s = to_fixed(max_fraction);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

}  // namespace ctra
