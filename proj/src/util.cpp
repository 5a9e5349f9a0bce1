#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <system_error>

#include "clir/error.hpp"
#include "clir/numeric.hpp"

namespace clir {

std::string located(const std::string& file, std::size_t line, const std::string& what) {
  return file + ":" + std::to_string(line) + ": " + what;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

std::string format_decimal(double v) {
  std::string s = format_double(v);
  if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [end, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || end != last || first == last)
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s) {
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty())
    throw std::invalid_argument("not a non-negative integer: '" + s + "'");
  return v;
}

}  // namespace clir
