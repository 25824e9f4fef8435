#include "obsid/csv.hpp"

#include <charconv>
#include <cmath>

namespace obsid {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace obsid
