#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace xcorr {

// Raised when an iterative numeric routine cannot reach its target
// tolerance; carries the tolerance it did achieve.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved tolerance " +
                           std::to_string(achieved) + ")"),
        achieved_(achieved) {}

  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file declares a format version this build does not understand.
class version_error : public parse_error {
 public:
  using parse_error::parse_error;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) throw std::invalid_argument("linspace: count must be positive");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;  // no accumulated drift at the far end
  return out;
}

}  // namespace xcorr
