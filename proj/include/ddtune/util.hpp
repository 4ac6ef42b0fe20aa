#ifndef DDTUNE_UTIL_HPP
#define DDTUNE_UTIL_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace ddtune {

// Neumaier-compensated accumulator: sums are insensitive to the magnitude
// ordering of the terms, which keeps reductions reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_dot(const std::vector<double>& a,
                              const std::vector<double>& b) {
  CompensatedSum s;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s.add(a[i] * b[i]);
  return s.value();
}

// 17 significant digits: enough to round-trip an IEEE double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace ddtune

#endif
