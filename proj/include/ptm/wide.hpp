#pragma once

// Double-double arithmetic (about 106 significand bits).
//
// DC decompositions built by nested product rules carry convex parts that
// are many orders of magnitude larger than the function they represent, so
// g - h cancels catastrophically in plain double. All DC part arithmetic is
// carried out in this type.

#include <cmath>
#include <ostream>

namespace ptm {

class Wide {
 public:
  constexpr Wide() = default;
  constexpr Wide(double v) : hi_(v), lo_(0.0) {}  // NOLINT: implicit by design of the numeric type

  static constexpr Wide from_parts(double hi, double lo) {
    Wide w;
    w.hi_ = hi;
    w.lo_ = lo;
    return w;
  }

  double hi() const { return hi_; }
  double lo() const { return lo_; }
  double to_double() const { return hi_ + lo_; }
  explicit operator double() const { return to_double(); }

  Wide operator-() const { return from_parts(-hi_, -lo_); }

  friend Wide operator+(Wide a, Wide b) {
    double s, e;
    two_sum(a.hi_, b.hi_, s, e);
    double t, f;
    two_sum(a.lo_, b.lo_, t, f);
    e += t;
    quick_two_sum(s, e, s, e);
    e += f;
    quick_two_sum(s, e, s, e);
    return from_parts(s, e);
  }
  friend Wide operator-(Wide a, Wide b) { return a + (-b); }

  friend Wide operator*(Wide a, Wide b) {
    double p = a.hi_ * b.hi_;
    double e = std::fma(a.hi_, b.hi_, -p);
    e += a.hi_ * b.lo_ + a.lo_ * b.hi_;
    double s, r;
    quick_two_sum(p, e, s, r);
    return from_parts(s, r);
  }
  friend Wide operator*(Wide a, double b) {
    double p = a.hi_ * b;
    double e = std::fma(a.hi_, b, -p);
    e += a.lo_ * b;
    double s, r;
    quick_two_sum(p, e, s, r);
    return from_parts(s, r);
  }
  friend Wide operator*(double a, Wide b) { return b * a; }

  friend Wide operator/(Wide a, Wide b) {
    // Two Newton-style correction steps on the double quotient.
    double q1 = a.hi_ / b.hi_;
    Wide r = a - b * q1;
    double q2 = r.hi_ / b.hi_;
    r = r - b * q2;
    double q3 = r.hi_ / b.hi_;
    double s, e;
    quick_two_sum(q1, q2, s, e);
    return Wide::from_parts(s, e) + Wide(q3);
  }

  Wide& operator+=(Wide o) { return *this = *this + o; }
  Wide& operator-=(Wide o) { return *this = *this - o; }
  Wide& operator*=(Wide o) { return *this = *this * o; }
  Wide& operator*=(double o) { return *this = *this * o; }

  friend bool operator<(Wide a, Wide b) { return a.hi_ < b.hi_ || (a.hi_ == b.hi_ && a.lo_ < b.lo_); }
  friend bool operator>(Wide a, Wide b) { return b < a; }
  friend bool operator<=(Wide a, Wide b) { return !(b < a); }
  friend bool operator>=(Wide a, Wide b) { return !(a < b); }
  friend bool operator==(Wide a, Wide b) { return a.hi_ == b.hi_ && a.lo_ == b.lo_; }

  friend std::ostream& operator<<(std::ostream& os, Wide w) { return os << w.to_double(); }

 private:
  static void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    double bb = s - a;
    e = (a - (s - bb)) + (b - bb);
  }
  static void quick_two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    e = b - (s - a);
  }

  double hi_ = 0.0;
  double lo_ = 0.0;
};

inline Wide abs(Wide w) { return w.hi() < 0.0 ? -w : w; }
inline Wide square(Wide w) { return w * w; }

}  // namespace ptm
