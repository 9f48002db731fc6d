#include "mstat/numeric.hpp"

#include <charconv>
#include <stdexcept>

#include "mstat/errors.hpp"

namespace mstat {

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw InputError("empty numeric literal");
  if (auto slash = text.find('/'); slash != std::string::npos) {
    Rational q;
    try {
      q = Rational(mpz_class(text.substr(0, slash), 10), mpz_class(text.substr(slash + 1), 10));
    } catch (const std::invalid_argument&) {
      throw InputError("malformed rational literal '" + text + "'");
    }
    if (q.get_den() == 0) throw InputError("zero denominator in '" + text + "'");
    q.canonicalize();
    return q;
  }

  std::string mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    try {
      exponent = std::stol(text.substr(e + 1));
    } catch (const std::exception&) {
      throw InputError("malformed exponent in '" + text + "'");
    }
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    mantissa.erase(0, 1);
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false;
  for (char ch : mantissa) {
    if (ch == '.') {
      if (seen_point) throw InputError("malformed numeric literal '" + text + "'");
      seen_point = true;
    } else if (ch >= '0' && ch <= '9') {
      digits.push_back(ch);
      if (seen_point) ++frac_digits;
    } else {
      throw InputError("malformed numeric literal '" + text + "'");
    }
  }
  if (digits.empty()) throw InputError("malformed numeric literal '" + text + "'");

  Rational q{mpz_class(digits, 10)};
  long scale = exponent - frac_digits;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  if (scale >= 0)
    q *= pow10;
  else
    q /= pow10;
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

Rational to_rational(double v) {
  if (!std::isfinite(v)) throw InputError("non-finite value cannot be made exact");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw InternalError("to_chars failed");
  return parse_rational(std::string(buf, end));
}

std::string to_string(const Rational& q) { return q.get_str(); }

double to_double(const Rational& q) {
  double d = q.get_d();
  double best = d;
  Rational best_err = abs(Rational(d) - q);
  for (double cand : {std::nextafter(d, -INFINITY), std::nextafter(d, INFINITY)}) {
    if (!std::isfinite(cand)) continue;
    Rational err = abs(Rational(cand) - q);
    if (err < best_err) {
      best_err = err;
      best = cand;
    }
  }
  return best;
}

QVec to_rational(std::span<const double> v) {
  QVec out;
  out.reserve(v.size());
  for (double x : v) out.push_back(to_rational(x));
  return out;
}

Vec to_double(std::span<const Rational> v) {
  Vec out;
  out.reserve(v.size());
  for (const auto& q : v) out.push_back(to_double(q));
  return out;
}

QMat to_rational(const Mat& m) {
  QMat q(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) q(r, c) = to_rational(m(r, c));
  return q;
}

Mat to_double(const QMat& m) {
  Mat d(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) d(r, c) = to_double(m(r, c));
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace mstat
