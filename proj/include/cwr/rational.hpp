#ifndef CWR_RATIONAL_HPP
#define CWR_RATIONAL_HPP

#include <gmpxx.h>

#include <string>

namespace cwr {

// Exact arbitrary-precision rational. gmpxx keeps values canonical
// (reduced, positive denominator) after every arithmetic operation.
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1)
{
    Rational r(num, den);
    r.canonicalize();
    return r;
}

// "num/den" form used in every CSV/JSON report; integers print as "n/1".
inline std::string to_fraction_string(const Rational& r)
{
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Rational parse_fraction(const std::string& text);

inline double to_double(const Rational& r) { return r.get_d(); }

inline bool is_zero(const Rational& r) { return sgn(r) == 0; }

inline bool is_one(const Rational& r) { return cmp(r, 1) == 0; }

} // namespace cwr

#endif
