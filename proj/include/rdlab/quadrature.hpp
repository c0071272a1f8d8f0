// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "rdlab/error.hpp"

namespace rdlab {

struct QuadratureOptions {
    double abs_tol = 1e-9;
    int max_depth = 40;
    /// The interval is first cut into this many equal panels, each integrated
    /// adaptively with a proportional share of the tolerance.
    int panels = 1;
};

namespace detail {

template <class F>
struct SimpsonState {
    const F& f;
    /// Error estimates of leaves cut off by the depth limit.
    double forced_error = 0.0;
    bool non_finite = false;
};

template <class F>
double simpson_recurse(SimpsonState<F>& st, double a, double b, double fa, double fm,
                       double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = st.f(lm);
    const double frm = st.f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double both = left + right;
    const double diff = both - whole;
    if (!std::isfinite(diff)) {
        st.non_finite = true;
        return both;
    }
    // Roundoff floor: once the correction is at the level of the sum's own
    // rounding there is nothing left to gain.
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(both);
    if (std::abs(diff) <= 15.0 * tol || std::abs(diff) <= floor) {
        return both + diff / 15.0;
    }
    if (depth <= 0) {
        st.forced_error += std::abs(diff) / 15.0;
        return both + diff / 15.0;
    }
    return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
///
/// Subintervals that exhaust the depth budget (integrable singularities such
/// as |x|^a cusps) are accepted as long as their summed error estimate stays
/// within abs_tol. Otherwise, or on a non-finite integrand value, throws
/// QuadratureError carrying `at`.
template <class F>
double integrate(const F& f, double a, double b, const QuadratureOptions& opt = {},
                 double at = std::numeric_limits<double>::quiet_NaN()) {
    if (a == b) return 0.0;
    const double sign = a < b ? 1.0 : -1.0;
    const double lo = a < b ? a : b;
    const double hi = a < b ? b : a;
    const int panels = opt.panels < 1 ? 1 : opt.panels;
    const double width = (hi - lo) / panels;
    detail::SimpsonState<F> st{f};
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double pa = lo + p * width;
        const double pb = p + 1 == panels ? hi : lo + (p + 1) * width;
        const double fa = f(pa);
        const double fb = f(pb);
        const double fm = f(0.5 * (pa + pb));
        const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        total += detail::simpson_recurse(st, pa, pb, fa, fm, fb, whole, opt.abs_tol / panels,
                                         opt.max_depth);
    }
    if (st.non_finite || !(st.forced_error <= opt.abs_tol) || !std::isfinite(total)) {
        throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "]",
                              std::isnan(at) ? hi : at);
    }
    return sign * total;
}

}  // namespace rdlab
