#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

// Explicit Runge-Kutta stepping on fixed-size states. Shared by the
// 8-component two-patch integrator and the reduced limit systems.

namespace sit::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct StepControls {
    double dt_max = 1.0;
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    // States are population counts: round-off dips in (-clip_floor, 0) are
    // clipped to 0 when clip is set; anything more negative is a failure.
    bool clip = true;
    double clip_floor = 1e-12;
};

struct StepStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    double clipped = 0.0;  // total magnitude removed by clipping
};

class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " at t = " + std::to_string(t)), t_(t) {}
    double time() const { return t_; }

  private:
    double t_;
};

namespace detail {

template <std::size_t N>
void clip_nonnegative(State<N>& y, double t, const StepControls& c, StepStats& st) {
    if (!c.clip) return;
    for (double& v : y) {
        if (v < 0.0) {
            if (v <= -c.clip_floor)
                throw IntegrationError("state went negative beyond clip floor", t);
            st.clipped += -v;
            v = 0.0;
        }
    }
}

}  // namespace detail

// Advance y from t0 to t1 with the Dormand-Prince 5(4) pair. `h` is the
// step-size hint carried between calls. RHS: State<N> f(const State<N>&, double t).
template <std::size_t N, class RHS>
void advance_adaptive(const RHS& f, State<N>& y, double t0, double t1,
                      const StepControls& c, StepStats& st, double& h) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 4th-order weights of the embedded solution.
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    if (!(t1 > t0)) return;
    double t = t0;
    if (!(h > 0)) h = c.dt_max;
    h = std::min(h, c.dt_max);

    State<N> k1, k2, k3, k4, k5, k6, k7, ytmp, y5;
    while (true) {
        const double remaining = t1 - t;
        if (remaining <= 1e-14 * std::max(1.0, std::abs(t1))) break;
        const bool last = h >= remaining;
        const double hs = last ? remaining : h;
        if (hs < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationError("step size underflow", t);

        k1 = f(y, t);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        k2 = f(ytmp, t + c2 * hs);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        k3 = f(ytmp, t + c3 * hs);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = f(ytmp, t + c4 * hs);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = f(ytmp, t + c5 * hs);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                   a64 * k4[i] + a65 * k5[i]);
        k6 = f(ytmp, t + hs);
        for (std::size_t i = 0; i < N; ++i)
            y5[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                 b6 * k6[i]);
        k7 = f(y5, t + hs);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double y4i = y[i] + hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                            e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                c.abs_tol + c.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            const double d = (y5[i] - y4i) / sc;
            err += d * d;
        }
        err = std::sqrt(err / N);

        if (err <= 1.0) {
            t = last ? t1 : t + hs;  // snap onto the target on the final step
            y = y5;
            detail::clip_nonnegative(y, t, c, st);
            ++st.steps;
        } else {
            ++st.rejected;
        }
        const double factor =
            std::clamp(0.9 * std::pow(std::max(err, 1e-300), -0.2), 0.2, 5.0);
        h = std::min(hs * factor, c.dt_max);
    }
}

// Classic fixed-step RK4 with the step chosen to subdivide [t0, t1] evenly
// at width <= dt_max.
template <std::size_t N, class RHS>
void advance_rk4(const RHS& f, State<N>& y, double t0, double t1,
                 const StepControls& c, StepStats& st) {
    if (!(t1 > t0)) return;
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / c.dt_max));
    const double h = (t1 - t0) / static_cast<double>(n);
    State<N> k1, k2, k3, k4, ytmp;
    double t = t0;
    for (std::size_t s = 0; s < n; ++s) {
        k1 = f(y, t);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
        k2 = f(ytmp, t + 0.5 * h);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
        k3 = f(ytmp, t + 0.5 * h);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * k3[i];
        k4 = f(ytmp, t + h);
        for (std::size_t i = 0; i < N; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t = t0 + (t1 - t0) * static_cast<double>(s + 1) / static_cast<double>(n);
        detail::clip_nonnegative(y, t, c, st);
        ++st.steps;
    }
}

}  // namespace sit::ode
