#include "sitpatch/equilibria.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "sitpatch/ode.hpp"

namespace sit {

// ---------------------------------------------------------------------------
//  2x2 matrix utilities and the closed-form exponential
// ---------------------------------------------------------------------------

Mat2 Mat2::inverse() const {
    const double d = det();
    if (d == 0.0) throw std::domain_error("Mat2: singular matrix");
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
}

Mat2 Mat2::mul(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
}

Mat2 mat_exp_2x2(const Mat2& A, double t) {
    if (t < 0) throw std::invalid_argument("mat_exp_2x2: t must be >= 0");
    const double m = 0.5 * A.trace();
    // Eigenvalues are m +- sqrt(disc); disc >= 0 for Metzler matrices.
    const double disc = 0.25 * (A.a11 - A.a22) * (A.a11 - A.a22) + A.a12 * A.a21;
    const double gap = 2.0 * std::sqrt(std::abs(disc));
    const double scale = std::max(1.0, std::abs(m) + 0.5 * gap);

    const Mat2 dev{A.a11 - m, A.a12, A.a21, A.a22 - m};  // A - m I, trace-free
    const double em = std::exp(m * t);

    if (gap < 1e-9 * scale) {
        // Degenerate spectrum: exp(At) = e^{mt} (I + t (A - mI)).
        return {em * (1.0 + t * dev.a11), em * t * dev.a12, em * t * dev.a21,
                em * (1.0 + t * dev.a22)};
    }
    if (disc > 0) {
        const double w = std::sqrt(disc);
        const double ch = std::cosh(w * t), sh = std::sinh(w * t) / w;
        return {em * (ch + sh * dev.a11), em * sh * dev.a12, em * sh * dev.a21,
                em * (ch + sh * dev.a22)};
    }
    const double w = std::sqrt(-disc);
    const double cs = std::cos(w * t), sn = std::sin(w * t) / w;
    return {em * (cs + sn * dev.a11), em * sn * dev.a12, em * sn * dev.a21,
            em * (cs + sn * dev.a22)};
}

Mat2 sterile_drift_matrix(const ModelParams& p) {
    return {-p.mu_s - p.alpha * p.d12, p.alpha * p.d21, p.alpha * p.d12,
            -p.mu_s - p.alpha * p.d21};
}

Mat2 wild_male_drift_matrix(const ModelParams& p) {
    return {-p.mu_M - p.beta * p.d12, p.beta * p.d21, p.beta * p.d12,
            -p.mu_M - p.beta * p.d21};
}

// ---------------------------------------------------------------------------
//  Equilibrium curves in the E1-E2 plane
// ---------------------------------------------------------------------------

namespace {

struct CurveCoefs {
    double d_ij, d_ji, K_j;
};

CurveCoefs curve_coefs(const ModelParams& p, CurveId id) {
    if (id == CurveId::F21) return {p.d21, p.d12, p.K1};
    return {p.d12, p.d21, p.K2};
}

}  // namespace

double f_curve(double x, const ModelParams& p, CurveId id, double n_eff) {
    if (n_eff <= 0) throw std::invalid_argument("f_curve: n_eff must be > 0");
    const auto c = curve_coefs(p, id);
    if (x < 0 || x >= c.K_j)
        throw std::domain_error("f_curve: argument outside [0, K_j)");
    const double sum = p.mu_F + c.d_ij + c.d_ji;
    return (sum / c.d_ij) * (1.0 / n_eff) * x / (1.0 - x / c.K_j) -
           ((p.mu_F + c.d_ij) / c.d_ij) * x;
}

std::optional<double> f_curve_positive_root(const ModelParams& p, CurveId id,
                                            double n_eff) {
    const auto c = curve_coefs(p, id);
    const double ratio = (p.mu_F + c.d_ij + c.d_ji) / (p.mu_F + c.d_ij);
    if (n_eff <= ratio) return std::nullopt;
    return c.K_j * (1.0 - ratio / n_eff);
}

double f_curve_inverse(double y, const ModelParams& p, CurveId id, double n_eff) {
    if (y < 0) throw std::domain_error("f_curve_inverse: argument must be >= 0");
    const auto c = curve_coefs(p, id);
    // The curve is increasing from 0 on [branch_lo, K_j).
    double lo = f_curve_positive_root(p, id, n_eff).value_or(0.0);
    if (y == 0.0) return lo;
    double hi = lo + 0.5 * (c.K_j - lo);
    while (f_curve(hi, p, id, n_eff) < y) hi = c.K_j - 0.1 * (c.K_j - hi);
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * c.K_j; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f_curve(mid, p, id, n_eff) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<WildEquilibrium> wild_positive_equilibrium(const ModelParams& p) {
    p.validate();
    const double N = basic_offspring_number(p);
    if (N <= 1.0) return std::nullopt;

    // E1+ is the positive root of f21 - f12^{-1} on (0, K1).
    auto h = [&](double x) {
        return f_curve(x, p, CurveId::F21, N) - f_curve_inverse(x, p, CurveId::F12, N);
    };

    double hi = p.K1 * 0.5;
    for (int k = 0; k < 60 && h(hi) <= 0; ++k) hi = p.K1 - 0.5 * (p.K1 - hi);
    if (h(hi) <= 0)
        throw std::runtime_error("wild_positive_equilibrium: no sign change found");

    double lo = 0.0;
    if (h(0.0) >= 0.0) {
        // Curve root at 0: h(0) = 0 with negative slope; back off from hi.
        lo = hi * 0.5;
        int k = 0;
        for (; k < 200 && h(lo) >= 0; ++k) lo *= 0.5;
        if (k == 200)
            throw std::runtime_error("wild_positive_equilibrium: bracket collapse");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * p.K1; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) < 0 ? lo : hi) = mid;
    }
    const double E1 = 0.5 * (lo + hi);
    const double E2 = f_curve(E1, p, CurveId::F21, N);

    WildEquilibrium eq;
    eq.E1 = E1;
    eq.E2 = E2;
    // Female balance: (F1, F2) from the linear relation between F and E.
    const double cF = p.r * p.nu_E / (p.mu_F * (p.mu_F + p.d12 + p.d21));
    eq.F1 = cF * ((p.mu_F + p.d21) * E1 + p.d21 * E2);
    eq.F2 = cF * (p.d12 * E1 + (p.mu_F + p.d12) * E2);
    // Male balance: M = -(1-r) nu_E A^{-1} E with A the male drift matrix.
    const Mat2 Ainv = wild_male_drift_matrix(p).inverse();
    const Vec2 M = Ainv.mul(Vec2{E1, E2});
    eq.M1 = -(1.0 - p.r) * p.nu_E * M.x;
    eq.M2 = -(1.0 - p.r) * p.nu_E * M.y;
    return eq;
}

// ---------------------------------------------------------------------------
//  Sterile steady state and periodic orbit
// ---------------------------------------------------------------------------

SterileSteady sterile_constant_steady(const ModelParams& p, double rate) {
    if (rate < 0) throw std::invalid_argument("sterile_constant_steady: rate < 0");
    SterileSteady s;
    const double denom = p.mu_s * (p.mu_s + p.alpha * p.d12 + p.alpha * p.d21);
    s.tau1 = (p.mu_s + p.alpha * p.d21) / denom;
    s.tau2 = p.alpha * p.d12 / denom;
    s.M1s_star = s.tau1 * rate;
    s.M2s_star = s.tau2 * rate;
    return s;
}

namespace {

// Golden-section minimum of a unimodal function on [a, b].
template <class F>
double golden_min(const F& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

Vec2 PeriodicSterileOrbit::value_at(double t) const {
    if (t < 0) throw std::invalid_argument("PeriodicSterileOrbit: t must be >= 0");
    double s = std::fmod(t, tau);
    return mat_exp_2x2(drift, s).mul(post_impulse);
}

Vec2 PeriodicSterileOrbit::average() const {
    // integral of exp(A t) over one period is A^{-1}(exp(A tau) - I).
    const Mat2 E = mat_exp_2x2(drift, tau);
    const Mat2 Ainv = drift.inverse();
    const Mat2 EmI{E.a11 - 1.0, E.a12, E.a21, E.a22 - 1.0};
    const Vec2 v = Ainv.mul(EmI).mul(post_impulse);
    return {v.x / tau, v.y / tau};
}

PeriodicSterileOrbit sterile_periodic_orbit(const ModelParams& p, double rate,
                                            double tau) {
    if (rate < 0) throw std::invalid_argument("sterile_periodic_orbit: rate < 0");
    if (tau <= 0) throw std::invalid_argument("sterile_periodic_orbit: tau <= 0");

    PeriodicSterileOrbit orbit;
    orbit.tau = tau;
    orbit.rate = rate;
    orbit.drift = sterile_drift_matrix(p);

    const Mat2 E = mat_exp_2x2(orbit.drift, tau);
    const Mat2 ImE{1.0 - E.a11, -E.a12, -E.a21, 1.0 - E.a22};
    const Mat2 R = ImE.inverse();
    orbit.post_impulse = R.mul(Vec2{tau * rate, 0.0});

    // Floors of the unit-rate orbit phi(t) = exp(A t) R (tau, 0)^T over one
    // period, per component; the minimum can sit at either endpoint.
    const Vec2 unit_post = R.mul(Vec2{tau, 0.0});
    auto phi = [&](double t, bool first) {
        const Vec2 v = mat_exp_2x2(orbit.drift, t).mul(unit_post);
        return first ? v.x : v.y;
    };
    const int grid_n = 1024;
    for (int comp = 0; comp < 2; ++comp) {
        const bool first = comp == 0;
        int best = 0;
        double best_val = phi(0.0, first);
        for (int k = 1; k <= grid_n; ++k) {
            const double val = phi(tau * k / grid_n, first);
            if (val < best_val) {
                best_val = val;
                best = k;
            }
        }
        const double a = tau * std::max(0, best - 1) / grid_n;
        const double b = tau * std::min(grid_n, best + 1) / grid_n;
        const double t_min = golden_min([&](double t) { return phi(t, first); }, a, b,
                                        1e-10 * tau);
        const double floor_val = std::min(phi(t_min, first), best_val);
        (first ? orbit.tau1_per : orbit.tau2_per) = floor_val;
    }
    return orbit;
}

// ---------------------------------------------------------------------------
//  Newton machinery for stationary systems
// ---------------------------------------------------------------------------

namespace {

// Mating fraction without the domain guard, for reduced systems whose
// Newton iterates may step slightly outside the cone.
double mating_fraction_raw(double M, double Ms, double gamma) {
    const double denom = M + gamma * Ms;
    if (denom == 0.0) return 0.0;
    return M / denom;
}

std::array<double, 6> wild_stationary_residual(const std::array<double, 6>& w,
                                               const ModelParams& p, double M1s,
                                               double M2s) {
    const SystemState s{w[0], w[1], w[2], M1s, w[3], w[4], w[5], M2s};
    const SystemState d = detail::vector_field_unchecked(s, 0.0, p);
    return {d.E1, d.F1, d.M1, d.E2, d.F2, d.M2};
}

template <int N>
struct NewtonOutcome {
    Eigen::Matrix<double, N, 1> x;
    bool converged = false;
    double residual = 0.0;
    std::string note;
};

template <int N, class F>
NewtonOutcome<N> damped_newton(const F& func, Eigen::Matrix<double, N, 1> x) {
    using VecN = Eigen::Matrix<double, N, 1>;
    using MatN = Eigen::Matrix<double, N, N>;

    auto eval = [&](const VecN& v) {
        VecN r;
        std::array<double, N> in{};
        for (int i = 0; i < N; ++i) in[i] = v[i];
        const auto out = func(in);
        for (int i = 0; i < N; ++i) r[i] = out[i];
        return r;
    };

    NewtonOutcome<N> res;
    VecN g = eval(x);
    for (int iter = 0; iter < 120; ++iter) {
        MatN J;
        for (int j = 0; j < N; ++j) {
            const double dx = 1e-6 * std::max(1.0, std::abs(x[j]));
            VecN xp = x, xm = x;
            xp[j] += dx;
            xm[j] -= dx;
            J.col(j) = (eval(xp) - eval(xm)) / (2.0 * dx);
        }
        const VecN step = J.partialPivLu().solve(-g);
        if (!step.allFinite()) {
            res.note = "singular Jacobian";
            res.x = x;
            res.residual = g.template lpNorm<Eigen::Infinity>();
            return res;
        }
        // Step halving on the residual norm, up to 40 halvings.
        double s = 1.0;
        const double g0 = g.norm();
        VecN x_next, g_next;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            x_next = x + s * step;
            g_next = eval(x_next);
            if (g_next.allFinite() && g_next.norm() < g0 * (1.0 - 1e-4 * s)) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            res.note = "line search stalled";
            res.x = x;
            res.residual = g0;
            return res;
        }
        const double update = (s * step).template lpNorm<Eigen::Infinity>() /
                              std::max(1.0, x_next.template lpNorm<Eigen::Infinity>());
        x = x_next;
        g = g_next;
        if (update < 1e-12) break;
    }
    res.x = x;
    res.residual = g.template lpNorm<Eigen::Infinity>();
    const double tol =
        std::min(1e-8, 1e-10 * std::max(1.0, x.template lpNorm<Eigen::Infinity>()) +
                           1e-12);
    res.converged = res.residual <= std::max(tol, 1e-11);
    if (!res.converged && res.note.empty()) res.note = "residual above tolerance";
    return res;
}

}  // namespace

std::string to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Undetermined: return "undetermined";
    }
    return "undetermined";
}

namespace {

Stability classify_stability(const ModelParams& p, const SystemState& eq, double rate) {
    // Eigenvalues of the full 8x8 Jacobian, by central differences.
    auto field = [&](const std::array<double, 8>& a) {
        return detail::vector_field_unchecked(SystemState::from_array(a), rate, p)
            .to_array();
    };
    Eigen::Matrix<double, 8, 8> J;
    const auto x0 = eq.to_array();
    for (int j = 0; j < 8; ++j) {
        const double dx = 1e-6 * std::max(1.0, std::abs(x0[j]));
        auto xp = x0, xm = x0;
        xp[j] += dx;
        xm[j] -= dx;
        const auto fp = field(xp), fm = field(xm);
        for (int i = 0; i < 8; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * dx);
    }
    const Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>> solver(J);
    constexpr double margin = 1e-9;
    double max_re = -1e300;
    bool near_zero = false;
    for (int i = 0; i < 8; ++i) {
        const double re = solver.eigenvalues()[i].real();
        max_re = std::max(max_re, re);
        if (std::abs(re) <= margin) near_zero = true;
    }
    if (max_re > margin) return Stability::Unstable;
    if (near_zero) return Stability::Undetermined;
    return Stability::Stable;
}

}  // namespace

EquilibriaResult controlled_equilibria(const ModelParams& p, double rate,
                                       const std::vector<WildEquilibrium>& seeds) {
    p.validate();
    if (rate < 0) throw std::invalid_argument("controlled_equilibria: rate < 0");
    const SterileSteady ss = sterile_constant_steady(p, rate);

    auto residual = [&](const std::array<double, 6>& w) {
        return wild_stationary_residual(w, p, ss.M1s_star, ss.M2s_star);
    };

    EquilibriaResult result;
    for (const auto& seed : seeds) {
        SeedReport report;
        report.seed = seed;
        Eigen::Matrix<double, 6, 1> x0;
        const auto sa = seed.to_array();
        for (int i = 0; i < 6; ++i) x0[i] = sa[i];

        auto out = damped_newton<6>(residual, x0);
        if (!out.converged) {
            report.note = "not converged: " + out.note;
            result.seeds.push_back(report);
            continue;
        }
        // Clamp tiny negative round-off; reject genuinely negative roots.
        bool negative = false;
        std::array<double, 6> w{};
        for (int i = 0; i < 6; ++i) {
            w[i] = out.x[i];
            if (w[i] < 0) {
                if (w[i] > -1e-7)
                    w[i] = 0.0;
                else
                    negative = true;
            }
        }
        if (negative) {
            report.note = "converged outside the non-negative cone";
            result.seeds.push_back(report);
            continue;
        }
        report.converged = true;

        SystemState state{w[0], w[1], w[2], ss.M1s_star, w[3], w[4], w[5], ss.M2s_star};
        const double scale = std::max({1.0, state.E1, state.E2});
        bool duplicate = false;
        for (const auto& root : result.roots) {
            double dist = 0.0;
            for (std::size_t i = 0; i < SystemState::dim; ++i)
                dist = std::max(dist, std::abs(root.state[i] - state[i]));
            if (dist < 1e-6 * scale) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            report.note = "duplicate root";
            result.seeds.push_back(report);
            continue;
        }
        ControlledEquilibrium eq;
        eq.state = state;
        eq.residual = out.residual;
        eq.stability = classify_stability(p, state, rate);
        result.roots.push_back(eq);
        result.seeds.push_back(report);
    }
    return result;
}

std::vector<WildEquilibrium> default_equilibrium_seeds(const ModelParams& p) {
    std::vector<WildEquilibrium> seeds;
    seeds.push_back({});  // origin
    if (auto plus = wild_positive_equilibrium(p)) {
        for (double scale : {1.0, 0.5, 0.25, 0.1, 0.05, 0.02}) {
            WildEquilibrium s = *plus;
            for (double* c : {&s.E1, &s.F1, &s.M1, &s.E2, &s.F2, &s.M2}) *c *= scale;
            seeds.push_back(s);
        }
    } else {
        seeds.push_back({0.25 * p.K1, 1.0, 1.0, 0.25 * p.K2, 1.0, 1.0});
    }
    return seeds;
}

double lambda_upper_bound_constant(const ModelParams& p) {
    const double N = basic_offspring_number(p);
    if (N <= 1.0)
        throw std::domain_error("lambda_upper_bound_constant: requires N > 1");
    if (p.gamma <= 0.0)
        throw std::domain_error("lambda_upper_bound_constant: requires gamma > 0");
    const auto bounds = uniform_bounds(p, 0.0, 0.0);
    const auto ss = sterile_constant_steady(p, 0.0);
    return (N - 1.0) * bounds.C_M / (p.gamma * std::min(ss.tau1, ss.tau2));
}

double lambda_upper_bound_periodic(const ModelParams& p, double tau) {
    const double N = basic_offspring_number(p);
    if (N <= 1.0)
        throw std::domain_error("lambda_upper_bound_periodic: requires N > 1");
    if (p.gamma <= 0.0)
        throw std::domain_error("lambda_upper_bound_periodic: requires gamma > 0");
    const auto bounds = uniform_bounds(p, 0.0, 0.0);
    const auto orbit = sterile_periodic_orbit(p, 1.0, tau);
    return (N - 1.0) * bounds.C_M /
           (p.gamma * std::min(orbit.tau1_per, orbit.tau2_per));
}

// ---------------------------------------------------------------------------
//  Large-diffusion limit system (E1, E2, F, M, Ms)
// ---------------------------------------------------------------------------

std::array<double, 5> limit_system_field(const std::array<double, 5>& s,
                                         const ModelParams& p, double eta,
                                         double rate) {
    if (eta <= 0) throw std::invalid_argument("limit_system_field: eta must be > 0");
    const double E1 = s[0], E2 = s[1], F = s[2], M = s[3], Ms = s[4];
    const double frac = mating_fraction_raw(M, Ms, p.gamma);
    return {
        eta / (eta + 1.0) * p.b * F * (1.0 - E1 / p.K1) - (p.nu_E + p.mu_E) * E1,
        1.0 / (eta + 1.0) * p.b * F * (1.0 - E2 / p.K2) - (p.nu_E + p.mu_E) * E2,
        p.r * p.nu_E * (E1 + E2) * frac - p.mu_F * F,
        (1.0 - p.r) * p.nu_E * (E1 + E2) - p.mu_M * M,
        rate - p.mu_s * Ms,
    };
}

std::vector<LimitEquilibrium> limit_equilibria(const ModelParams& p, double eta,
                                               double rate) {
    const double Ms = rate / p.mu_s;
    auto residual = [&](const std::array<double, 4>& w) {
        const auto f = limit_system_field({w[0], w[1], w[2], w[3], Ms}, p, eta, rate);
        return std::array<double, 4>{f[0], f[1], f[2], f[3]};
    };

    const double N = basic_offspring_number(p);
    const double K = p.K1 + p.K2;
    const double E_guess = std::max(K * (1.0 - 1.0 / std::max(N, 1.01)), 0.05 * K);
    const double F_guess = p.r * p.nu_E * E_guess / p.mu_F;
    const double M_guess = (1.0 - p.r) * p.nu_E * E_guess / p.mu_M;

    std::vector<LimitEquilibrium> roots;
    for (double scale : {1.0, 0.5, 0.25, 0.1, 0.02, 0.0}) {
        Eigen::Matrix<double, 4, 1> x0;
        x0 << scale * E_guess * p.K1 / K, scale * E_guess * p.K2 / K, scale * F_guess,
            scale * M_guess;
        auto out = damped_newton<4>(residual, x0);
        if (!out.converged) continue;
        std::array<double, 4> w{};
        bool negative = false;
        for (int i = 0; i < 4; ++i) {
            w[i] = out.x[i];
            if (w[i] < 0) {
                if (w[i] > -1e-7)
                    w[i] = 0.0;
                else
                    negative = true;
            }
        }
        if (negative) continue;
        bool dup = false;
        for (const auto& r : roots) {
            double dist = 0.0;
            for (int i = 0; i < 4; ++i) dist = std::max(dist, std::abs(r.state[i] - w[i]));
            if (dist < 1e-6 * std::max(1.0, w[0] + w[1])) dup = true;
        }
        if (dup) continue;
        roots.push_back({w, out.residual});
    }
    return roots;
}

namespace {

// Final-state extinction test for the reduced systems over a 2000-day
// horizon, wild threshold 1e-2.
template <std::size_t N, class RHS>
bool reduced_system_extinct(const RHS& rhs, std::array<double, N> y, int wild_dims) {
    ode::StepControls controls;
    controls.dt_max = 1.0;
    ode::StepStats stats;
    double h = controls.dt_max;
    ode::advance_adaptive<N>(rhs, y, 0.0, 2000.0, controls, stats, h);
    double wmax = 0.0;
    for (int i = 0; i < wild_dims; ++i) wmax = std::max(wmax, y[i]);
    return wmax < 1e-2;
}

double bisect_on_extinction(double lo, double hi, double tol,
                            const std::function<bool(double)>& extinct) {
    if (!(lo < hi)) throw std::invalid_argument("bisection: requires lo < hi");
    if (extinct(lo))
        throw std::invalid_argument("bisection: lower bracket endpoint already extinct");
    if (!extinct(hi))
        throw std::invalid_argument("bisection: upper bracket endpoint not extinct");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (extinct(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double limit_critical_lambda(const ModelParams& p, double eta, double lo, double hi,
                             double tol) {
    const auto roots = limit_equilibria(p, eta, 0.0);
    std::array<double, 4> start{};
    for (const auto& r : roots)
        if (r.state[0] + r.state[1] > start[0] + start[1]) start = r.state;
    if (start[0] + start[1] <= 0)
        throw std::runtime_error("limit_critical_lambda: no positive equilibrium at rate 0");

    auto extinct = [&](double rate) {
        auto rhs = [&](const ode::State<5>& s, double) {
            return limit_system_field(s, p, eta, rate);
        };
        return reduced_system_extinct<5>(rhs, {start[0], start[1], start[2], start[3], 0.0},
                                         4);
    };
    return bisect_on_extinction(lo, hi, tol, extinct);
}

// ---------------------------------------------------------------------------
//  Non-separation system (E, F, M, Ms) with K = K1 + K2
// ---------------------------------------------------------------------------

std::array<double, 4> homogeneous_field(const std::array<double, 4>& s,
                                        const ModelParams& p, double rate) {
    const double K = p.K1 + p.K2;
    const double E = s[0], F = s[1], M = s[2], Ms = s[3];
    const double frac = mating_fraction_raw(M, Ms, p.gamma);
    return {
        p.b * F * (1.0 - E / K) - (p.nu_E + p.mu_E) * E,
        p.r * p.nu_E * E * frac - p.mu_F * F,
        (1.0 - p.r) * p.nu_E * E - p.mu_M * M,
        rate - p.mu_s * Ms,
    };
}

double homogeneous_critical_lambda(const ModelParams& p) {
    const double N = basic_offspring_number(p);
    if (N <= 1.0)
        throw std::domain_error("homogeneous_critical_lambda: requires N > 1");
    if (p.gamma <= 0.0)
        throw std::domain_error("homogeneous_critical_lambda: requires gamma > 0");
    const double K = p.K1 + p.K2;
    return (1.0 - p.r) * p.nu_E * K * p.mu_s * (1.0 - N) * (1.0 - N) /
           (4.0 * N * p.mu_M * p.gamma);
}

double homogeneous_critical_lambda_by_simulation(const ModelParams& p, double lo,
                                                 double hi, double tol) {
    const double N = basic_offspring_number(p);
    if (N <= 1.0)
        throw std::domain_error(
            "homogeneous_critical_lambda_by_simulation: requires N > 1");
    const double K = p.K1 + p.K2;
    const double E0 = K * (1.0 - 1.0 / N);
    const std::array<double, 4> start{E0, p.r * p.nu_E * E0 / p.mu_F,
                                      (1.0 - p.r) * p.nu_E * E0 / p.mu_M, 0.0};
    auto extinct = [&](double rate) {
        auto rhs = [&](const ode::State<4>& s, double) {
            return homogeneous_field(s, p, rate);
        };
        return reduced_system_extinct<4>(rhs, start, 3);
    };
    return bisect_on_extinction(lo, hi, tol, extinct);
}

}  // namespace sit
