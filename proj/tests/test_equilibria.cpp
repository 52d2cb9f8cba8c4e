#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sitpatch/equilibria.hpp"
#include "sitpatch/ode.hpp"

using namespace sit;

namespace {

ModelParams table_params() {
    ModelParams p;
    p.d12 = 0.06;
    p.d21 = 0.04;
    return p;
}

double mat_rel_diff(const Mat2& a, const Mat2& b) {
    double num = std::max({std::abs(a.a11 - b.a11), std::abs(a.a12 - b.a12),
                           std::abs(a.a21 - b.a21), std::abs(a.a22 - b.a22)});
    double den = std::max({1e-300, std::abs(b.a11), std::abs(b.a12), std::abs(b.a21),
                           std::abs(b.a22)});
    return num / den;
}

}  // namespace

TEST_CASE("matrix exponential: identity, diagonal, Taylor oracle") {
    const Mat2 As = sterile_drift_matrix(table_params());
    CHECK(mat_rel_diff(mat_exp_2x2(As, 0.0), Mat2::identity()) < 1e-15);

    ModelParams diag = table_params();
    diag.alpha = 1e-300;  // suppress diffusion, keep params valid
    const Mat2 Ad = sterile_drift_matrix(diag);
    const Mat2 E = mat_exp_2x2(Ad, 3.0);
    CHECK(E.a11 == doctest::Approx(std::exp(-diag.mu_s * 3.0)).epsilon(1e-12));
    CHECK(E.a22 == doctest::Approx(std::exp(-diag.mu_s * 3.0)).epsilon(1e-12));
    CHECK(std::abs(E.a12) < 1e-12);
    CHECK(std::abs(E.a21) < 1e-12);

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> diag_u(-3.0, 1.0), off_u(0.0, 2.0),
        t_u(0.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Mat2 A{diag_u(rng), off_u(rng), off_u(rng), diag_u(rng)};
        const double t = t_u(rng);
        const Mat2 got = mat_exp_2x2(A, t);
        const Mat2 want = oracles::taylor_exp_2x2(A, t);
        CHECK(mat_rel_diff(got, want) < 1e-10);
        if (A.a12 > 1e-3 && A.a21 > 1e-3 && t > 1e-3) {
            CHECK(got.a11 > 0);
            CHECK(got.a12 > 0);
            CHECK(got.a21 > 0);
            CHECK(got.a22 > 0);
        }
    }
}

TEST_CASE("matrix exponential: near-degenerate spectrum falls back cleanly") {
    // Equal diagonal, vanishing off-diagonal product: eigenvalue gap ~ 0.
    const Mat2 A{-0.5, 1e-12, 1e-12, -0.5};
    const Mat2 got = mat_exp_2x2(A, 1.0);
    const Mat2 want = oracles::taylor_exp_2x2(A, 1.0);
    CHECK(mat_rel_diff(got, want) < 1e-10);
}

TEST_CASE("sterile steady state: conversion constants and Cramer oracle") {
    const ModelParams p = table_params();
    const auto s = sterile_constant_steady(p, 500.0);
    CHECK(s.tau1 == doctest::Approx(6.0150).epsilon(1e-4));
    CHECK(s.tau2 == doctest::Approx(1.1278).epsilon(1e-4));
    CHECK(s.tau1 + s.tau2 == doctest::Approx(1.0 / p.mu_s).epsilon(1e-14));
    CHECK(s.M1s_star == doctest::Approx(3007.5).epsilon(1e-4));
    CHECK(s.M2s_star == doctest::Approx(563.9).epsilon(1e-3));
    CHECK(s.M1s_star + s.M2s_star == doctest::Approx(500.0 / p.mu_s).epsilon(1e-12));

    const auto ref = oracles::sterile_steady_by_cramer(p, 500.0);
    CHECK(s.M1s_star == doctest::Approx(ref.x).epsilon(1e-12));
    CHECK(s.M2s_star == doctest::Approx(ref.y).epsilon(1e-12));

    const auto zero = sterile_constant_steady(p, 0.0);
    CHECK(zero.M1s_star == 0.0);
    CHECK(zero.M2s_star == 0.0);
}

TEST_CASE("tau identity holds across random parameter draws") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.01, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        ModelParams p = table_params();
        p.mu_s = u(rng);
        p.alpha = u(rng);
        p.d12 = u(rng);
        p.d21 = u(rng);
        const auto s = sterile_constant_steady(p, 1.0);
        CHECK(oracles::rel_diff(s.tau1 + s.tau2, 1.0 / p.mu_s) < 1e-12);
    }
}

TEST_CASE("equilibrium curves: origin, positive root, slope identities") {
    const ModelParams p = table_params();
    const double N = basic_offspring_number(p);

    CHECK(f_curve(0.0, p, CurveId::F21, N) == 0.0);
    CHECK(f_curve(0.0, p, CurveId::F12, N) == 0.0);
    CHECK(f_curve(0.0, p, CurveId::F12, 1.0) == 0.0);

    // Root of f12 from the closed form: K2 (1 - ((mu_F+d21+d12)/(mu_F+d12))/N).
    const auto root = f_curve_positive_root(p, CurveId::F12, N);
    REQUIRE(root.has_value());
    CHECK(*root == doctest::Approx(172.6875).epsilon(1e-10));
    CHECK(std::abs(f_curve(*root, p, CurveId::F12, N)) < 1e-9);
    CHECK(*root < p.K2);

    // With n_eff = 1 both curves pass through the origin with slope d12/d21
    // (the curve and the inverse of its mirror agree to first order).
    const double h = 1e-7;
    const double slope_g21 = f_curve(h, p, CurveId::F21, 1.0) / h;
    const double slope_g12 = f_curve(h, p, CurveId::F12, 1.0) / h;
    CHECK(slope_g21 == doctest::Approx(p.d12 / p.d21).epsilon(1e-5));
    CHECK(1.0 / slope_g12 == doctest::Approx(p.d12 / p.d21).epsilon(1e-5));
    CHECK_FALSE(f_curve_positive_root(p, CurveId::F12, 1.0).has_value());

    CHECK_THROWS_AS(f_curve(p.K2, p, CurveId::F12, N), std::domain_error);
    CHECK_THROWS_AS(f_curve(-1.0, p, CurveId::F12, N), std::domain_error);
}

TEST_CASE("curve inverse round-trips on the increasing branch") {
    const ModelParams p = table_params();
    const double N = basic_offspring_number(p);
    for (double y : {0.5, 5.0, 50.0, 150.0, 190.0}) {
        const double x = f_curve_inverse(y, p, CurveId::F12, N);
        CHECK(f_curve(x, p, CurveId::F12, N) == doctest::Approx(y).epsilon(1e-9));
    }
    CHECK(f_curve_inverse(0.0, p, CurveId::F12, N) ==
          doctest::Approx(172.6875).epsilon(1e-10));
}

TEST_CASE("wild positive equilibrium matches the published values") {
    const auto eq = wild_positive_equilibrium(table_params());
    REQUIRE(eq.has_value());
    CHECK(eq->E1 == doctest::Approx(192.63).epsilon(0.005));
    CHECK(eq->F1 == doctest::Approx(67.92).epsilon(0.005));
    CHECK(eq->M1 == doctest::Approx(50.29).epsilon(0.005));
    CHECK(eq->E2 == doctest::Approx(174.83).epsilon(0.005));
    CHECK(eq->F2 == doctest::Approx(79.06).epsilon(0.005));
    CHECK(eq->M2 == doctest::Approx(54.69).epsilon(0.005));
    CHECK(eq->E1 < table_params().K1);
    CHECK(eq->E2 < table_params().K2);
}

TEST_CASE("wild equilibrium satisfies the linear female balance") {
    const ModelParams p = table_params();
    const auto eq = wild_positive_equilibrium(p);
    REQUIRE(eq.has_value());
    const double c = p.r * p.nu_E / (p.mu_F * (p.mu_F + p.d12 + p.d21));
    const double F1 = c * ((p.mu_F + p.d21) * eq->E1 + p.d21 * eq->E2);
    const double F2 = c * (p.d12 * eq->E1 + (p.mu_F + p.d12) * eq->E2);
    CHECK(oracles::rel_diff(eq->F1, F1) < 1e-10);
    CHECK(oracles::rel_diff(eq->F2, F2) < 1e-10);
}

TEST_CASE("wild equilibrium: subcritical and symmetric regimes") {
    ModelParams p = table_params();
    p.b = 0.3;  // pushes the offspring number below 1
    CHECK_FALSE(wild_positive_equilibrium(p).has_value());

    // Between 1 and the curve-root threshold: equilibrium still exists.
    p = table_params();
    p.b = 0.3575;  // N = 1.1 < (mu_F + d12 + d21)/(mu_F + d12) = 1.25
    const auto small = wild_positive_equilibrium(p);
    REQUIRE(small.has_value());
    CHECK(small->E1 > 0);
    CHECK(small->E2 > 0);

    p = table_params();
    p.K2 = p.K1;
    p.d21 = p.d12;
    const auto sym = wild_positive_equilibrium(p);
    REQUIRE(sym.has_value());
    CHECK(oracles::rel_diff(sym->E1, sym->E2) < 1e-10);
    CHECK(oracles::rel_diff(sym->F1, sym->F2) < 1e-10);
    CHECK(oracles::rel_diff(sym->M1, sym->M2) < 1e-10);
}

TEST_CASE("periodic sterile orbit: fixed point, average, floors") {
    const ModelParams p = table_params();
    const double rate = 300.0, tau = 10.0;
    const auto orbit = sterile_periodic_orbit(p, rate, tau);

    CHECK(orbit.post_impulse.x > 0);
    CHECK(orbit.post_impulse.y > 0);

    // Period map: drifting over one period and adding the impulse mass
    // reproduces the post-impulse value.
    const Vec2 pre = mat_exp_2x2(orbit.drift, tau).mul(orbit.post_impulse);
    CHECK(oracles::rel_diff(pre.x + tau * rate, orbit.post_impulse.x) < 1e-12);
    CHECK(oracles::rel_diff(pre.y, orbit.post_impulse.y) < 1e-12);

    const Vec2 avg = orbit.average();
    CHECK(oracles::rel_diff(avg.x + avg.y, rate / p.mu_s) < 1e-6);

    // Floors bound the orbit from below everywhere on a dense sample.
    for (int k = 0; k <= 500; ++k) {
        const Vec2 v = orbit.value_at(tau * k / 500.0);
        CHECK(v.x >= rate * orbit.tau1_per - 1e-9 * v.x);
        CHECK(v.y >= rate * orbit.tau2_per - 1e-9 * v.y);
    }
    CHECK(orbit.tau1_per > 0);
    CHECK(orbit.tau2_per > 0);

    // Zero rate: zero orbit, scale-free floors unchanged.
    const auto zero = sterile_periodic_orbit(p, 0.0, tau);
    CHECK(zero.post_impulse.x == 0.0);
    CHECK(zero.post_impulse.y == 0.0);
    CHECK(zero.tau1_per == doctest::Approx(orbit.tau1_per));
    CHECK(zero.tau2_per == doctest::Approx(orbit.tau2_per));
}

TEST_CASE("periodic orbit identities across random draws") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.02, 2.0), rate_u(10.0, 800.0),
        tau_u(1.0, 30.0);
    for (int trial = 0; trial < 20; ++trial) {
        ModelParams p = table_params();
        p.mu_s = u(rng);
        p.alpha = u(rng);
        p.d12 = u(rng);
        p.d21 = u(rng);
        const double rate = rate_u(rng), tau = tau_u(rng);
        const auto orbit = sterile_periodic_orbit(p, rate, tau);
        const Vec2 avg = orbit.average();
        CHECK(oracles::rel_diff(avg.x + avg.y, rate / p.mu_s) < 1e-6);
        const Vec2 pre = mat_exp_2x2(orbit.drift, tau).mul(orbit.post_impulse);
        CHECK(oracles::rel_diff(pre.x + tau * rate, orbit.post_impulse.x) < 1e-9);
        for (int k = 0; k <= 64; ++k) {
            const Vec2 v = orbit.value_at(tau * k / 64.0);
            CHECK(v.x >= rate * orbit.tau1_per * (1.0 - 1e-9));
            CHECK(v.y >= rate * orbit.tau2_per * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("controlled equilibria: uncontrolled case recovers both roots") {
    const ModelParams p = table_params();
    const auto result = controlled_equilibria(p, 0.0, default_equilibrium_seeds(p));
    REQUIRE(result.roots.size() == 2);

    const auto* zero = &result.roots[0];
    const auto* plus = &result.roots[1];
    if (zero->state.wild_max() > plus->state.wild_max()) std::swap(zero, plus);
    CHECK(zero->state.wild_max() < 1e-9);
    CHECK(zero->stability == Stability::Unstable);

    const auto ref = wild_positive_equilibrium(p);
    REQUIRE(ref.has_value());
    CHECK(oracles::rel_diff(plus->state.E1, ref->E1) < 1e-8);
    CHECK(oracles::rel_diff(plus->state.F1, ref->F1) < 1e-8);
    CHECK(oracles::rel_diff(plus->state.M1, ref->M1) < 1e-8);
    CHECK(oracles::rel_diff(plus->state.E2, ref->E2) < 1e-8);
    CHECK(plus->stability == Stability::Stable);
    CHECK(plus->residual <= 1e-8);
}

TEST_CASE("controlled equilibria at rate 200 match the published pair") {
    const ModelParams p = table_params();
    const auto result = controlled_equilibria(p, 200.0, default_equilibrium_seeds(p));

    const ControlledEquilibrium* lower = nullptr;
    const ControlledEquilibrium* upper = nullptr;
    for (const auto& root : result.roots) {
        if (root.state.wild_max() < 1e-6) continue;
        if (!lower || root.state.E1 < lower->state.E1) lower = &root;
        if (!upper || root.state.E1 > upper->state.E1) upper = &root;
    }
    REQUIRE(lower != nullptr);
    REQUIRE(upper != nullptr);
    CHECK(lower->state.E1 == doctest::Approx(17.29).epsilon(0.01));
    CHECK(lower->state.E2 == doctest::Approx(49.98).epsilon(0.01));
    CHECK(upper->state.E1 == doctest::Approx(85.79).epsilon(0.01));
    CHECK(upper->state.E2 == doctest::Approx(130.02).epsilon(0.01));
    CHECK(lower->stability == Stability::Unstable);
    CHECK(upper->stability == Stability::Stable);

    // Sterile coordinates come from the closed-form steady state.
    const auto ss = sterile_constant_steady(p, 200.0);
    for (const auto& root : result.roots) {
        CHECK(root.state.M1s == doctest::Approx(ss.M1s_star));
        CHECK(root.state.M2s == doctest::Approx(ss.M2s_star));
    }
}

TEST_CASE("controlled equilibria at rate 500: extinction root only") {
    const ModelParams p = table_params();
    const auto result = controlled_equilibria(p, 500.0, default_equilibrium_seeds(p));
    REQUIRE(result.roots.size() >= 1);
    for (const auto& root : result.roots) CHECK(root.state.wild_max() < 1e-9);
    const auto ss = sterile_constant_steady(p, 500.0);
    CHECK(result.roots[0].state.M1s == doctest::Approx(ss.M1s_star));
    CHECK(result.roots[0].state.M2s == doctest::Approx(ss.M2s_star));
    CHECK(result.roots[0].stability == Stability::Stable);
    // Every seed is accounted for, converged or not.
    CHECK(result.seeds.size() == default_equilibrium_seeds(p).size());
}

TEST_CASE("release-rate upper bounds") {
    const ModelParams p = table_params();
    CHECK(lambda_upper_bound_constant(p) == doctest::Approx(2865.8).epsilon(1e-3));

    ModelParams half = p;
    half.gamma = 0.5;
    CHECK(lambda_upper_bound_constant(half) ==
          doctest::Approx(2.0 * lambda_upper_bound_constant(p)).epsilon(1e-12));

    const double per = lambda_upper_bound_periodic(p, 10.0);
    CHECK(per > 0);
    CHECK(std::isfinite(per));

    ModelParams sub = p;
    sub.b = 0.3;
    CHECK_THROWS_AS(lambda_upper_bound_constant(sub), std::domain_error);
}

TEST_CASE("homogeneous critical rate: closed form and discriminant oracle") {
    const ModelParams p = table_params();
    const double lam0 = homogeneous_critical_lambda(p);
    CHECK(lam0 == doctest::Approx(109.44).epsilon(1e-3));

    // Oracle: the stationary equation reduces to a quadratic in E whose
    // real roots vanish exactly where the discriminant changes sign.
    const double N = basic_offspring_number(p);
    const double K = p.K1 + p.K2;
    auto disc = [&](double lam) {
        const double c = p.mu_M * p.gamma * lam / ((1.0 - p.r) * p.nu_E * p.mu_s);
        return (N - 1.0) * (N - 1.0) - 4.0 * N * c / K;
    };
    double lo = 0.0, hi = 1e4;
    REQUIRE(disc(lo) > 0);
    REQUIRE(disc(hi) < 0);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (disc(mid) > 0 ? lo : hi) = mid;
    }
    CHECK(oracles::rel_diff(lam0, 0.5 * (lo + hi)) < 1e-6);

    ModelParams twice = p;
    twice.gamma = 1.0;  // gamma already 1; compare against gamma = 0.5 doubling
    ModelParams halfg = p;
    halfg.gamma = 0.5;
    CHECK(homogeneous_critical_lambda(halfg) == doctest::Approx(2.0 * lam0).epsilon(1e-12));

    // N -> 1+ sends the threshold to 0.
    ModelParams near1 = p;
    near1.b = p.mu_F * (p.mu_E + p.nu_E) / (p.r * p.nu_E) * 1.0001;
    CHECK(homogeneous_critical_lambda(near1) < 1e-3);
}

TEST_CASE("limit system: zero state, aggregate equilibrium identity") {
    const ModelParams p = table_params();
    const double eta = p.K1 / p.K2;
    const auto zero = limit_system_field({0, 0, 0, 0, 0}, p, eta, 0.0);
    for (double v : zero) CHECK(v == 0.0);

    // At eta = K1/K2 the aggregate (E1+E2, F, M) solves the single-habitat
    // system with K = K1 + K2.
    const auto roots = limit_equilibria(p, eta, 0.0);
    const LimitEquilibrium* top = nullptr;
    for (const auto& r : roots)
        if (!top || r.state[0] + r.state[1] > top->state[0] + top->state[1]) top = &r;
    REQUIRE(top != nullptr);
    const double N = basic_offspring_number(p);
    const double K = p.K1 + p.K2;
    const double E_star = K * (1.0 - 1.0 / N);
    CHECK(oracles::rel_diff(top->state[0] + top->state[1], E_star) < 1e-8);
    CHECK(oracles::rel_diff(top->state[2], p.r * p.nu_E * E_star / p.mu_F) < 1e-8);
    CHECK(oracles::rel_diff(top->state[3], (1.0 - p.r) * p.nu_E * E_star / p.mu_M) < 1e-8);
}

TEST_CASE("limit system: rates above the critical value force extinction") {
    const ModelParams p = table_params();
    const double eta = p.K1 / p.K2;
    const double crit = limit_critical_lambda(p, eta, 10.0, 1000.0, 1.0);
    CHECK(crit > 0);

    // Simulate well above the threshold and confirm collapse of the wild part.
    const auto roots = limit_equilibria(p, eta, 0.0);
    std::array<double, 5> y{};
    for (const auto& r : roots)
        if (r.state[0] + r.state[1] > y[0] + y[1])
            y = {r.state[0], r.state[1], r.state[2], r.state[3], 0.0};
    const double rate = 1.3 * crit;
    auto rhs = [&](const ode::State<5>& s, double) {
        return limit_system_field(s, p, eta, rate);
    };
    ode::StepControls controls;
    ode::StepStats stats;
    double h = 1.0;
    ode::advance_adaptive<5>(rhs, y, 0.0, 2000.0, controls, stats, h);
    CHECK(std::max({y[0], y[1], y[2], y[3]}) < 1e-2);
}
