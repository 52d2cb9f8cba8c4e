#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sitpatch/model.hpp"

// Equilibrium analysis: closed-form sterile steady states and periodic
// orbits, the equilibrium curves of the uncontrolled system, Newton
// root-finding for controlled equilibria, and the analytic thresholds of
// the large-diffusion and non-separation limits.

namespace sit {

struct Vec2 {
    double x = 0, y = 0;
};

struct Mat2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }
    Mat2 inverse() const;
    Vec2 mul(const Vec2& v) const {
        return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y};
    }
    Mat2 mul(const Mat2& o) const;
    static Mat2 identity() { return {1, 0, 0, 1}; }
};

// exp(A t) in closed form via the eigen-decomposition of the 2x2 matrix,
// with a degenerate-spectrum expansion when the eigenvalue gap is below
// 1e-9 relative.
Mat2 mat_exp_2x2(const Mat2& A, double t);

// Drift matrix of the sterile-male pair (M1s, M2s).
Mat2 sterile_drift_matrix(const ModelParams& p);
// Drift matrix of the wild-male pair (M1, M2).
Mat2 wild_male_drift_matrix(const ModelParams& p);

// Equilibrium curves of the uncontrolled system in the E1-E2 plane.
// F21 maps E1 to E2, F12 maps E2 to E1. n_eff is the effective offspring
// number: the basic offspring number for the natural system, 1 for the
// replaced-fraction comparison system.
enum class CurveId { F21, F12 };

double f_curve(double x, const ModelParams& p, CurveId id, double n_eff);

// Unique positive root K_j^+ of the curve, absent when the curve is
// increasing through the origin.
std::optional<double> f_curve_positive_root(const ModelParams& p, CurveId id,
                                            double n_eff);

// Inverse on the increasing branch, by bisection. y must be >= 0.
double f_curve_inverse(double y, const ModelParams& p, CurveId id, double n_eff);

struct WildEquilibrium {
    double E1 = 0, F1 = 0, M1 = 0;
    double E2 = 0, F2 = 0, M2 = 0;

    std::array<double, 6> to_array() const { return {E1, F1, M1, E2, F2, M2}; }
    static WildEquilibrium from_array(const std::array<double, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
};

// The strictly positive equilibrium of the system without sterile males;
// absent when the basic offspring number is <= 1.
std::optional<WildEquilibrium> wild_positive_equilibrium(const ModelParams& p);

struct SterileSteady {
    double M1s_star = 0, M2s_star = 0;
    double tau1 = 0, tau2 = 0;  // M_i^s* = tau_i * rate; tau1 + tau2 = 1/mu_s
};

SterileSteady sterile_constant_steady(const ModelParams& p, double rate);

// Periodic orbit of the sterile pair under impulsive releases of mass
// rate*tau at times k*tau.
struct PeriodicSterileOrbit {
    Vec2 post_impulse;   // orbit value just after each impulse
    double tau = 0;      // period, days
    double tau1_per = 0; // componentwise orbit floors are tau_i_per * rate
    double tau2_per = 0;
    Mat2 drift;          // sterile drift matrix used by the evaluator
    double rate = 0;

    Vec2 value_at(double t) const;  // periodic extension, right-continuous
    Vec2 average() const;           // time average over one period
};

PeriodicSterileOrbit sterile_periodic_orbit(const ModelParams& p, double rate,
                                            double tau);

enum class Stability { Stable, Unstable, Undetermined };

std::string to_string(Stability s);

struct ControlledEquilibrium {
    SystemState state;
    Stability stability = Stability::Undetermined;
    double residual = 0.0;  // max-norm of the vector field at the root
};

struct SeedReport {
    WildEquilibrium seed;
    bool converged = false;
    std::string note;
};

struct EquilibriaResult {
    std::vector<ControlledEquilibrium> roots;  // deduplicated, non-negative
    std::vector<SeedReport> seeds;             // one entry per input seed
};

// Stationary points of the controlled system at a constant release rate.
// The sterile coordinates are eliminated analytically; the wild 6-vector
// is solved by damped Newton from each seed.
EquilibriaResult controlled_equilibria(const ModelParams& p, double rate,
                                       const std::vector<WildEquilibrium>& seeds);

// Seeds spanning the origin and scaled copies of the uncontrolled
// equilibrium; enough to find both positive roots below the fold.
std::vector<WildEquilibrium> default_equilibrium_seeds(const ModelParams& p);

// Explicit release-rate upper bounds for guaranteed elimination.
// Throw std::domain_error when N <= 1 (no releases needed) or gamma == 0.
double lambda_upper_bound_constant(const ModelParams& p);
double lambda_upper_bound_periodic(const ModelParams& p, double tau);

// ---- Large-diffusion limit system, state (E1, E2, F, M, Ms). ----

std::array<double, 5> limit_system_field(const std::array<double, 5>& s,
                                         const ModelParams& p, double eta,
                                         double rate);

struct LimitEquilibrium {
    std::array<double, 4> state{};  // (E1, E2, F, M); Ms = rate / mu_s
    double residual = 0.0;
};

std::vector<LimitEquilibrium> limit_equilibria(const ModelParams& p, double eta,
                                               double rate);

// Critical constant rate of the limit system, located by bisection on the
// simulated extinction outcome.
double limit_critical_lambda(const ModelParams& p, double eta, double lo, double hi,
                             double tol);

// ---- Non-separation (single habitat) system, state (E, F, M, Ms). ----

std::array<double, 4> homogeneous_field(const std::array<double, 4>& s,
                                        const ModelParams& p, double rate);

// Closed-form critical rate of the single-habitat system with K = K1 + K2.
double homogeneous_critical_lambda(const ModelParams& p);

double homogeneous_critical_lambda_by_simulation(const ModelParams& p, double lo,
                                                 double hi, double tol);

}  // namespace sit
