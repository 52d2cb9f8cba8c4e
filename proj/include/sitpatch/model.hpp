#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// Core domain types for the two-patch sterile-insect-technique model:
// parameters, the 8-component population state, release schedules and
// the vector field of the coupled ODE system.

namespace sit {

// All rates are per day, populations in raw individual counts.
struct ModelParams {
    double b = 10.0;     // birth rate of fertile females
    double nu_E = 0.08;  // emergence rate of viable eggs
    double mu_E = 0.05;  // death rate, aquatic phase
    double mu_F = 0.1;   // death rate, adult females
    double mu_M = 0.14;  // death rate, wild males
    double mu_s = 0.14;  // death rate, sterile males
    double K1 = 200.0;   // aquatic carrying capacity, patch 1
    double K2 = 180.0;   // aquatic carrying capacity, patch 2
    double gamma = 1.0;  // mating competitiveness of sterile males
    double r = 0.5;      // probability that an emerging adult is female
    double alpha = 0.5;  // sterile-male diffusion multiplier
    double beta = 0.8;   // wild-male diffusion multiplier
    double d12 = 0.06;   // female moving rate, patch 1 -> 2
    double d21 = 0.04;   // female moving rate, patch 2 -> 1

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Population state in the fixed coordinate order (E1,F1,M1,M1s,E2,F2,M2,M2s).
struct SystemState {
    double E1 = 0, F1 = 0, M1 = 0, M1s = 0;
    double E2 = 0, F2 = 0, M2 = 0, M2s = 0;

    static constexpr std::size_t dim = 8;

    double operator[](std::size_t i) const;
    double& operator[](std::size_t i);

    std::array<double, 8> to_array() const;
    static SystemState from_array(const std::array<double, 8>& a);

    // Largest wild component, the quantity the elimination criterion watches.
    double wild_max() const;
    bool non_negative() const;
};

std::string to_string(const SystemState& s);

// Release schedules. Rates are sterile males per day, released in patch 1.
struct ConstantRelease {
    double rate = 0.0;
};

// Releases a mass of period*rate at t = 0, period, 2*period, ...
struct PeriodicImpulsiveRelease {
    double rate = 0.0;    // average release rate over one period
    double period = 1.0;  // days
};

// rates[i] applies on [breakpoints[i], breakpoints[i+1]); the last rate
// extends to +infinity; the rate is 0 before breakpoints.front().
struct PiecewiseConstantRelease {
    std::vector<double> breakpoints;
    std::vector<double> rates;
};

using ReleaseSchedule =
    std::variant<ConstantRelease, PeriodicImpulsiveRelease, PiecewiseConstantRelease>;

void validate(const ReleaseSchedule& schedule);

struct ImpulseEvent {
    double time = 0.0;
    double mass = 0.0;  // sterile males added to patch 1 at `time`
};

// Absolutely continuous part of the release function at time t
// (0 for purely impulsive schedules).
double schedule_rate_at(const ReleaseSchedule& schedule, double t);

// All impulse events in [t0, t1). Periodic schedules fire at t = 0.
std::vector<ImpulseEvent> schedule_impulses_in(const ReleaseSchedule& schedule,
                                               double t0, double t1);

// Supremum of the windowed average release rate (the constant that the
// boundedness lemma calls C_Lambda), for window length T > 0.
double schedule_average_rate(const ReleaseSchedule& schedule, double window_T);

// Mean viable offspring per female over its lifetime,
// N = b r nu_E / (mu_F (mu_E + nu_E)). The wild population persists iff N > 1.
double basic_offspring_number(const ModelParams& p);

// Right-hand side of the population ODE system. `release_rate` is the
// absolutely continuous release term; impulses are handled by the
// integrator, not here. Throws std::domain_error on negative input state.
SystemState vector_field(const SystemState& s, double release_rate,
                         const ModelParams& p);

namespace detail {
// Same right-hand side without the domain check. Runge-Kutta stages and
// Newton iterates evaluate here: both may step transiently outside the
// non-negative cone.
SystemState vector_field_unchecked(const SystemState& s, double release_rate,
                                   const ModelParams& p);
}  // namespace detail

// Partial order preserved by the flow: componentwise <= on wild
// coordinates, reversed (>=) on the sterile-male coordinates M1s, M2s.
bool order_leq(const SystemState& u, const SystemState& v);

struct UniformBounds {
    double C_F = 0;   // eventual bound on F1 + F2
    double C_M = 0;   // eventual bound on M1 + M2
    double C_Ms = 0;  // eventual bound on M1s + M2s
};

// Eventual bounds from the boundedness lemma. `window_T` is the averaging
// window; `avg_rate` the corresponding windowed average release rate.
// window_T == 0 selects the bounded-release limit form C_Ms = avg_rate/mu_s.
UniformBounds uniform_bounds(const ModelParams& p, double window_T, double avg_rate);

}  // namespace sit
