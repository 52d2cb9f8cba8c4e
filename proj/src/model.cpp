#include "sitpatch/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sit {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ModelParams: ") + what);
}

}  // namespace

void ModelParams::validate() const {
    require(b > 0, "b must be > 0");
    require(nu_E > 0, "nu_E must be > 0");
    require(mu_E > 0, "mu_E must be > 0");
    require(mu_F > 0, "mu_F must be > 0");
    require(mu_M > 0, "mu_M must be > 0");
    require(mu_s > 0, "mu_s must be > 0");
    require(K1 > 0, "K1 must be > 0");
    require(K2 > 0, "K2 must be > 0");
    require(d12 > 0, "d12 must be > 0");
    require(d21 > 0, "d21 must be > 0");
    require(gamma >= 0 && gamma <= 1, "gamma must be in [0,1]");
    require(r > 0 && r < 1, "r must be in (0,1)");
    require(alpha > 0, "alpha must be > 0");
    require(beta > 0, "beta must be > 0");
}

double SystemState::operator[](std::size_t i) const {
    return const_cast<SystemState&>(*this)[i];
}

double& SystemState::operator[](std::size_t i) {
    switch (i) {
        case 0: return E1;
        case 1: return F1;
        case 2: return M1;
        case 3: return M1s;
        case 4: return E2;
        case 5: return F2;
        case 6: return M2;
        case 7: return M2s;
        default: throw std::out_of_range("SystemState index");
    }
}

std::array<double, 8> SystemState::to_array() const {
    return {E1, F1, M1, M1s, E2, F2, M2, M2s};
}

SystemState SystemState::from_array(const std::array<double, 8>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
}

double SystemState::wild_max() const {
    double m = E1;
    for (double c : {F1, M1, E2, F2, M2}) m = std::max(m, c);
    return m;
}

bool SystemState::non_negative() const {
    for (std::size_t i = 0; i < dim; ++i)
        if ((*this)[i] < 0) return false;
    return true;
}

std::string to_string(const SystemState& s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "(%g, %g, %g, %g, %g, %g, %g, %g)", s.E1, s.F1,
                  s.M1, s.M1s, s.E2, s.F2, s.M2, s.M2s);
    return buf;
}

void validate(const ReleaseSchedule& schedule) {
    if (const auto* c = std::get_if<ConstantRelease>(&schedule)) {
        if (c->rate < 0) throw std::invalid_argument("ReleaseSchedule: rate must be >= 0");
    } else if (const auto* p = std::get_if<PeriodicImpulsiveRelease>(&schedule)) {
        if (p->rate < 0) throw std::invalid_argument("ReleaseSchedule: rate must be >= 0");
        if (p->period <= 0)
            throw std::invalid_argument("ReleaseSchedule: period must be > 0");
    } else {
        const auto& pw = std::get<PiecewiseConstantRelease>(schedule);
        if (pw.breakpoints.size() != pw.rates.size())
            throw std::invalid_argument(
                "ReleaseSchedule: breakpoints and rates must have equal length");
        for (std::size_t i = 0; i + 1 < pw.breakpoints.size(); ++i)
            if (!(pw.breakpoints[i] < pw.breakpoints[i + 1]))
                throw std::invalid_argument(
                    "ReleaseSchedule: breakpoints must be strictly increasing");
        for (double r : pw.rates)
            if (r < 0) throw std::invalid_argument("ReleaseSchedule: rates must be >= 0");
    }
}

double schedule_rate_at(const ReleaseSchedule& schedule, double t) {
    if (const auto* c = std::get_if<ConstantRelease>(&schedule)) return c->rate;
    if (std::get_if<PeriodicImpulsiveRelease>(&schedule)) return 0.0;
    const auto& pw = std::get<PiecewiseConstantRelease>(schedule);
    double rate = 0.0;
    for (std::size_t i = 0; i < pw.breakpoints.size(); ++i) {
        if (t >= pw.breakpoints[i])
            rate = pw.rates[i];
        else
            break;
    }
    return rate;
}

std::vector<ImpulseEvent> schedule_impulses_in(const ReleaseSchedule& schedule,
                                               double t0, double t1) {
    std::vector<ImpulseEvent> events;
    const auto* p = std::get_if<PeriodicImpulsiveRelease>(&schedule);
    if (!p || p->rate <= 0) return events;
    const double mass = p->rate * p->period;
    long k = static_cast<long>(std::ceil(t0 / p->period));
    if (k < 0) k = 0;
    // Guard against t0 landing a hair above an exact multiple.
    while (k > 0 && (k - 1) * p->period >= t0) --k;
    for (; k * p->period < t1; ++k)
        if (k * p->period >= t0) events.push_back({k * p->period, mass});
    return events;
}

double schedule_average_rate(const ReleaseSchedule& schedule, double window_T) {
    if (const auto* c = std::get_if<ConstantRelease>(&schedule)) return c->rate;
    if (const auto* p = std::get_if<PeriodicImpulsiveRelease>(&schedule)) {
        if (window_T <= 0) return p->rate;
        // Worst window catches ceil(T/period) impulses.
        const double n = std::ceil(window_T / p->period);
        return n * p->period * p->rate / window_T;
    }
    const auto& pw = std::get<PiecewiseConstantRelease>(schedule);
    double sup = 0.0;
    for (double r : pw.rates) sup = std::max(sup, r);
    return sup;
}

double basic_offspring_number(const ModelParams& p) {
    return p.b * p.r * p.nu_E / (p.mu_F * (p.mu_E + p.nu_E));
}

namespace {

// Fraction of hatching females fertilized by wild males. Taken as 0 when
// no males of either kind are present, so the extinction state stays an
// equilibrium. (The limit along M_s = 0 is 1; see README notes.)
double mating_fraction(double M, double Ms, double gamma) {
    const double denom = M + gamma * Ms;
    if (denom <= 0.0) return 0.0;
    return M / denom;
}

}  // namespace

SystemState vector_field(const SystemState& s, double release_rate,
                         const ModelParams& p) {
    if (!s.non_negative())
        throw std::domain_error("vector_field: negative state component");
    return detail::vector_field_unchecked(s, release_rate, p);
}

SystemState detail::vector_field_unchecked(const SystemState& s, double release_rate,
                                           const ModelParams& p) {
    const double frac1 = mating_fraction(s.M1, s.M1s, p.gamma);
    const double frac2 = mating_fraction(s.M2, s.M2s, p.gamma);

    SystemState d;
    d.E1 = p.b * s.F1 * (1.0 - s.E1 / p.K1) - (p.nu_E + p.mu_E) * s.E1;
    d.F1 = p.r * p.nu_E * s.E1 * frac1 - p.mu_F * s.F1 - p.d12 * s.F1 + p.d21 * s.F2;
    d.M1 = (1.0 - p.r) * p.nu_E * s.E1 - p.mu_M * s.M1 - p.beta * p.d12 * s.M1 +
           p.beta * p.d21 * s.M2;
    d.M1s = release_rate - p.mu_s * s.M1s - p.alpha * p.d12 * s.M1s +
            p.alpha * p.d21 * s.M2s;
    d.E2 = p.b * s.F2 * (1.0 - s.E2 / p.K2) - (p.nu_E + p.mu_E) * s.E2;
    d.F2 = p.r * p.nu_E * s.E2 * frac2 - p.mu_F * s.F2 - p.d21 * s.F2 + p.d12 * s.F1;
    d.M2 = (1.0 - p.r) * p.nu_E * s.E2 - p.mu_M * s.M2 - p.beta * p.d21 * s.M2 +
           p.beta * p.d12 * s.M1;
    d.M2s = -p.mu_s * s.M2s - p.alpha * p.d21 * s.M2s + p.alpha * p.d12 * s.M1s;
    return d;
}

bool order_leq(const SystemState& u, const SystemState& v) {
    return u.E1 <= v.E1 && u.F1 <= v.F1 && u.M1 <= v.M1 && u.M1s >= v.M1s &&
           u.E2 <= v.E2 && u.F2 <= v.F2 && u.M2 <= v.M2 && u.M2s >= v.M2s;
}

UniformBounds uniform_bounds(const ModelParams& p, double window_T, double avg_rate) {
    if (window_T < 0) throw std::invalid_argument("uniform_bounds: window_T < 0");
    if (avg_rate < 0) throw std::invalid_argument("uniform_bounds: avg_rate < 0");
    UniformBounds b;
    b.C_F = p.r * p.nu_E * (p.K1 + p.K2) / p.mu_F;
    b.C_M = (1.0 - p.r) * p.nu_E * (p.K1 + p.K2) / p.mu_M;
    if (window_T == 0.0)
        b.C_Ms = avg_rate / p.mu_s;  // limit form for bounded-rate releases
    else
        b.C_Ms = window_T * avg_rate / (1.0 - std::exp(-p.mu_s * window_T)) +
                 window_T * avg_rate;
    return b;
}

}  // namespace sit
