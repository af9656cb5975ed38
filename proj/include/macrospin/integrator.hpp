// integrator.hpp: fixed-step explicit Runge-Kutta schemes (orders 2, 3, 4)
#pragma once

#include "model.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace macrospin {

// Non-finite state during integration; carries the last finite state
struct NumericalError : std::runtime_error {
    MacrospinState last_valid{};
    double time{0.0};

    NumericalError(const std::string& what, MacrospinState last, double t)
        : std::runtime_error(what), last_valid(last), time(t) {}
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct IntegratorSpec {
    int order{4};
    double dt{1e-3};  // in units of the driving period
};

// Number of steps per driving period; rejects dt that does not tile the period
inline long steps_per_period(const IntegratorSpec& spec) {
    if (spec.order < 2 || spec.order > 4) throw ValidationError("integrator order must be 2, 3 or 4");
    if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) throw ValidationError("dt must be > 0");
    const double r = 1.0 / spec.dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * n)
        throw ValidationError("dt = " + format_double(spec.dt) + " does not divide the driving period");
    return static_cast<long>(n);
}

// Whole number of periods expressed in steps; rejects non-integer step counts
inline long steps_for(double periods, long per_period, const char* what) {
    const double s = periods * static_cast<double>(per_period);
    const double n = std::round(s);
    if (!(periods >= 0.0) || std::abs(s - n) > 1e-6)
        throw ValidationError(std::string(what) + " must be a non-negative multiple of dt");
    return static_cast<long>(n);
}

struct ButcherTableau {
    int stages;
    std::array<std::array<double, 4>, 4> a;
    std::array<double, 4> b;
    std::array<double, 4> c;
};

// RK2 = explicit midpoint, RK3 = Kutta's third order, RK4 = classical
inline const ButcherTableau& tableau(int order) {
    static const ButcherTableau midpoint{2, {{{0, 0, 0, 0}, {0.5, 0, 0, 0}, {}, {}}}, {0.0, 1.0, 0, 0}, {0.0, 0.5, 0, 0}};
    static const ButcherTableau kutta3{3,
                                       {{{0, 0, 0, 0}, {0.5, 0, 0, 0}, {-1.0, 2.0, 0, 0}, {}}},
                                       {1.0 / 6, 2.0 / 3, 1.0 / 6, 0},
                                       {0.0, 0.5, 1.0, 0}};
    static const ButcherTableau classic4{4,
                                         {{{0, 0, 0, 0}, {0.5, 0, 0, 0}, {0, 0.5, 0, 0}, {0, 0, 1.0, 0}}},
                                         {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6},
                                         {0.0, 0.5, 0.5, 1.0}};
    switch (order) {
        case 2: return midpoint;
        case 3: return kutta3;
        case 4: return classic4;
        default: throw ValidationError("integrator order must be 2, 3 or 4");
    }
}

// One explicit RK step for any vector-space-like State (needs +, and double*State)
template <class State, class F>
State rk_step(const ButcherTableau& tab, F&& f, double t, const State& y, double h) {
    std::array<State, 4> k{};
    for (int s = 0; s < tab.stages; ++s) {
        State ys = y;
        for (int q = 0; q < s; ++q)
            if (tab.a[s][q] != 0.0) ys = ys + (h * tab.a[s][q]) * k[q];
        k[s] = f(t + tab.c[s] * h, ys);
    }
    State out = y;
    for (int s = 0; s < tab.stages; ++s)
        if (tab.b[s] != 0.0) out = out + (h * tab.b[s]) * k[s];
    return out;
}

}  // namespace macrospin
