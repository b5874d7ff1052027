// SPDX-License-Identifier: Apache-2.0
#pragma once

// Discrete-time controller primitives. Every block is a plain state struct
// plus a step function; none of them keep hidden globals.

#include "cpsim/error.hpp"
#include "cpsim/power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace cpsim::control {

using power::ThreePhaseFrame;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double wrap_angle(double theta) {
    double w = std::fmod(theta, two_pi);
    if (w < 0.0) {
        w += two_pi;
    }
    return w >= two_pi ? 0.0 : w;
}

struct DqFrame {
    double d = 0.0;
    double q = 0.0;
    double zero = 0.0;
    double theta = 0.0;
};

// Amplitude-invariant Park transform. With a balanced set of amplitude A
// leading the frame by phi, d = A cos(phi) and q = A sin(phi).

inline DqFrame abc_to_dq0(const ThreePhaseFrame& f, double theta) {
    const double ca = std::cos(theta), cb = std::cos(theta - power::two_thirds_pi),
                 cc = std::cos(theta + power::two_thirds_pi);
    const double sa = std::sin(theta), sb = std::sin(theta - power::two_thirds_pi),
                 sc = std::sin(theta + power::two_thirds_pi);
    return {(2.0 / 3.0) * (f.a * ca + f.b * cb + f.c * cc), -(2.0 / 3.0) * (f.a * sa + f.b * sb + f.c * sc),
            (f.a + f.b + f.c) / 3.0, theta};
}

inline ThreePhaseFrame dq0_to_abc(const DqFrame& f, double theta, double time = 0.0) {
    auto phase = [&](double shift) { return f.d * std::cos(theta + shift) - f.q * std::sin(theta + shift) + f.zero; };
    return {phase(0.0), phase(-power::two_thirds_pi), phase(power::two_thirds_pi), time};
}

// --- PI ------------------------------------------------------------------------------

struct PiState {
    double kp = 0.0;
    double ki = 0.0;
    double dt = 1e-3;
    double integrator = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;
};

/// u = kp*e + integrator, integrator advanced by ki*e*dt first. When the
/// output saturates and the error pushes further into the limit, the
/// integrator keeps its previous value.
inline double pi_step(PiState& s, double error) {
    const double held = s.integrator;
    s.integrator += s.ki * error * s.dt;
    double u = s.kp * error + s.integrator;
    if (s.upper && u > *s.upper) {
        if (s.ki * error > 0.0) {
            s.integrator = held;
        }
        u = *s.upper;
    } else if (s.lower && u < *s.lower) {
        if (s.ki * error < 0.0) {
            s.integrator = held;
        }
        u = *s.lower;
    }
    return u;
}

// --- first-order discrete low-pass b0 / (z - a1) ------------------------------------

struct LpfState {
    double b0 = 0.0609;
    double a1 = 0.9391;
    double fs = 1000.0;
    double y_prev = 0.0;
    double u_prev = 0.0;
};

inline void validate(const LpfState& s) {
    if (!(std::abs(s.a1) < 1.0)) {
        throw ModelError("low-pass pole must lie inside the unit circle");
    }
    if (!(s.fs > 0.0)) {
        throw ModelError("low-pass sample rate must be positive");
    }
}

/// y[k] = a1*y[k-1] + b0*u[k-1]; returns y[k] and stores u[k].
inline double lpf_step(LpfState& s, double u) {
    const double y = s.a1 * s.y_prev + s.b0 * s.u_prev;
    s.y_prev = y;
    s.u_prev = u;
    return y;
}

inline double lpf_dc_gain(const LpfState& s) { return s.b0 / (1.0 - s.a1); }

// --- SRF-PLL -------------------------------------------------------------------------

struct PllState {
    double theta = 0.0;
    double omega = two_pi * 60.0;
    double nominal_omega = two_pi * 60.0;
    PiState pi{50.0, 900.0, 1e-3};
    /// Below this voltage magnitude the q error is treated as zero.
    double magnitude_floor = 1e-6;
    DqFrame last;
};

inline PllState make_pll(double nominal_hz, double kp, double ki, double dt) {
    PllState s;
    s.nominal_omega = two_pi * nominal_hz;
    s.omega = s.nominal_omega;
    s.pi = PiState{kp, ki, dt};
    return s;
}

/// Park the input with the current angle, feed the normalised q component
/// through the PI into the frequency, then advance the angle. Returns the dq
/// image of `v` in the frame used for this sample.
inline DqFrame pll_step(PllState& s, const ThreePhaseFrame& v) {
    const auto dq = abc_to_dq0(v, s.theta);
    const double mag = std::hypot(dq.d, dq.q);
    const double e = mag > s.magnitude_floor ? dq.q / mag : 0.0;
    s.omega = s.nominal_omega + pi_step(s.pi, e);
    s.theta = wrap_angle(s.theta + s.omega * s.pi.dt);
    s.last = dq;
    return dq;
}

/// |Vsq| / |Vsd| of the last sample below `ratio`.
inline bool pll_locked(const PllState& s, double ratio = 0.01) {
    return std::abs(s.last.d) > s.magnitude_floor && std::abs(s.last.q) < ratio * std::abs(s.last.d);
}

// --- power ---------------------------------------------------------------------------

struct PowerPair {
    double p = 0.0; ///< W
    double q = 0.0; ///< var
};

inline PowerPair dq_power(const DqFrame& v, const DqFrame& i) {
    return {1.5 * (v.d * i.d + v.q * i.q), 1.5 * (-v.d * i.q + v.q * i.d)};
}

inline PowerPair instantaneous_pq(const ThreePhaseFrame& v, const ThreePhaseFrame& i) {
    return {v.a * i.a + v.b * i.b + v.c * i.c,
            ((v.a - v.b) * i.c + (v.b - v.c) * i.a + (v.c - v.a) * i.b) / std::numbers::sqrt3};
}

struct CurrentRefs {
    double id = 0.0;
    double iq = 0.0;
};

inline CurrentRefs current_refs(double p_ref, double q_ref, double vsd, double vsd_floor = 1.0) {
    if (!(vsd > vsd_floor)) {
        throw VsdTooSmall("Vsd " + std::to_string(vsd) + " V is below the " + std::to_string(vsd_floor) +
                          " V floor");
    }
    return {2.0 * p_ref / (3.0 * vsd), -2.0 * q_ref / (3.0 * vsd)};
}

// --- DC microgrid primary / secondary ------------------------------------------------

inline double droop(double vn, double k, double i) { return vn - k * i; }

/// Forward-Euler update of the integral correction term.
inline double secondary_step(double delta, double vref, double vn, double ks, double dt) {
    return delta + ks * (vn - vref) * dt;
}

struct DcMicrogridParams {
    double l = 1e-3;       ///< H
    double c = 2e-3;       ///< F
    double r_load = 10.0;  ///< ohm
    double k = 0.2;        ///< V/A droop gain
    double ks = 0.75;      ///< 1/s secondary gain
    double vn = 200.0;     ///< V nominal
};

inline void validate(const DcMicrogridParams& p) {
    if (!(p.l > 0 && p.c > 0 && p.r_load > 0 && p.vn > 0)) {
        throw ModelError("DC microgrid L, C, R_load and Vn must be positive");
    }
}

struct DcMicrogridState {
    double i = 0.0;     ///< inductor current
    double v = 0.0;     ///< capacitor voltage
    double delta = 0.0; ///< secondary correction
    double vref = 0.0;
    double v0 = 0.0;    ///< converter output, equal to vref
};

// --- reference profiles --------------------------------------------------------------

/// Piecewise-constant signal; each step holds from its time (inclusive) on.
class StepProfile {
public:
    struct Step {
        double time;
        double value;
    };

    StepProfile() = default;
    explicit StepProfile(std::vector<Step> steps, double initial = 0.0)
        : initial_(initial), steps_(std::move(steps)) {
        for (std::size_t k = 1; k < steps_.size(); ++k) {
            if (!(steps_[k].time > steps_[k - 1].time)) {
                throw ModelError("profile step times must be strictly increasing");
            }
        }
    }

    double at(double t) const {
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                   [](double x, const Step& s) { return x < s.time; });
        return it == steps_.begin() ? initial_ : std::prev(it)->value;
    }

    const std::vector<Step>& steps() const noexcept { return steps_; }
    double initial() const noexcept { return initial_; }

private:
    double initial_ = 0.0;
    std::vector<Step> steps_;
};

struct PowerSetpoint {
    StepProfile p_ref;
    StepProfile q_ref;
};

inline PowerPair setpoint_sample(const PowerSetpoint& sp, double t) { return {sp.p_ref.at(t), sp.q_ref.at(t)}; }

} // namespace cpsim::control
