#pragma once

/**
 * @file rollout.hpp
 * @brief One swimming episode under a fixed gait: integrate, sample, score.
 *
 * The reward is the net center-of-mass displacement over the last
 * `reward_window` seconds divided by the window length. It is taken from the
 * undecimated endpoint states so the output rate never changes it.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ubot/actuation.hpp"
#include "ubot/dynamics.hpp"
#include "ubot/hydrodynamics.hpp"
#include "ubot/morphology.hpp"

namespace ubot {

struct SimOptions {
    double horizon = 6.0;        ///< [s]
    double dt = 1e-3;            ///< RK4 step [s]
    double output_rate = 100.0;  ///< decimated sample rate [Hz]
    double reward_window = 2.0;  ///< [s]
    bool record_forces = false;  ///< log the mechanism split at every output sample
    std::uint64_t seed = 0;      ///< carried as metadata only; rollouts are deterministic
    std::optional<GeneralizedState> initial;  ///< defaults to the straight body at rest

    /// Number of integrator steps in the horizon; throws if dt does not divide it.
    int step_count() const {
        const double n = horizon / dt;
        const double r = std::round(n);
        if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
            throw std::invalid_argument("sim options: horizon must be a whole number of steps");
        }
        return static_cast<int>(r);
    }

    int decimation() const {
        const double k = std::round(1.0 / (output_rate * dt));
        if (!(k >= 1.0) || std::abs(k * output_rate * dt - 1.0) > 1e-9) {
            throw std::invalid_argument("sim options: output period must be a whole number of steps");
        }
        return static_cast<int>(k);
    }

    int window_steps() const {
        const double n = reward_window / dt;
        const double r = std::round(n);
        if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
            throw std::invalid_argument("sim options: reward window must be a whole number of steps");
        }
        return static_cast<int>(r);
    }

    void validate() const {
        if (!(dt > 0.0) || !(horizon > 0.0) || !(output_rate > 0.0) || !(reward_window > 0.0)) {
            throw std::invalid_argument("sim options: dt, horizon, output rate and window must be positive");
        }
        if (reward_window > horizon) {
            throw std::invalid_argument("sim options: reward window longer than horizon");
        }
        (void)step_count();
        (void)decimation();
        (void)window_steps();
    }
};

struct Trajectory {
    std::vector<GeneralizedState> samples;  ///< decimated, t = 0 first
    std::vector<ForceSample> forces;        ///< one per sample when recorded
    Vec2 com_window_start = Vec2::Zero();   ///< undecimated CoM at t_end − window
    Vec2 com_end = Vec2::Zero();
    bool aborted = false;
    std::string abort_reason;
    double abort_time = 0.0;

    // metadata
    int noa = 0;
    double segment_length = 0.0;
    double total_length = 0.0;
    HydroParams hydro;
    GaitPolicy policy;
    double dt = 0.0;
    double horizon = 0.0;
    double reward_window = 0.0;
    std::uint64_t seed = 0;

    double end_time() const { return samples.empty() ? 0.0 : samples.back().t; }
};

/// Midpoint of every body (head first) in world coordinates.
inline std::vector<Vec2> segment_midpoints(const RobotModel& model, const GeneralizedState& s) {
    const auto frames = body_frames(model, s);
    std::vector<Vec2> out;
    out.reserve(frames.size());
    for (int j = 0; j < model.body_count(); ++j) {
        const auto& f = frames[static_cast<std::size_t>(j)];
        out.push_back(f.anterior + 0.5 * model.segment(j).geometry.length * f.axis);
    }
    return out;
}

/// Arc-length position of each body midpoint measured from the head tip.
inline std::vector<double> midpoint_arclength(const RobotModel& model) {
    std::vector<double> s;
    double acc = 0.0;
    for (const auto& seg : model.segments()) {
        s.push_back(acc + 0.5 * seg.geometry.length);
        acc += seg.geometry.length;
    }
    return s;
}

inline Trajectory simulate(const RobotModel& model, const HydroParams& hydro, const GaitPolicy& policy,
                           const SimOptions& opt = {}) {
    opt.validate();
    if (policy.actuator_count() != model.noa()) {
        throw std::invalid_argument("simulate: policy has " + std::to_string(policy.actuator_count()) +
                                    " actuators, robot has " + std::to_string(model.noa()));
    }
    const int steps = opt.step_count();
    const int every = opt.decimation();
    const int window_start = steps - opt.window_steps();

    Trajectory tr;
    tr.noa = model.noa();
    tr.segment_length = model.segment(1).geometry.length;
    tr.total_length = model.total_length();
    tr.hydro = hydro;
    tr.policy = policy;
    tr.dt = opt.dt;
    tr.horizon = opt.horizon;
    tr.reward_window = opt.reward_window;
    tr.seed = opt.seed;
    tr.samples.reserve(static_cast<std::size_t>(steps / every + 1));

    Integrator integ(model, hydro, policy);
    GeneralizedState s = opt.initial.value_or(GeneralizedState::rest(model));
    if (s.q.size() != model.dof() || s.qd.size() != model.dof()) {
        throw std::invalid_argument("simulate: initial state has the wrong dimension");
    }
    s.t = 0.0;

    auto record = [&](const GeneralizedState& st) {
        tr.samples.push_back(st);
        if (opt.record_forces) {
            ForceSample fs;
            integ.evaluate(st, &fs);
            tr.forces.push_back(std::move(fs));
        }
    };

    try {
        Integrator::check(s);
        record(s);
        if (window_start == 0) tr.com_window_start = center_of_mass(model, s);
        for (int i = 1; i <= steps; ++i) {
            integ.step(s, opt.dt);
            // Pin the clock to the step grid so sample times never drift.
            s.t = i * opt.dt;
            if (i == window_start) tr.com_window_start = center_of_mass(model, s);
            if (i % every == 0) record(s);
        }
        tr.com_end = center_of_mass(model, s);
    } catch (const SimulationError& e) {
        tr.aborted = true;
        tr.abort_reason = e.what();
        tr.abort_time = s.t;
    }
    return tr;
}

/// Window-averaged speed [m/s]; zero for aborted rollouts.
inline double reward(const Trajectory& tr) {
    if (tr.aborted) return 0.0;
    return (tr.com_end - tr.com_window_start).norm() / tr.reward_window;
}

/// Samples with t ≥ t_end − window (the steady window).
inline std::vector<std::size_t> window_indices(const Trajectory& tr, double window) {
    std::vector<std::size_t> idx;
    if (tr.samples.empty()) return idx;
    const double t0 = tr.end_time() - window - 1e-9;
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        if (tr.samples[i].t >= t0) idx.push_back(i);
    }
    return idx;
}

/// Mean heading line over a window: passes through the mean marker centroid
/// along the net displacement of the center of mass (or the mean head axis
/// when the body did not move).
struct HeadingLine {
    Vec2 point = Vec2::Zero();
    Vec2 direction = Vec2::UnitX();

    double signed_distance(const Vec2& p) const { return cross2(direction, p - point); }
};

inline HeadingLine mean_heading_line(const RobotModel& model, const Trajectory& tr,
                                     const std::vector<std::size_t>& idx) {
    HeadingLine line;
    if (idx.empty()) return line;
    Vec2 centroid = Vec2::Zero();
    Vec2 axis = Vec2::Zero();
    for (auto i : idx) {
        centroid += center_of_mass(model, tr.samples[i]);
        const double th = tr.samples[i].q[2];
        axis += Vec2(std::cos(th), std::sin(th));
    }
    line.point = centroid / static_cast<double>(idx.size());
    const Vec2 disp = center_of_mass(model, tr.samples[idx.back()]) - center_of_mass(model, tr.samples[idx.front()]);
    const double scale = model.total_length();
    if (disp.norm() > 1e-9 * scale) {
        line.direction = disp.normalized();
    } else if (axis.norm() > 0.0) {
        line.direction = axis.normalized();
    }
    return line;
}

/// Mean half peak-to-peak of `signal` over consecutive windows of `period`
/// seconds; a trailing partial period is dropped unless it is the only one.
inline double mean_half_peak_to_peak(const std::vector<double>& t, const std::vector<double>& signal, double period) {
    if (t.empty()) return 0.0;
    const double t0 = t.front();
    const double span = t.back() - t0;
    int cycles = (period > 0.0) ? static_cast<int>(std::floor(span / period + 1e-9)) : 0;
    if (cycles < 1) {
        const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
        return 0.5 * (*hi - *lo);
    }
    double acc = 0.0;
    for (int c = 0; c < cycles; ++c) {
        const double a = t0 + c * period - 1e-9;
        const double b = t0 + (c + 1) * period + 1e-9;
        double lo = INFINITY;
        double hi = -INFINITY;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] >= a && t[i] <= b) {
                lo = std::min(lo, signal[i]);
                hi = std::max(hi, signal[i]);
            }
        }
        acc += 0.5 * (hi - lo);
    }
    return acc / cycles;
}

struct GaitMetrics {
    double speed = 0.0;                   ///< U [m/s]
    std::vector<double> amplitude;        ///< Ā per body, head first [m]
    double mean_amplitude = 0.0;          ///< Ā averaged over bodies [m]
    double strouhal_like = 0.0;           ///< U / (l f)
    std::vector<double> amplitude_ratio;  ///< Ā / l per body
    double body_lengths_per_s = 0.0;
};

inline GaitMetrics gait_metrics(const Trajectory& tr, const RobotModel& model) {
    GaitMetrics g;
    g.speed = reward(tr);
    g.body_lengths_per_s = g.speed / model.total_length();
    const double l = model.segment(1).geometry.length;
    const double f = tr.policy.frequency;
    if (f > 0.0) g.strouhal_like = g.speed / (l * f);

    const int n = model.body_count();
    g.amplitude.assign(static_cast<std::size_t>(n), 0.0);
    g.amplitude_ratio.assign(static_cast<std::size_t>(n), 0.0);
    const auto idx = window_indices(tr, tr.reward_window);
    if (idx.size() < 2 || tr.aborted) return g;
    const HeadingLine line = mean_heading_line(model, tr, idx);

    std::vector<double> t;
    std::vector<std::vector<double>> lateral(static_cast<std::size_t>(n));
    for (auto i : idx) {
        t.push_back(tr.samples[i].t);
        const auto mids = segment_midpoints(model, tr.samples[i]);
        for (int j = 0; j < n; ++j) {
            lateral[static_cast<std::size_t>(j)].push_back(line.signed_distance(mids[static_cast<std::size_t>(j)]));
        }
    }
    const double period = f > 0.0 ? 1.0 / f : 0.0;
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        g.amplitude[jj] = mean_half_peak_to_peak(t, lateral[jj], period);
        g.amplitude_ratio[jj] = g.amplitude[jj] / l;
        sum += g.amplitude[jj];
    }
    g.mean_amplitude = sum / n;
    return g;
}

}  // namespace ubot
