#pragma once

/**
 * @file analysis.hpp
 * @brief Post-hoc analyses of a recorded rollout over its steady window:
 *        body wavelength, per-segment thrust split by mechanism, and the
 *        torque balance at the fin joint.
 */

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ubot/dynamics.hpp"
#include "ubot/morphology.hpp"
#include "ubot/rollout.hpp"

namespace ubot {

struct WavelengthResult {
    double wavelength = 0.0;        ///< λ [m]
    double wave_per_segment = 0.0;  ///< l / λ
    double slope = 0.0;             ///< d(phase)/ds [rad/m]; negative for a tailward wave
    std::vector<double> phase;      ///< unwrapped phase per marker [rad]
    std::vector<double> amplitude;  ///< fundamental amplitude per marker [m]
    bool flagged = false;
    std::string reason;
};

struct FundamentalFit {
    double amplitude = 0.0;
    double phase = 0.0;  ///< signal ≈ offset + amplitude·sin(2π f t + phase)
};

/// Least-squares fit of offset + a·sin + b·cos at frequency f.
inline FundamentalFit fit_fundamental(const std::vector<double>& t, const std::vector<double>& y, double f) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d aty = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double w = 2.0 * std::numbers::pi * f * t[i];
        const Eigen::Vector3d row(std::sin(w), std::cos(w), 1.0);
        ata += row * row.transpose();
        aty += row * y[i];
    }
    const Eigen::Vector3d c = ata.ldlt().solve(aty);
    return {std::hypot(c[0], c[1]), std::atan2(c[1], c[0])};
}

struct WavelengthOptions {
    double min_amplitude_ratio = 0.02;  ///< marker ignored below this fraction of l
    double max_wavelength_bodies = 20.0;  ///< longer waves count as standing
};

/// Phase regression from marker time series: markers[k][i] is the lateral
/// displacement of marker k at time t[i], located at arc length s[k].
inline WavelengthResult wavelength_from_signals(const std::vector<double>& t,
                                                const std::vector<std::vector<double>>& markers,
                                                const std::vector<double>& s, double f, double segment_length,
                                                double body_length, const WavelengthOptions& opt = {}) {
    WavelengthResult r;
    const std::size_t n = markers.size();
    if (n < 2 || t.size() < 3 || !(f > 0.0)) {
        r.flagged = true;
        r.reason = "insufficient data";
        return r;
    }
    std::vector<double> ss;
    std::vector<double> ph;
    std::size_t weak = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const FundamentalFit fit = fit_fundamental(t, markers[k], f);
        r.amplitude.push_back(fit.amplitude);
        r.phase.push_back(fit.phase);
        if (fit.amplitude < opt.min_amplitude_ratio * segment_length) {
            ++weak;
            continue;
        }
        ss.push_back(s[k]);
        ph.push_back(fit.phase);
    }
    // Unwrap along the body, markers being ordered head to tail.
    for (std::size_t k = 1; k < ph.size(); ++k) {
        double d = ph[k] - ph[k - 1];
        d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
        ph[k] = ph[k - 1] + d;
    }
    {
        std::size_t kk = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (r.amplitude[k] >= opt.min_amplitude_ratio * segment_length) r.phase[k] = ph[kk++];
        }
    }
    if (2 * weak >= n || ph.size() < 2) {
        r.flagged = true;
        r.reason = "amplitude below threshold at half or more of the markers";
        return r;
    }
    const double m = static_cast<double>(ph.size());
    double sm = 0.0, pm = 0.0;
    for (std::size_t k = 0; k < ph.size(); ++k) {
        sm += ss[k];
        pm += ph[k];
    }
    sm /= m;
    pm /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < ph.size(); ++k) {
        sxy += (ss[k] - sm) * (ph[k] - pm);
        sxx += (ss[k] - sm) * (ss[k] - sm);
    }
    r.slope = sxy / sxx;
    const double min_slope = 2.0 * std::numbers::pi / (opt.max_wavelength_bodies * body_length);
    if (!(std::abs(r.slope) > min_slope)) {
        r.flagged = true;
        r.reason = "phase gradient below threshold (standing wave)";
        return r;
    }
    r.wavelength = 2.0 * std::numbers::pi / std::abs(r.slope);
    r.wave_per_segment = segment_length / r.wavelength;
    return r;
}

/// Lateral displacement of every body midpoint from the mean heading line.
struct LateralSignals {
    std::vector<double> t;
    std::vector<std::vector<double>> markers;
};

inline LateralSignals lateral_signals(const Trajectory& tr, const RobotModel& model) {
    LateralSignals out;
    const auto idx = window_indices(tr, tr.reward_window);
    out.markers.resize(static_cast<std::size_t>(model.body_count()));
    if (idx.empty()) return out;
    const HeadingLine line = mean_heading_line(model, tr, idx);
    for (auto i : idx) {
        out.t.push_back(tr.samples[i].t);
        const auto mids = segment_midpoints(model, tr.samples[i]);
        for (std::size_t k = 0; k < mids.size(); ++k) out.markers[k].push_back(line.signed_distance(mids[k]));
    }
    return out;
}

inline WavelengthResult wavelength(const Trajectory& tr, const RobotModel& model, double f_input,
                                   const WavelengthOptions& opt = {}) {
    if (tr.aborted) {
        WavelengthResult r;
        r.flagged = true;
        r.reason = "aborted rollout";
        return r;
    }
    const LateralSignals sig = lateral_signals(tr, model);
    return wavelength_from_signals(sig.t, sig.markers, midpoint_arclength(model), f_input,
                                   model.segment(1).geometry.length, model.total_length(), opt);
}

struct ThrustDecomposition {
    Vec2 direction = Vec2::Zero();  ///< unit swim direction
    /// [segment][mechanism] window-averaged force along `direction` [N]
    std::vector<std::array<double, kMechanismCount>> segment;
    std::array<double, kMechanismCount> total{};  ///< summed over segments
    std::vector<double> segment_total;            ///< summed over mechanisms
    bool flagged = false;
    std::string reason;

    double grand_total() const {
        double s = 0.0;
        for (double v : total) s += v;
        return s;
    }
};

inline ThrustDecomposition thrust_decomposition(const Trajectory& tr) {
    ThrustDecomposition d;
    const Vec2 disp = tr.com_end - tr.com_window_start;
    if (tr.aborted || tr.forces.empty() || !(disp.norm() > 0.0)) {
        d.flagged = true;
        d.reason = tr.aborted ? "aborted rollout" : tr.forces.empty() ? "no force log" : "zero net displacement";
        return d;
    }
    d.direction = disp.normalized();
    const auto idx = window_indices(tr, tr.reward_window);
    const std::size_t nseg = tr.forces.front().segments.size();
    d.segment.assign(nseg, std::array<double, kMechanismCount>{});
    d.segment_total.assign(nseg, 0.0);
    for (auto i : idx) {
        const ForceSample& fs = tr.forces[i];
        for (std::size_t j = 0; j < nseg; ++j) {
            for (int m = 0; m < kMechanismCount; ++m) {
                d.segment[j][static_cast<std::size_t>(m)] += fs.segments[j].force[static_cast<std::size_t>(m)].dot(d.direction);
            }
        }
    }
    const double count = static_cast<double>(idx.size());
    for (std::size_t j = 0; j < nseg; ++j) {
        for (int m = 0; m < kMechanismCount; ++m) {
            auto& v = d.segment[j][static_cast<std::size_t>(m)];
            v /= count;
            d.total[static_cast<std::size_t>(m)] += v;
            d.segment_total[j] += v;
        }
    }
    return d;
}

struct TorqueComponent {
    double rms = 0.0;
    double mean = 0.0;
    double peak = 0.0;  ///< max |τ|
};

/// Generalized torque at the fin joint, split into spring and fluid mechanisms.
struct TailTorqueDecomposition {
    TorqueComponent spring;
    std::array<TorqueComponent, kMechanismCount> fluid{};  ///< added mass, pressure, drag, friction
    bool flagged = false;
    std::string reason;
};

inline TorqueComponent summarize(const std::vector<double>& v) {
    TorqueComponent c;
    if (v.empty()) return c;
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
        s += x;
        s2 += x * x;
        c.peak = std::max(c.peak, std::abs(x));
    }
    c.mean = s / v.size();
    c.rms = std::sqrt(s2 / v.size());
    return c;
}

inline TailTorqueDecomposition tail_torque_decomposition(const Trajectory& tr) {
    TailTorqueDecomposition d;
    if (tr.forces.empty()) {
        d.flagged = true;
        d.reason = "no force log";
        return d;
    }
    const auto idx = window_indices(tr, tr.reward_window);
    std::vector<double> spring;
    std::array<std::vector<double>, kMechanismCount> fluid;
    for (auto i : idx) {
        if (i >= tr.forces.size()) break;
        const JointTorques& jt = tr.forces[i].joints.back();
        spring.push_back(jt.spring);
        for (int m = 0; m < kMechanismCount; ++m) fluid[static_cast<std::size_t>(m)].push_back(jt.fluid[static_cast<std::size_t>(m)]);
    }
    d.spring = summarize(spring);
    for (int m = 0; m < kMechanismCount; ++m) d.fluid[static_cast<std::size_t>(m)] = summarize(fluid[static_cast<std::size_t>(m)]);
    if (tr.aborted) {
        d.flagged = true;
        d.reason = "aborted rollout";
    }
    return d;
}

}  // namespace ubot
