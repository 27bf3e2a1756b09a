#pragma once

/**
 * @file actuation.hpp
 * @brief Harmonic voltage gaits and the calibrated linear coil actuator.
 *
 * Voltage on actuator j (1-based, phases in cycles, phase of actuator 1 fixed at 0):
 *
 *   E_j(t) = e_j sin(2π (f t + Ψ_j))
 *
 * Actuator torque (quasi-static resistive circuit):
 *
 *   T = (E - k_emf ω_joint) / R · k_T
 *
 * Optimization vector layout: [e_1, Ψ_2, e_2, ..., Ψ_N, e_N, f].
 */

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubot {

struct ActuatorConstants {
    double torque_constant = 1.26e-3;  ///< k_T [N·m/A]
    double emf_constant = 1.26e-3;     ///< k_EMF [V·s]
    double resistance = 10.0;          ///< coil resistance R [Ω]

    void validate() const {
        if (!(torque_constant > 0.0) || !(emf_constant > 0.0) || !(resistance > 0.0)) {
            throw std::invalid_argument("actuator constants must be positive");
        }
    }
};

/// Open-loop harmonic gait. Index 0 holds actuator 1; phases[0] is always 0.
struct GaitPolicy {
    std::vector<double> amplitudes;  ///< e_j [V]
    std::vector<double> phases;      ///< Ψ_j [cycles]
    double frequency = 1.0;          ///< f_input [Hz]

    int actuator_count() const { return static_cast<int>(amplitudes.size()); }

    static GaitPolicy zero(int noa, double frequency = 1.0) {
        return GaitPolicy{std::vector<double>(static_cast<std::size_t>(noa), 0.0),
                          std::vector<double>(static_cast<std::size_t>(noa), 0.0), frequency};
    }

    /// Throws unless 0 <= e_j <= e_max, f > 0 and the phase vector is consistent.
    void validate(double e_max) const {
        if (amplitudes.empty() || phases.size() != amplitudes.size()) {
            throw std::invalid_argument("gait policy: amplitude/phase size mismatch");
        }
        if (phases.front() != 0.0) {
            throw std::invalid_argument("gait policy: phase of actuator 1 must be 0");
        }
        for (double e : amplitudes) {
            if (!(e >= 0.0 && e <= e_max)) {
                throw std::invalid_argument("gait policy: amplitude outside [0, E_max]");
            }
        }
        if (!(frequency > 0.0) || !std::isfinite(frequency)) {
            throw std::invalid_argument("gait policy: frequency must be positive");
        }
    }

    bool operator==(const GaitPolicy&) const = default;
};

inline double voltage_at(const GaitPolicy& policy, int actuator, double t) {
    if (actuator < 1 || actuator > policy.actuator_count()) {
        throw std::out_of_range("voltage_at: actuator index " + std::to_string(actuator) +
                                " outside 1.." + std::to_string(policy.actuator_count()));
    }
    const auto k = static_cast<std::size_t>(actuator - 1);
    return policy.amplitudes[k] *
           std::sin(2.0 * std::numbers::pi * (policy.frequency * t + policy.phases[k]));
}

inline double actuator_torque(double voltage, double joint_rate, const ActuatorConstants& c) {
    return (voltage - c.emf_constant * joint_rate) / c.resistance * c.torque_constant;
}

/// Flattens a policy as [e_1, Ψ_2, e_2, ..., Ψ_N, e_N, f] (length 2N).
inline std::vector<double> encode(const GaitPolicy& policy) {
    const int n = policy.actuator_count();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * n));
    out.push_back(policy.amplitudes[0]);
    for (int j = 1; j < n; ++j) {
        out.push_back(policy.phases[static_cast<std::size_t>(j)]);
        out.push_back(policy.amplitudes[static_cast<std::size_t>(j)]);
    }
    out.push_back(policy.frequency);
    return out;
}

inline GaitPolicy decode(std::span<const double> gamma, int noa) {
    if (noa < 1 || gamma.size() != static_cast<std::size_t>(2 * noa)) {
        throw std::invalid_argument("decode: expected vector of length " + std::to_string(2 * noa) +
                                    ", got " + std::to_string(gamma.size()));
    }
    GaitPolicy p = GaitPolicy::zero(noa);
    p.amplitudes[0] = gamma[0];
    for (int j = 1; j < noa; ++j) {
        const auto k = static_cast<std::size_t>(j);
        p.phases[k] = gamma[2 * k - 1];
        p.amplitudes[k] = gamma[2 * k];
    }
    p.frequency = gamma.back();
    return p;
}

}  // namespace ubot
