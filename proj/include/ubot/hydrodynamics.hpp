#pragma once

/**
 * @file hydrodynamics.hpp
 * @brief Segmental fluid forces: reactive (added mass + boundary pressure)
 *        and resistive (quadratic lateral drag + longitudinal friction).
 *
 * All quantities are expressed in the segment frame: x runs from the anterior
 * boundary plane (x = 0) to the posterior one (x = l), y is lateral. Torques
 * are taken about the anterior boundary point on the segment axis.
 *
 * Reactive wrench, with m̄ = C_a (π/4) h² ρ_f and v_l = v_0 + ω l:
 *
 *   f_x =  m̄ l ω v_0 + ½ m̄ l² ω² + C_p ½ m̄ (v_0² - v_l²)
 *   f_y = -m̄ l a_0 - ½ m̄ l² ω̇
 *   c_z = -[½ m̄ l² (a_0 - ω u) + ⅓ m̄ l³ ω̇ + m̄ l u v_l]
 *
 * The first two terms of f_x are the rotation of the added-mass momentum
 * ∫ m̄ v dx; with C_p = 1 they cancel the boundary pressure exactly.
 *
 * Resistive wrench, with v(x) = v_0 + ω x:
 *
 *   f_x = -½ ρ_f C_f P l |u| u
 *   f_y = -½ ρ_f C_d h ∫ |v| v dx
 *   c_z = -½ ρ_f C_d h ∫ |v| v x dx
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Core>

namespace ubot {

enum class HydroModel { hm1, hm2, hm3, hm4 };

inline std::string to_string(HydroModel m) {
    switch (m) {
        case HydroModel::hm1: return "HM1";
        case HydroModel::hm2: return "HM2";
        case HydroModel::hm3: return "HM3";
        case HydroModel::hm4: return "HM4";
    }
    return "?";
}

/// Accepts "HM4", "hm-4", "4".
inline HydroModel parse_hydro_model(std::string_view text) {
    std::string s;
    for (char c : text) {
        if (c != '-' && c != '_') s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (s.starts_with("HM")) s = s.substr(2);
    if (s == "1") return HydroModel::hm1;
    if (s == "2") return HydroModel::hm2;
    if (s == "3") return HydroModel::hm3;
    if (s == "4") return HydroModel::hm4;
    throw std::invalid_argument("unknown hydrodynamic model '" + std::string(text) + "'");
}

/// (C_a, C_p) of the four preset models.
inline std::pair<double, double> hm_preset(HydroModel m) {
    switch (m) {
        case HydroModel::hm1: return {0.0, 0.0};
        case HydroModel::hm2: return {1.0, 0.0};
        case HydroModel::hm3: return {1.0, 0.5};
        case HydroModel::hm4: return {1.0, 1.0};
    }
    throw std::invalid_argument("unknown hydrodynamic model");
}

struct HydroParams {
    double added_mass_coeff = 1.0;  ///< C_a
    double pressure_coeff = 1.0;    ///< C_p
    double friction_coeff = 0.06;   ///< C_f
    double drag_coeff = 2.25;       ///< C_d
    double fluid_density = 1000.0;  ///< ρ_f [kg/m³]
    std::optional<HydroModel> model;
    /// Apply the C_p term on the head's anterior plane too. Off by default:
    /// a real nose tapers to zero section, so no momentum crosses it.
    bool nose_pressure = false;

    static HydroParams preset(HydroModel m, double friction = 0.06, double drag = 2.25,
                              double density = 1000.0) {
        const auto [ca, cp] = hm_preset(m);
        return HydroParams{ca, cp, friction, drag, density, m};
    }

    /// Every coefficient zero: the chain moves as in vacuum.
    static HydroParams none() { return HydroParams{0.0, 0.0, 0.0, 0.0, 1000.0, std::nullopt}; }

    bool reactive() const { return added_mass_coeff != 0.0; }

    void validate() const {
        if (!(added_mass_coeff >= 0.0) || !(pressure_coeff >= 0.0) || !(friction_coeff >= 0.0) ||
            !(drag_coeff >= 0.0)) {
            throw std::invalid_argument("hydrodynamic coefficients must be non-negative");
        }
        if (!(fluid_density > 0.0)) throw std::invalid_argument("fluid density must be positive");
        if (model) {
            const auto [ca, cp] = hm_preset(*model);
            if (ca != added_mass_coeff || cp != pressure_coeff) {
                throw std::invalid_argument("(C_a, C_p) inconsistent with " + to_string(*model));
            }
        }
    }
};

/// Segment-frame kinematics of one segment. `a0` and `omega_dot` hold the
/// lateral acceleration of the anterior boundary point and the angular
/// acceleration when known; kinematics routines fill `a0` with its
/// velocity-product part only.
struct SegmentFrameState {
    double u = 0.0;          ///< longitudinal velocity [m/s]
    double v0 = 0.0;         ///< lateral velocity at the anterior boundary [m/s]
    double vl = 0.0;         ///< lateral velocity at the posterior boundary [m/s]
    double omega = 0.0;      ///< angular velocity [rad/s]
    double a0 = 0.0;         ///< lateral acceleration at the anterior boundary [m/s²]
    double omega_dot = 0.0;  ///< angular acceleration [rad/s²]
    double length = 0.0;     ///< l [m]
    double depth = 0.0;      ///< h [m]
    double perimeter = 0.0;  ///< P [m]

    /// Sets v0 and ω together so that vl stays consistent.
    static SegmentFrameState rigid(double u, double v0, double omega, double length, double depth,
                                   double perimeter, double a0 = 0.0, double omega_dot = 0.0) {
        return SegmentFrameState{u, v0, v0 + omega * length, omega, a0, omega_dot, length, depth, perimeter};
    }
};

struct PlanarWrench {
    double f_long = 0.0;  ///< along the segment axis [N]
    double f_lat = 0.0;   ///< lateral [N]
    double torque = 0.0;  ///< about the anterior boundary point [N·m]

    PlanarWrench& operator+=(const PlanarWrench& o) {
        f_long += o.f_long;
        f_lat += o.f_lat;
        torque += o.torque;
        return *this;
    }
    friend PlanarWrench operator+(PlanarWrench a, const PlanarWrench& b) { return a += b; }
    friend PlanarWrench operator-(const PlanarWrench& a, const PlanarWrench& b) {
        return {a.f_long - b.f_long, a.f_lat - b.f_lat, a.torque - b.torque};
    }
    friend PlanarWrench operator*(double s, const PlanarWrench& w) {
        return {s * w.f_long, s * w.f_lat, s * w.torque};
    }
    Eigen::Vector3d vec() const { return {f_long, f_lat, torque}; }
    bool finite() const { return std::isfinite(f_long) && std::isfinite(f_lat) && std::isfinite(torque); }
};

/// Cross-sectional added mass per unit length [kg/m].
inline double added_mass_per_length(double depth, const HydroParams& p) {
    return p.added_mass_coeff * 0.25 * std::numbers::pi * depth * depth * p.fluid_density;
}

/// Reactive wrench split into the momentum (added-mass) part and the
/// boundary-pressure part (the C_p term).
struct ReactiveParts {
    PlanarWrench added_mass;
    PlanarWrench pressure;
    PlanarWrench total() const { return added_mass + pressure; }
};

/// `anterior_pressure = false` drops the Π₀ half of the pressure term (the nose).
inline ReactiveParts reactive_wrench_parts(const SegmentFrameState& s, const HydroParams& p,
                                           bool anterior_pressure = true) {
    if (!p.reactive()) return {};
    const double m = added_mass_per_length(s.depth, p);
    const double l = s.length;
    ReactiveParts r;
    r.added_mass.f_long = m * l * s.omega * s.v0 + 0.5 * m * l * l * s.omega * s.omega;
    r.added_mass.f_lat = -m * l * s.a0 - 0.5 * m * l * l * s.omega_dot;
    r.added_mass.torque = -(0.5 * m * l * l * (s.a0 - s.omega * s.u) + m * l * l * l * s.omega_dot / 3.0 +
                            m * l * s.u * s.vl);
    const double front = anterior_pressure ? s.v0 * s.v0 : 0.0;
    r.pressure.f_long = p.pressure_coeff * 0.5 * m * (front - s.vl * s.vl);
    return r;
}

inline PlanarWrench reactive_wrench(const SegmentFrameState& s, const HydroParams& p,
                                    bool anterior_pressure = true) {
    return reactive_wrench_parts(s, p, anterior_pressure).total();
}

/// Reactive wrench written as  W = bias - inertia · (u̇, a_0, ω̇).
///
/// `inertia` is the symmetric positive semi-definite added-inertia matrix the
/// dynamics adds to the body mass matrix; its u̇ row and column are zero.
struct AddedInertiaBlock {
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
    PlanarWrench bias;

    PlanarWrench wrench(double u_dot, double a0, double omega_dot) const {
        const Eigen::Vector3d w = bias.vec() - inertia * Eigen::Vector3d(u_dot, a0, omega_dot);
        return {w[0], w[1], w[2]};
    }
};

/// Accelerations stored in `s` are ignored.
inline AddedInertiaBlock reactive_added_inertia(const SegmentFrameState& s, const HydroParams& p,
                                                bool anterior_pressure = true) {
    AddedInertiaBlock b;
    if (!p.reactive()) return b;
    const double m = added_mass_per_length(s.depth, p);
    const double l = s.length;
    b.inertia(1, 1) = m * l;
    b.inertia(1, 2) = b.inertia(2, 1) = 0.5 * m * l * l;
    b.inertia(2, 2) = m * l * l * l / 3.0;
    SegmentFrameState at_rest = s;
    at_rest.a0 = 0.0;
    at_rest.omega_dot = 0.0;
    b.bias = reactive_wrench(at_rest, p, anterior_pressure);
    return b;
}

struct DragIntegrals {
    double i0 = 0.0;  ///< ∫₀ˡ |v| v dx        [m³/s²]
    double i1 = 0.0;  ///< ∫₀ˡ |v| v x dx      [m⁴/s²]
};

/// Closed form of the drag integrals for v(x) = v0 + ω x on [0, l].
inline DragIntegrals drag_integrals(double v0, double omega, double l) {
    if (!(l > 0.0)) throw std::invalid_argument("drag_integrals: length must be positive");
    const double vl = v0 + omega * l;
    DragIntegrals out;
    if (v0 * vl >= 0.0) {
        // No interior sign change; |v| v = ±v² with a single sign.
        const double sign = (v0 + vl) >= 0.0 ? 1.0 : -1.0;
        out.i0 = sign * l * (v0 * v0 + v0 * omega * l + omega * omega * l * l / 3.0);
        out.i1 = sign * l * l * (0.5 * v0 * v0 + 2.0 * v0 * omega * l / 3.0 + 0.25 * omega * omega * l * l);
        return out;
    }
    // Zero crossing at x* = -v0/ω inside (0, l); ω ≠ 0 here.
    const double s0 = v0 > 0.0 ? 1.0 : -1.0;
    const double s1 = -s0;
    const double w2 = omega * omega;
    out.i0 = s0 * (-v0 * v0 * v0 / (3.0 * omega)) + s1 * (vl * vl * vl / (3.0 * omega));
    const double v04 = v0 * v0 * v0 * v0;
    out.i1 = s0 * (v04 / 12.0) / w2 + s1 * (0.25 * vl * vl * vl * vl - v0 * vl * vl * vl / 3.0) / w2;
    return out;
}

/// Resistive wrench split into lateral drag and longitudinal friction.
struct ResistiveParts {
    PlanarWrench drag;
    PlanarWrench friction;
    PlanarWrench total() const { return drag + friction; }
};

inline ResistiveParts resistive_wrench_parts(const SegmentFrameState& s, const HydroParams& p) {
    ResistiveParts r;
    const double half_rho = 0.5 * p.fluid_density;
    r.friction.f_long = -half_rho * p.friction_coeff * s.perimeter * s.length * std::abs(s.u) * s.u;
    if (p.drag_coeff != 0.0) {
        const DragIntegrals d = drag_integrals(s.v0, s.omega, s.length);
        r.drag.f_lat = -half_rho * p.drag_coeff * s.depth * d.i0;
        r.drag.torque = -half_rho * p.drag_coeff * s.depth * d.i1;
    }
    return r;
}

inline PlanarWrench resistive_wrench(const SegmentFrameState& s, const HydroParams& p) {
    return resistive_wrench_parts(s, p).total();
}

/// Reference scales of the dimensionless force model.
struct FlowScales {
    double length = 0.0;          ///< l
    double depth = 0.0;           ///< h
    double frequency = 0.0;       ///< f
    double amplitude = 0.0;       ///< Ā, mean lateral displacement
    double speed = 0.0;           ///< U, cruising speed
    double fluid_density = 0.0;   ///< ρ_f

    double force_scale() const {
        return 0.25 * std::numbers::pi * fluid_density * length * length * depth * depth * frequency * frequency;
    }
    double torque_scale() const { return force_scale() * length; }
};

/// Kinematics normalized by (U, fĀ, f, f², f²Ā).
struct DimensionlessKinematics {
    double u = 0.0;
    double v0 = 0.0;
    double omega = 0.0;
    double a0 = 0.0;
    double omega_dot = 0.0;
};

inline SegmentFrameState dimensional_state(const DimensionlessKinematics& k, const FlowScales& sc,
                                           double perimeter) {
    const double f = sc.frequency;
    return SegmentFrameState::rigid(k.u * sc.speed, k.v0 * f * sc.amplitude, k.omega * f, sc.length, sc.depth,
                                    perimeter, k.a0 * f * f * sc.amplitude, k.omega_dot * f * f);
}

struct DimensionlessWrenchPair {
    PlanarWrench reactive;
    PlanarWrench resistive;
};

/// Reactive and resistive wrenches divided by (π/4) ρ_f l² h² f² (forces)
/// and (π/4) ρ_f l³ h² f² (torque).
inline DimensionlessWrenchPair nondimensional_wrench(const SegmentFrameState& s, const HydroParams& p,
                                                     const FlowScales& sc) {
    if (!(sc.length > 0.0) || !(sc.depth > 0.0) || !(sc.frequency > 0.0) || !(sc.fluid_density > 0.0)) {
        throw std::invalid_argument("nondimensional_wrench: scales must be positive");
    }
    auto normalize = [&](const PlanarWrench& w) {
        return PlanarWrench{w.f_long / sc.force_scale(), w.f_lat / sc.force_scale(), w.torque / sc.torque_scale()};
    };
    return {normalize(reactive_wrench(s, p)), normalize(resistive_wrench(s, p))};
}

}  // namespace ubot
