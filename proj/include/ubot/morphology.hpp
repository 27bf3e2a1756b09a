#pragma once

/**
 * @file morphology.hpp
 * @brief Builds the modular fish-robot template: head, N actuated segments
 *        (the last one is the peduncle) and a spring-mounted caudal fin.
 *
 * Joint j connects body j-1 to body j. Joints 1..N carry an actuator in
 * parallel with a torsion spring; joint N+1 (peduncle to fin) is passive.
 * Spring stiffness follows K_j = K̂ · AR^4 · Γ(j) with Γ = 1 on the body and
 * Γ = 5 on the fin joint.
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ubot/actuation.hpp"

namespace ubot {

enum class SegmentKind { head, body, peduncle, fin };
enum class StiffnessLevel { high, medium, low };

inline std::string to_string(StiffnessLevel s) {
    switch (s) {
        case StiffnessLevel::high: return "high";
        case StiffnessLevel::medium: return "medium";
        case StiffnessLevel::low: return "low";
    }
    return "?";
}

inline char short_name(StiffnessLevel s) {
    switch (s) {
        case StiffnessLevel::high: return 'H';
        case StiffnessLevel::medium: return 'M';
        case StiffnessLevel::low: return 'L';
    }
    return '?';
}

inline StiffnessLevel parse_stiffness(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "high" || s == "h") return StiffnessLevel::high;
    if (s == "medium" || s == "m") return StiffnessLevel::medium;
    if (s == "low" || s == "l") return StiffnessLevel::low;
    throw std::invalid_argument("unknown stiffness level '" + std::string(text) + "'");
}

/// Normalized stiffness K̂ in N·m/rad (1.00/16, 0.75/16, 0.50/16 N·mm/rad).
inline double normalized_stiffness(StiffnessLevel s) {
    constexpr double nmm = 1e-3;
    switch (s) {
        case StiffnessLevel::high: return 1.00 / 16.0 * nmm;
        case StiffnessLevel::medium: return 0.75 / 16.0 * nmm;
        case StiffnessLevel::low: return 0.50 / 16.0 * nmm;
    }
    throw std::invalid_argument("unknown stiffness level");
}

/// Ramanujan's second approximation for the perimeter of an ellipse with full
/// axes `a` and `b` (relative error below 1e-8 for the aspect ratios used here).
inline double ellipse_perimeter(double a, double b) {
    const double ra = 0.5 * a;
    const double rb = 0.5 * b;
    const double h = std::pow((ra - rb) / (ra + rb), 2);
    return std::numbers::pi * (ra + rb) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
}

struct SegmentGeometry {
    double length = 0.0;         ///< l [m]
    double depth = 0.0;          ///< h [m], vertical axis of the cross-section
    double width = 0.0;          ///< w [m], lateral axis of the cross-section
    double fin_thickness = 0.0;  ///< t_fin [m], caudal fin only
    double perimeter = 0.0;      ///< P [m]
    SegmentKind kind = SegmentKind::body;

    static SegmentGeometry elliptic(double length, double depth, double width, SegmentKind kind) {
        return SegmentGeometry{length, depth, width, 0.0, ellipse_perimeter(depth, width), kind};
    }

    /// Rigid plate. The thickness only enters the mass properties; the wetted
    /// perimeter used for friction is that of a zero-thickness plate (2h).
    static SegmentGeometry fin_plate(double length, double depth, double thickness) {
        return SegmentGeometry{length, depth, thickness, thickness, 2.0 * depth, SegmentKind::fin};
    }

    void validate() const {
        if (!(length > 0.0) || !(depth > 0.0) || !(width > 0.0)) {
            throw std::invalid_argument("segment dimensions must be positive");
        }
        if (kind == SegmentKind::fin && !(fin_thickness > 0.0)) {
            throw std::invalid_argument("caudal fin thickness must be positive");
        }
        if (kind == SegmentKind::fin && fin_thickness > width) {
            throw std::invalid_argument("caudal fin thickness exceeds its width");
        }
        // An ellipse perimeter lies between π(h + w)/2 and π·max(h, w).
        constexpr double slack = 1e-9;
        if (kind != SegmentKind::fin &&
            (perimeter < std::numbers::pi * 0.5 * (depth + width) * (1.0 - slack) ||
             perimeter > std::numbers::pi * std::max(depth, width) * (1.0 + slack))) {
            throw std::invalid_argument("segment perimeter inconsistent with its cross-section");
        }
        if (!(perimeter > 0.0)) throw std::invalid_argument("segment perimeter must be positive");
    }
};

struct MassProps {
    double mass = 0.0;        ///< [kg]
    double inertia_z = 0.0;   ///< planar inertia about the mass center [kg·m²]
    double com_offset = 0.0;  ///< distance of the mass center from the anterior joint [m]
};

/// Uniform-density elliptical prism, or a rectangular plate for the fin.
inline MassProps segment_mass_props(const SegmentGeometry& g, double density) {
    g.validate();
    if (!(density > 0.0)) throw std::invalid_argument("density must be positive");
    MassProps mp;
    const double l = g.length;
    if (g.kind == SegmentKind::fin) {
        mp.mass = density * g.depth * g.fin_thickness * l;
        mp.inertia_z = mp.mass * (l * l + g.fin_thickness * g.fin_thickness) / 12.0;
    } else {
        const double a = 0.5 * g.depth;
        const double b = 0.5 * g.width;
        mp.mass = density * std::numbers::pi * a * b * l;
        mp.inertia_z = mp.mass * (l * l / 12.0 + b * b / 4.0);
    }
    mp.com_offset = 0.5 * l;
    return mp;
}

/// K̂ · AR^4 · Γ(j); joint index is 1-based and j = noa + 1 is the fin joint.
inline double joint_stiffness(int j, double normalized, double aspect_ratio, int noa) {
    if (noa < 1 || j < 1 || j > noa + 1) {
        throw std::out_of_range("joint_stiffness: joint " + std::to_string(j) + " outside 1.." +
                                std::to_string(noa + 1));
    }
    const double distribution = (j == noa + 1) ? 5.0 : 1.0;
    return normalized * std::pow(aspect_ratio, 4) * distribution;
}

struct Segment {
    SegmentGeometry geometry;
    MassProps mass;
};

struct Joint {
    double stiffness = 0.0;  ///< linear torsion spring [N·m/rad], zero rest angle
    bool actuated = false;
};

/// Optional replacements for the nominal template values.
struct RobotOverrides {
    std::optional<double> segment_length;
    std::optional<double> segment_depth;
    std::optional<double> segment_width;
    std::optional<double> fin_length;
    std::optional<double> fin_thickness;
    std::optional<double> density;
    std::optional<double> normalized_stiffness;  ///< K̂ [N·m/rad]
    std::optional<ActuatorConstants> actuator;
};

/// Immutable once built; safe to share between concurrent rollouts.
class RobotModel {
public:
    RobotModel(std::vector<Segment> segments, std::vector<Joint> joints, ActuatorConstants actuator,
               int noa, double aspect_ratio)
        : segments_(std::move(segments)),
          joints_(std::move(joints)),
          actuator_(actuator),
          noa_(noa),
          aspect_ratio_(aspect_ratio) {
        if (noa_ < 1) throw std::invalid_argument("robot needs at least one actuator");
        if (segments_.size() != static_cast<std::size_t>(noa_ + 2) ||
            joints_.size() != static_cast<std::size_t>(noa_ + 1)) {
            throw std::invalid_argument("robot must have noa+2 bodies and noa+1 joints");
        }
        for (const auto& s : segments_) s.geometry.validate();
        actuator_.validate();
    }

    int noa() const { return noa_; }
    int body_count() const { return static_cast<int>(segments_.size()); }
    int joint_count() const { return static_cast<int>(joints_.size()); }
    /// Generalized coordinates: head x, y, heading, then one angle per joint.
    int dof() const { return body_count() + 2; }
    double aspect_ratio() const { return aspect_ratio_; }

    const std::vector<Segment>& segments() const { return segments_; }
    const Segment& segment(int i) const { return segments_.at(static_cast<std::size_t>(i)); }
    /// 1-based joint index, matching the actuator numbering.
    const Joint& joint(int j) const { return joints_.at(static_cast<std::size_t>(j - 1)); }
    const std::vector<Joint>& joints() const { return joints_; }
    const ActuatorConstants& actuator() const { return actuator_; }

    double total_length() const {
        double len = 0.0;
        for (const auto& s : segments_) len += s.geometry.length;
        return len;
    }

    double total_mass() const {
        double m = 0.0;
        for (const auto& s : segments_) m += s.mass.mass;
        return m;
    }

private:
    std::vector<Segment> segments_;
    std::vector<Joint> joints_;
    ActuatorConstants actuator_;
    int noa_;
    double aspect_ratio_;
};

namespace nominal {
inline constexpr double segment_length = 27.4e-3;
inline constexpr double segment_depth = 13.7e-3;
inline constexpr double segment_width = 7.0e-3;
inline constexpr double fin_thickness = 0.97e-3;
inline constexpr double density = 1000.0;
}  // namespace nominal

/// `stiffness` may be omitted only when `overrides.normalized_stiffness` is set.
inline RobotModel build_robot(int noa, std::optional<StiffnessLevel> stiffness,
                              const RobotOverrides& overrides = {}) {
    if (noa < 1) throw std::invalid_argument("build_robot: noa must be >= 1");
    const double l = overrides.segment_length.value_or(nominal::segment_length);
    const double h = overrides.segment_depth.value_or(nominal::segment_depth);
    const double w = overrides.segment_width.value_or(nominal::segment_width);
    const double fin_l = overrides.fin_length.value_or(l);
    const double fin_t = overrides.fin_thickness.value_or(nominal::fin_thickness);
    const double rho = overrides.density.value_or(nominal::density);
    if (!(l > 0.0) || !(h > 0.0) || !(w > 0.0) || !(fin_l > 0.0) || !(fin_t > 0.0)) {
        throw std::invalid_argument("build_robot: dimensions must be positive");
    }
    if (!(rho > 0.0)) throw std::invalid_argument("build_robot: density must be positive");

    double k_hat = 0.0;
    if (overrides.normalized_stiffness) {
        k_hat = *overrides.normalized_stiffness;
    } else if (stiffness) {
        k_hat = normalized_stiffness(*stiffness);
    } else {
        throw std::invalid_argument("build_robot: stiffness level or explicit K̂ required");
    }
    if (!(k_hat >= 0.0)) throw std::invalid_argument("build_robot: stiffness must be non-negative");

    const double ar = l / h;
    std::vector<Segment> segments;
    segments.reserve(static_cast<std::size_t>(noa + 2));
    auto add = [&](const SegmentGeometry& g) { segments.push_back({g, segment_mass_props(g, rho)}); };
    add(SegmentGeometry::elliptic(l, h, w, SegmentKind::head));
    for (int j = 1; j <= noa; ++j) {
        add(SegmentGeometry::elliptic(l, h, w, j == noa ? SegmentKind::peduncle : SegmentKind::body));
    }
    add(SegmentGeometry::fin_plate(fin_l, h, fin_t));

    std::vector<Joint> joints;
    joints.reserve(static_cast<std::size_t>(noa + 1));
    for (int j = 1; j <= noa + 1; ++j) {
        joints.push_back({joint_stiffness(j, k_hat, ar, noa), j <= noa});
    }
    return RobotModel(std::move(segments), std::move(joints),
                      overrides.actuator.value_or(ActuatorConstants{}), noa, ar);
}

}  // namespace ubot
