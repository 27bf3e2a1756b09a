#pragma once

/**
 * @file dynamics.hpp
 * @brief Planar articulated-chain dynamics with acceleration-coupled added mass.
 *
 * Generalized coordinates q = (x_h, y_h, θ_h, φ_1 .. φ_{N+1}): the anterior
 * boundary point of the head, the head axis angle and the relative joint
 * angles. Segment axes point from head to tail, so with all angles zero the
 * robot lies along world +x with its head at the origin and swims towards -x.
 *
 * Each body j is described by its segment-frame velocity ν_j = (u, v_0, ω) =
 * G_j(q) q̇, taken at its anterior boundary point. The equations of motion are
 *
 *   Σ_j G_jᵀ (B_j + A_j) G_j q̈ = Q_joint + Σ_j G_jᵀ (W_j − (B_j + A_j) β_j − c_j)
 *
 * where B_j is the rigid-body inertia about the anterior point, A_j the
 * added-inertia block of the reactive model, β_j the velocity-product part of
 * the body-frame acceleration, c_j the centripetal term of the mass center,
 * and W_j every fluid wrench term that does not depend on accelerations.
 */

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ubot/actuation.hpp"
#include "ubot/hydrodynamics.hpp"
#include "ubot/morphology.hpp"

namespace ubot {

using Vec2 = Eigen::Vector2d;

/// Largest chain handled by the fixed-capacity solver (12 actuators).
inline constexpr int kMaxBodies = 14;
inline constexpr int kMaxDof = kMaxBodies + 2;
using DofVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDof, 1>;
using DofMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDof, kMaxDof>;
using BodyJacobian = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, kMaxDof>;

/// Raised when the chain cannot be integrated further (fold-over, NaN, singular system).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GeneralizedState {
    Eigen::VectorXd q;
    Eigen::VectorXd qd;
    double t = 0.0;

    /// Straight body along world +x, at rest.
    static GeneralizedState rest(const RobotModel& model) {
        return {Eigen::VectorXd::Zero(model.dof()), Eigen::VectorXd::Zero(model.dof()), 0.0};
    }
    bool finite() const { return q.allFinite() && qd.allFinite() && std::isfinite(t); }
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// World-frame pose and velocity of one body.
struct BodyFrame {
    Vec2 anterior;           ///< anterior boundary point
    Vec2 axis;               ///< unit vector towards the posterior end
    Vec2 normal;             ///< axis rotated by +90°
    double angle = 0.0;
    double omega = 0.0;
    Vec2 anterior_velocity;
    Vec2 anterior_accel_bias;  ///< acceleration of the anterior point with q̈ = 0
};

inline void body_frames(const RobotModel& model, const GeneralizedState& s, std::vector<BodyFrame>& frames) {
    const int n = model.body_count();
    frames.resize(static_cast<std::size_t>(n));
    Vec2 p(s.q[0], s.q[1]);
    Vec2 v(s.qd[0], s.qd[1]);
    Vec2 a = Vec2::Zero();
    double angle = s.q[2];
    double omega = s.qd[2];
    for (int j = 0; j < n; ++j) {
        if (j > 0) {
            angle += s.q[2 + j];
            omega += s.qd[2 + j];
        }
        auto& f = frames[static_cast<std::size_t>(j)];
        f.angle = angle;
        f.omega = omega;
        f.axis = Vec2(std::cos(angle), std::sin(angle));
        f.normal = Vec2(-f.axis.y(), f.axis.x());
        f.anterior = p;
        f.anterior_velocity = v;
        f.anterior_accel_bias = a;
        const double l = model.segment(j).geometry.length;
        p += l * f.axis;
        v += l * omega * f.normal;
        a -= l * omega * omega * f.axis;
    }
}

inline std::vector<BodyFrame> body_frames(const RobotModel& model, const GeneralizedState& s) {
    std::vector<BodyFrame> frames;
    body_frames(model, s, frames);
    return frames;
}

inline Vec2 body_com(const RobotModel& model, const BodyFrame& f, int j) {
    return f.anterior + model.segment(j).mass.com_offset * f.axis;
}

/// Segment-frame kinematics of every body; `a0` carries only its velocity-product part.
inline std::vector<SegmentFrameState> segment_kinematics(const RobotModel& model, const GeneralizedState& s) {
    const auto frames = body_frames(model, s);
    std::vector<SegmentFrameState> out;
    out.reserve(frames.size());
    for (int j = 0; j < model.body_count(); ++j) {
        const auto& f = frames[static_cast<std::size_t>(j)];
        const auto& g = model.segment(j).geometry;
        out.push_back(SegmentFrameState::rigid(f.anterior_velocity.dot(f.axis), f.anterior_velocity.dot(f.normal),
                                               f.omega, g.length, g.depth, g.perimeter,
                                               f.anterior_accel_bias.dot(f.normal), 0.0));
    }
    return out;
}

inline Vec2 center_of_mass(const RobotModel& model, const GeneralizedState& s) {
    const auto frames = body_frames(model, s);
    Vec2 c = Vec2::Zero();
    for (int j = 0; j < model.body_count(); ++j) {
        c += model.segment(j).mass.mass * body_com(model, frames[static_cast<std::size_t>(j)], j);
    }
    return c / model.total_mass();
}

inline Vec2 linear_momentum(const RobotModel& model, const GeneralizedState& s) {
    const auto frames = body_frames(model, s);
    Vec2 p = Vec2::Zero();
    for (int j = 0; j < model.body_count(); ++j) {
        const auto& f = frames[static_cast<std::size_t>(j)];
        const auto& mp = model.segment(j).mass;
        p += mp.mass * (f.anterior_velocity + mp.com_offset * f.omega * f.normal);
    }
    return p;
}

/// Angular momentum about a fixed world point.
inline double angular_momentum(const RobotModel& model, const GeneralizedState& s, const Vec2& about) {
    const auto frames = body_frames(model, s);
    double h = 0.0;
    for (int j = 0; j < model.body_count(); ++j) {
        const auto& f = frames[static_cast<std::size_t>(j)];
        const auto& mp = model.segment(j).mass;
        const Vec2 c = body_com(model, f, j);
        const Vec2 v = f.anterior_velocity + mp.com_offset * f.omega * f.normal;
        h += mp.mass * cross2(c - about, v) + mp.inertia_z * f.omega;
    }
    return h;
}

inline double kinetic_energy(const RobotModel& model, const GeneralizedState& s) {
    const auto frames = body_frames(model, s);
    double e = 0.0;
    for (int j = 0; j < model.body_count(); ++j) {
        const auto& f = frames[static_cast<std::size_t>(j)];
        const auto& mp = model.segment(j).mass;
        const Vec2 v = f.anterior_velocity + mp.com_offset * f.omega * f.normal;
        e += 0.5 * (mp.mass * v.squaredNorm() + mp.inertia_z * f.omega * f.omega);
    }
    return e;
}

inline double spring_energy(const RobotModel& model, const GeneralizedState& s) {
    double e = 0.0;
    for (int j = 1; j <= model.joint_count(); ++j) {
        e += 0.5 * model.joint(j).stiffness * s.q[2 + j] * s.q[2 + j];
    }
    return e;
}

enum class Mechanism { added_mass = 0, pressure = 1, drag = 2, friction = 3 };
inline constexpr int kMechanismCount = 4;
inline constexpr std::array<const char*, kMechanismCount> kMechanismNames{"added_mass", "pressure", "drag",
                                                                          "friction"};

/// Fluid load on one body, per mechanism, in the world frame. Torques are about
/// the body's anterior boundary point.
struct SegmentForces {
    std::array<Vec2, kMechanismCount> force{};
    std::array<double, kMechanismCount> torque{};

    SegmentForces() {
        force.fill(Vec2::Zero());
        torque.fill(0.0);
    }
    Vec2 total_force() const {
        Vec2 f = Vec2::Zero();
        for (const auto& c : force) f += c;
        return f;
    }
};

/// Generalized torque acting on one joint coordinate, per source.
struct JointTorques {
    double actuation = 0.0;
    double spring = 0.0;
    std::array<double, kMechanismCount> fluid{};

    double fluid_total() const { return fluid[0] + fluid[1] + fluid[2] + fluid[3]; }
};

/// Mechanism-split loads at one time step, evaluated at the solved accelerations.
struct ForceSample {
    double t = 0.0;
    std::vector<SegmentForces> segments;
    std::vector<JointTorques> joints;      ///< index 0 is joint 1
    Eigen::VectorXd generalized_fluid;     ///< Σ_j G_jᵀ W_j over all mechanisms
};

/// Forward dynamics of one robot in one fluid. Holds scratch buffers, so an
/// instance must not be shared between threads; the model is only read.
class ChainDynamics {
public:
    ChainDynamics(const RobotModel& model, const HydroParams& hydro) : model_(&model), hydro_(hydro) {
        hydro_.validate();
        const int n = model.body_count();
        const int dof = model.dof();
        if (n > kMaxBodies) {
            throw std::invalid_argument("chain dynamics supports at most " + std::to_string(kMaxBodies) + " bodies");
        }
        jac_.assign(static_cast<std::size_t>(n), BodyJacobian::Zero(3, dof));
        hg_.resize(3, dof);
        mass_.resize(dof, dof);
        rhs_.resize(dof);
        qdd_.resize(dof);
        body_inertia_.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const auto& mp = model.segment(j).mass;
            const double d = mp.com_offset;
            Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
            b(0, 0) = mp.mass;
            b(1, 1) = mp.mass;
            b(1, 2) = b(2, 1) = mp.mass * d;
            b(2, 2) = mp.mass * d * d + mp.inertia_z;
            body_inertia_[static_cast<std::size_t>(j)] = b;
        }
    }

    const RobotModel& model() const { return *model_; }
    const HydroParams& hydro() const { return hydro_; }

    /// Solves for q̈ given applied joint torques (index 0 = joint 1; springs are
    /// added internally). Fills `log` with the mechanism split when non-null.
    const DofVector& accelerations(const GeneralizedState& s, std::span<const double> joint_torques,
                                   ForceSample* log = nullptr) {
        const RobotModel& model = *model_;
        const int n = model.body_count();
        if (joint_torques.size() != static_cast<std::size_t>(model.joint_count())) {
            throw std::invalid_argument("forward dynamics: one applied torque per joint expected");
        }
        body_frames(model, s, frames_);
        mass_.setZero();
        rhs_.setZero();
        states_.resize(static_cast<std::size_t>(n));
        blocks_.resize(static_cast<std::size_t>(n));
        resist_.resize(static_cast<std::size_t>(n));
        accel_bias_.resize(static_cast<std::size_t>(n));

        for (int j = 0; j < n; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const BodyFrame& f = frames_[jj];
            const auto& geo = model.segment(j).geometry;
            const auto& mp = model.segment(j).mass;
            fill_jacobian(j);
            const int cols = 3 + j;
            const auto g = jac_[jj].leftCols(cols);

            SegmentFrameState st = SegmentFrameState::rigid(
                f.anterior_velocity.dot(f.axis), f.anterior_velocity.dot(f.normal), f.omega, geo.length, geo.depth,
                geo.perimeter, f.anterior_accel_bias.dot(f.normal), 0.0);
            states_[jj] = st;
            const Eigen::Vector3d beta(f.anterior_accel_bias.dot(f.axis), st.a0, 0.0);
            accel_bias_[jj] = beta;

            blocks_[jj] = reactive_added_inertia(st, hydro_, j > 0 || hydro_.nose_pressure);
            resist_[jj] = resistive_wrench_parts(st, hydro_);
            const Eigen::Matrix3d h = body_inertia_[jj] + blocks_[jj].inertia;
            const Eigen::Vector3d centripetal(-mp.mass * mp.com_offset * f.omega * f.omega, 0.0, 0.0);
            const Eigen::Vector3d load =
                resist_[jj].total().vec() + blocks_[jj].bias.vec() - h * beta - centripetal;

            // Plain loops beat Eigen's generic small-product kernels here.
            for (int c = 0; c < cols; ++c) {
                for (int r = 0; r < 3; ++r) {
                    hg_(r, c) = h(r, 0) * g(0, c) + h(r, 1) * g(1, c) + h(r, 2) * g(2, c);
                }
            }
            for (int c = 0; c < cols; ++c) {
                for (int r = c; r < cols; ++r) {
                    mass_(r, c) += g(0, r) * hg_(0, c) + g(1, r) * hg_(1, c) + g(2, r) * hg_(2, c);
                }
                rhs_[c] += g(0, c) * load[0] + g(1, c) * load[1] + g(2, c) * load[2];
            }
        }
        mass_.triangularView<Eigen::StrictlyUpper>() = mass_.transpose();
        for (int k = 1; k <= model.joint_count(); ++k) {
            rhs_[2 + k] += joint_torques[static_cast<std::size_t>(k - 1)] - model.joint(k).stiffness * s.q[2 + k];
        }

        solve_spd(s.t);
        if (!qdd_.allFinite()) {
            throw SimulationError("forward dynamics: non-finite accelerations at t=" + std::to_string(s.t));
        }
        if (log != nullptr) fill_log(s, joint_torques, *log);
        return qdd_;
    }

    /// Mass matrix including the added inertia, as assembled by the last call.
    const DofMatrix& last_mass_matrix() const { return mass_; }
    /// Right-hand side (all non-inertial generalized forces) of the last call.
    const DofVector& last_rhs() const { return rhs_; }

private:
    // In-place Cholesky of the (SPD) mass matrix into chol_, then q̈ = M⁻¹ rhs.
    void solve_spd(double t) {
        const int n = static_cast<int>(mass_.rows());
        chol_ = mass_;
        const double scale = mass_.diagonal().maxCoeff();
        for (int k = 0; k < n; ++k) {
            double d = chol_(k, k);
            for (int i = 0; i < k; ++i) d -= chol_(k, i) * chol_(k, i);
            if (!(d > 1e-14 * scale)) {
                throw SimulationError("forward dynamics: singular mass matrix at t=" + std::to_string(t));
            }
            const double lkk = std::sqrt(d);
            chol_(k, k) = lkk;
            for (int r = k + 1; r < n; ++r) {
                double v = chol_(r, k);
                for (int i = 0; i < k; ++i) v -= chol_(r, i) * chol_(k, i);
                chol_(r, k) = v / lkk;
            }
        }
        for (int r = 0; r < n; ++r) {
            double v = rhs_[r];
            for (int i = 0; i < r; ++i) v -= chol_(r, i) * qdd_[i];
            qdd_[r] = v / chol_(r, r);
        }
        for (int r = n - 1; r >= 0; --r) {
            double v = qdd_[r];
            for (int i = r + 1; i < n; ++i) v -= chol_(i, r) * qdd_[i];
            qdd_[r] = v / chol_(r, r);
        }
    }

    // G_j rows: (axis·∂p/∂q, normal·∂p/∂q, ∂θ/∂q) for the anterior point p of body j.
    void fill_jacobian(int j) {
        const RobotModel& model = *model_;
        auto& g = jac_[static_cast<std::size_t>(j)];
        g.setZero();
        const BodyFrame& f = frames_[static_cast<std::size_t>(j)];
        g(0, 0) = f.axis.x();
        g(0, 1) = f.axis.y();
        g(1, 0) = f.normal.x();
        g(1, 1) = f.normal.y();
        // Column 2 + i (i = 0 is the head angle) collects Σ_{k=i}^{j-1} l_k n_k.
        Vec2 suffix = Vec2::Zero();
        for (int i = j; i >= 0; --i) {
            if (i < j) {
                const BodyFrame& fk = frames_[static_cast<std::size_t>(i)];
                suffix += model.segment(i).geometry.length * fk.normal;
            }
            g(0, 2 + i) = f.axis.dot(suffix);
            g(1, 2 + i) = f.normal.dot(suffix);
            g(2, 2 + i) = 1.0;
        }
    }

    void fill_log(const GeneralizedState& s, std::span<const double> joint_torques, ForceSample& log) {
        const RobotModel& model = *model_;
        const int n = model.body_count();
        const int dof = model.dof();
        log.t = s.t;
        log.segments.assign(static_cast<std::size_t>(n), SegmentForces{});
        log.joints.assign(static_cast<std::size_t>(model.joint_count()), JointTorques{});
        log.generalized_fluid = Eigen::VectorXd::Zero(dof);
        std::array<Eigen::VectorXd, kMechanismCount> per_mech;
        per_mech.fill(Eigen::VectorXd::Zero(dof));

        for (int j = 0; j < n; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const int cols = 3 + j;
            const auto g = jac_[jj].leftCols(cols);
            const Eigen::Vector3d acc = g * qdd_.head(cols) + accel_bias_[jj];
            SegmentFrameState st = states_[jj];
            st.a0 = acc[1];
            st.omega_dot = acc[2];
            const ReactiveParts react = reactive_wrench_parts(st, hydro_, j > 0 || hydro_.nose_pressure);
            const std::array<PlanarWrench, kMechanismCount> w{react.added_mass, react.pressure, resist_[jj].drag,
                                                              resist_[jj].friction};
            const BodyFrame& f = frames_[jj];
            for (int m = 0; m < kMechanismCount; ++m) {
                const auto& wm = w[static_cast<std::size_t>(m)];
                log.segments[jj].force[static_cast<std::size_t>(m)] = wm.f_long * f.axis + wm.f_lat * f.normal;
                log.segments[jj].torque[static_cast<std::size_t>(m)] = wm.torque;
                per_mech[static_cast<std::size_t>(m)].head(cols).noalias() += g.transpose() * wm.vec();
            }
        }
        for (const auto& q : per_mech) log.generalized_fluid += q;
        for (int k = 1; k <= model.joint_count(); ++k) {
            auto& jt = log.joints[static_cast<std::size_t>(k - 1)];
            jt.actuation = joint_torques[static_cast<std::size_t>(k - 1)];
            jt.spring = -model.joint(k).stiffness * s.q[2 + k];
            for (int m = 0; m < kMechanismCount; ++m) {
                jt.fluid[static_cast<std::size_t>(m)] = per_mech[static_cast<std::size_t>(m)][2 + k];
            }
        }
    }

    const RobotModel* model_;
    HydroParams hydro_;
    std::vector<BodyJacobian> jac_;
    BodyJacobian hg_;
    std::vector<Eigen::Matrix3d> body_inertia_;
    std::vector<BodyFrame> frames_;
    std::vector<SegmentFrameState> states_;
    std::vector<AddedInertiaBlock> blocks_;
    std::vector<ResistiveParts> resist_;
    std::vector<Eigen::Vector3d> accel_bias_;
    DofMatrix mass_;
    DofVector rhs_;
    DofVector qdd_;
    DofMatrix chol_;
};

inline Eigen::VectorXd forward_dynamics(const RobotModel& model, const GeneralizedState& s,
                                        std::span<const double> joint_torques, const HydroParams& hydro,
                                        ForceSample* log = nullptr) {
    ChainDynamics dyn(model, hydro);
    return Eigen::VectorXd(dyn.accelerations(s, joint_torques, log));
}

/// Applied (actuator) torque on every joint; the passive fin joint gets zero.
inline void actuator_torques(const RobotModel& model, const GaitPolicy& policy, const GeneralizedState& s,
                             std::span<double> out) {
    for (int k = 1; k <= model.joint_count(); ++k) {
        double tau = 0.0;
        if (model.joint(k).actuated) {
            tau = actuator_torque(voltage_at(policy, k, s.t), s.qd[2 + k], model.actuator());
        }
        out[static_cast<std::size_t>(k - 1)] = tau;
    }
}

/// Classical fixed-step RK4 on (q, q̇) with voltages sampled at the stage times.
class Integrator {
public:
    Integrator(const RobotModel& model, const HydroParams& hydro, const GaitPolicy& policy)
        : dyn_(model, hydro), policy_(policy), torques_(static_cast<std::size_t>(model.joint_count()), 0.0) {
        if (policy_.actuator_count() != model.noa()) {
            throw std::invalid_argument("gait policy has " + std::to_string(policy_.actuator_count()) +
                                        " actuators, robot has " + std::to_string(model.noa()));
        }
    }

    /// Unpowered chain: joints carry only their springs.
    Integrator(const RobotModel& model, const HydroParams& hydro)
        : dyn_(model, hydro), torques_(static_cast<std::size_t>(model.joint_count()), 0.0), passive_(true) {}

    ChainDynamics& dynamics() { return dyn_; }

    /// q̈ at `s` under the policy, optionally logging the force split.
    const DofVector& evaluate(const GeneralizedState& s, ForceSample* log = nullptr) {
        if (!passive_) actuator_torques(dyn_.model(), policy_, s, torques_);
        return dyn_.accelerations(s, torques_, log);
    }

    /// Advances `s` in place. Throws SimulationError on fold-over or non-finite state.
    void step(GeneralizedState& s, double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
        const double t0 = s.t;
        q0_ = s.q;
        v0_ = s.qd;
        stage_.q = s.q;
        stage_.qd = s.qd;
        stage_.t = t0;

        // k_i = (velocity, acceleration) at stage i; accumulate the weighted sums.
        acc_sum_ = evaluate(stage_);
        vel_sum_ = v0_;

        stage_.q = q0_ + 0.5 * dt * v0_;
        stage_.qd = v0_ + 0.5 * dt * acc_sum_;
        stage_.t = t0 + 0.5 * dt;
        vel_k_ = stage_.qd;
        acc_k_ = evaluate(stage_);
        vel_sum_ += 2.0 * vel_k_;
        acc_sum_ += 2.0 * acc_k_;

        stage_.q = q0_ + 0.5 * dt * vel_k_;
        stage_.qd = v0_ + 0.5 * dt * acc_k_;
        vel_k_ = stage_.qd;
        acc_k_ = evaluate(stage_);
        vel_sum_ += 2.0 * vel_k_;
        acc_sum_ += 2.0 * acc_k_;

        stage_.q = q0_ + dt * vel_k_;
        stage_.qd = v0_ + dt * acc_k_;
        stage_.t = t0 + dt;
        vel_sum_ += stage_.qd;
        acc_sum_ += evaluate(stage_);

        s.q = q0_ + dt / 6.0 * vel_sum_;
        s.qd = v0_ + dt / 6.0 * acc_sum_;
        s.t = t0 + dt;
        check(s);
    }

    static void check(const GeneralizedState& s) {
        if (!s.finite()) throw SimulationError("non-finite state at t=" + std::to_string(s.t));
        for (Eigen::Index i = 3; i < s.q.size(); ++i) {
            if (std::abs(s.q[i]) >= std::numbers::pi) {
                throw SimulationError("joint " + std::to_string(i - 2) + " folded over at t=" + std::to_string(s.t));
            }
        }
    }

private:
    ChainDynamics dyn_;
    GaitPolicy policy_;
    std::vector<double> torques_;
    bool passive_ = false;
    GeneralizedState stage_;
    DofVector q0_, v0_, vel_k_, acc_k_, vel_sum_, acc_sum_;
};

inline GeneralizedState step_rk4(const RobotModel& model, const GeneralizedState& s, const GaitPolicy& policy,
                                 const HydroParams& hydro, double dt) {
    Integrator integ(model, hydro, policy);
    GeneralizedState next = s;
    integ.step(next, dt);
    return next;
}

}  // namespace ubot
