#pragma once

/**
 * @file case.hpp
 * @brief One cell of the parameter grid: its specification, the optimized
 *        result and everything needed to persist and reload both.
 *
 * A case is identified by a content hash of its canonical JSON form, so a
 * sweep can tell a finished case from one whose settings changed.
 */

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ubot/actuation.hpp"
#include "ubot/ephe.hpp"
#include "ubot/expsuite/analysis.hpp"
#include "ubot/hydrodynamics.hpp"
#include "ubot/morphology.hpp"
#include "ubot/rollout.hpp"

namespace ubot {

using nlohmann::json;

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Calibrated coil resistance used by the experiment grid [Ω].
inline constexpr double kDefaultResistance = 50.0;

struct CaseSpec {
    int noa = 4;
    StiffnessLevel stiffness = StiffnessLevel::high;
    HydroModel hm = HydroModel::hm4;
    double friction_coeff = 0.06;
    double drag_coeff = 2.25;
    double fluid_density = 1000.0;
    double resistance = kDefaultResistance;
    bool nose_pressure = false;
    double e_max = 5.0;
    double f_min = 0.5;
    double f_max = 5.0;
    double dt = 1e-3;
    double horizon = 6.0;
    double reward_window = 2.0;
    double output_rate = 100.0;
    int rollouts = 50;
    int elites = 25;
    int episodes = 40;
    int sessions = 3;
    std::uint64_t seed = 1;

    /// Short label such as "N4-H-HM4".
    std::string id() const {
        return "N" + std::to_string(noa) + "-" + std::string(1, short_name(stiffness)) + "-" + to_string(hm);
    }

    /// Optional keys are written only when set, so older result files keep their hash.
    json to_json() const {
        json j{{"noa", noa},
               {"stiffness", to_string(stiffness)},
               {"hm", to_string(hm)},
               {"friction_coeff", friction_coeff},
               {"drag_coeff", drag_coeff},
               {"fluid_density", fluid_density},
               {"resistance", resistance},
               {"e_max", e_max},
               {"f_min", f_min},
               {"f_max", f_max},
               {"dt", dt},
               {"horizon", horizon},
               {"reward_window", reward_window},
               {"output_rate", output_rate},
               {"rollouts", rollouts},
               {"elites", elites},
               {"episodes", episodes},
               {"sessions", sessions},
               {"seed", seed}};
        if (nose_pressure) j["nose_pressure"] = true;
        return j;
    }

    static CaseSpec from_json(const json& j) {
        CaseSpec c;
        c.noa = j.at("noa").get<int>();
        c.stiffness = parse_stiffness(j.at("stiffness").get<std::string>());
        c.hm = parse_hydro_model(j.at("hm").get<std::string>());
        c.friction_coeff = j.at("friction_coeff").get<double>();
        c.drag_coeff = j.at("drag_coeff").get<double>();
        c.fluid_density = j.at("fluid_density").get<double>();
        c.resistance = j.at("resistance").get<double>();
        c.e_max = j.at("e_max").get<double>();
        c.f_min = j.at("f_min").get<double>();
        c.f_max = j.at("f_max").get<double>();
        c.dt = j.at("dt").get<double>();
        c.horizon = j.at("horizon").get<double>();
        c.reward_window = j.at("reward_window").get<double>();
        c.output_rate = j.at("output_rate").get<double>();
        c.rollouts = j.at("rollouts").get<int>();
        c.elites = j.at("elites").get<int>();
        c.episodes = j.at("episodes").get<int>();
        c.sessions = j.at("sessions").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.nose_pressure = j.value("nose_pressure", false);
        return c;
    }

    /// Content hash of the canonical (key-sorted) JSON form.
    std::string hash() const { return hex64(fnv1a64(to_json().dump())); }

    RobotModel model() const {
        RobotOverrides ov;
        ActuatorConstants ac;
        ac.resistance = resistance;
        ov.actuator = ac;
        ov.density = fluid_density;
        return build_robot(noa, stiffness, ov);
    }

    HydroParams hydro() const {
        HydroParams p = HydroParams::preset(hm, friction_coeff, drag_coeff, fluid_density);
        p.nose_pressure = nose_pressure;
        return p;
    }

    SimOptions sim(bool record_forces = false) const {
        SimOptions o;
        o.dt = dt;
        o.horizon = horizon;
        o.reward_window = reward_window;
        o.output_rate = output_rate;
        o.record_forces = record_forces;
        o.seed = seed;
        return o;
    }

    EpheConfig ephe(int jobs = 1) const {
        EpheConfig c;
        c.rollouts = rollouts;
        c.elites = elites;
        c.episodes = episodes;
        c.sessions = sessions;
        c.seed = seed;
        c.jobs = jobs;
        return c;
    }

    void validate() const {
        if (noa < 1) throw std::invalid_argument("case: noa must be >= 1");
        if (!(e_max > 0.0) || !(resistance > 0.0)) throw std::invalid_argument("case: e_max and resistance must be positive");
        (void)gait_bounds(noa, e_max, f_min, f_max);
        sim().validate();
        ephe().validate();
        hydro().validate();
    }
};

struct SessionSummary {
    int session = 0;
    std::uint64_t seed = 0;
    double best_sample_reward = 0.0;
    double final_eta_reward = 0.0;
    PolicyVector best_sample;
    PolicyVector final_eta;

    double best_reward() const { return std::max(best_sample_reward, final_eta_reward); }
};

struct CaseResult {
    CaseSpec spec;
    std::string hash;
    bool ok = false;
    std::string error;

    PolicyVector best_policy;
    int best_session = 0;
    double speed = 0.0;  ///< m/s
    double body_lengths_per_s = 0.0;
    double total_length = 0.0;
    double segment_length = 0.0;

    WavelengthResult wave;
    GaitMetrics gait;
    ThrustDecomposition thrust;
    TailTorqueDecomposition tail;
    std::vector<SessionSummary> sessions;
    std::vector<EpisodeRecord> learning;
    double wall_seconds = 0.0;
};

namespace detail {

inline json component_json(const TorqueComponent& c) { return json{{"rms", c.rms}, {"mean", c.mean}, {"peak", c.peak}}; }

inline TorqueComponent component_from(const json& j) {
    return {j.at("rms").get<double>(), j.at("mean").get<double>(), j.at("peak").get<double>()};
}

}  // namespace detail

inline json episode_json(const EpisodeRecord& e) {
    return json{{"session", e.session},
                {"episode", e.episode},
                {"seed", e.seed},
                {"mean_reward", e.mean_reward()},
                {"best_reward", e.best_reward()},
                {"eta", e.eta},
                {"sigma", e.sigma},
                {"update_applied", e.update_applied},
                {"clipped", e.clipped},
                {"elite", e.elite},
                {"rewards", e.rewards},
                {"samples", e.samples},
                {"wall_seconds", e.wall_seconds}};
}

inline EpisodeRecord episode_from_json(const json& j) {
    EpisodeRecord e;
    e.session = j.at("session").get<int>();
    e.episode = j.at("episode").get<int>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.eta = j.at("eta").get<PolicyVector>();
    e.sigma = j.at("sigma").get<PolicyVector>();
    e.update_applied = j.at("update_applied").get<bool>();
    e.clipped = j.at("clipped").get<std::size_t>();
    e.elite = j.at("elite").get<std::vector<std::size_t>>();
    e.rewards = j.at("rewards").get<std::vector<double>>();
    e.samples = j.at("samples").get<std::vector<PolicyVector>>();
    e.wall_seconds = j.at("wall_seconds").get<double>();
    return e;
}

inline json to_json(const CaseResult& r) {
    json j;
    j["spec"] = r.spec.to_json();
    j["hash"] = r.hash;
    j["id"] = r.spec.id();
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["best_policy"] = r.best_policy;
    j["best_session"] = r.best_session;
    j["speed"] = r.speed;
    j["body_lengths_per_s"] = r.body_lengths_per_s;
    j["total_length"] = r.total_length;
    j["segment_length"] = r.segment_length;
    j["wave"] = {{"wavelength", r.wave.wavelength},
                 {"wave_per_segment", r.wave.wave_per_segment},
                 {"slope", r.wave.slope},
                 {"phase", r.wave.phase},
                 {"amplitude", r.wave.amplitude},
                 {"flagged", r.wave.flagged},
                 {"reason", r.wave.reason}};
    j["gait"] = {{"speed", r.gait.speed},
                 {"amplitude", r.gait.amplitude},
                 {"mean_amplitude", r.gait.mean_amplitude},
                 {"strouhal_like", r.gait.strouhal_like},
                 {"amplitude_ratio", r.gait.amplitude_ratio},
                 {"body_lengths_per_s", r.gait.body_lengths_per_s}};
    json seg = json::array();
    for (const auto& row : r.thrust.segment) seg.push_back(row);
    j["thrust"] = {{"direction", {r.thrust.direction.x(), r.thrust.direction.y()}},
                   {"segment", seg},
                   {"total", r.thrust.total},
                   {"segment_total", r.thrust.segment_total},
                   {"flagged", r.thrust.flagged},
                   {"reason", r.thrust.reason}};
    json fluid = json::array();
    for (const auto& c : r.tail.fluid) fluid.push_back(detail::component_json(c));
    j["tail"] = {{"spring", detail::component_json(r.tail.spring)},
                 {"fluid", fluid},
                 {"flagged", r.tail.flagged},
                 {"reason", r.tail.reason}};
    json sessions = json::array();
    for (const auto& s : r.sessions) {
        sessions.push_back({{"session", s.session},
                            {"seed", s.seed},
                            {"best_sample_reward", s.best_sample_reward},
                            {"final_eta_reward", s.final_eta_reward},
                            {"best_sample", s.best_sample},
                            {"final_eta", s.final_eta}});
    }
    j["sessions"] = sessions;
    json learning = json::array();
    for (const auto& e : r.learning) learning.push_back(episode_json(e));
    j["learning"] = learning;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

inline CaseResult case_result_from_json(const json& j) {
    CaseResult r;
    r.spec = CaseSpec::from_json(j.at("spec"));
    r.hash = j.at("hash").get<std::string>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.best_policy = j.at("best_policy").get<PolicyVector>();
    r.best_session = j.at("best_session").get<int>();
    r.speed = j.at("speed").get<double>();
    r.body_lengths_per_s = j.at("body_lengths_per_s").get<double>();
    r.total_length = j.at("total_length").get<double>();
    r.segment_length = j.at("segment_length").get<double>();
    const auto& w = j.at("wave");
    r.wave.wavelength = w.at("wavelength").get<double>();
    r.wave.wave_per_segment = w.at("wave_per_segment").get<double>();
    r.wave.slope = w.at("slope").get<double>();
    r.wave.phase = w.at("phase").get<std::vector<double>>();
    r.wave.amplitude = w.at("amplitude").get<std::vector<double>>();
    r.wave.flagged = w.at("flagged").get<bool>();
    r.wave.reason = w.at("reason").get<std::string>();
    const auto& g = j.at("gait");
    r.gait.speed = g.at("speed").get<double>();
    r.gait.amplitude = g.at("amplitude").get<std::vector<double>>();
    r.gait.mean_amplitude = g.at("mean_amplitude").get<double>();
    r.gait.strouhal_like = g.at("strouhal_like").get<double>();
    r.gait.amplitude_ratio = g.at("amplitude_ratio").get<std::vector<double>>();
    r.gait.body_lengths_per_s = g.at("body_lengths_per_s").get<double>();
    const auto& t = j.at("thrust");
    const auto dir = t.at("direction").get<std::vector<double>>();
    r.thrust.direction = Vec2(dir.at(0), dir.at(1));
    for (const auto& row : t.at("segment")) r.thrust.segment.push_back(row.get<std::array<double, kMechanismCount>>());
    r.thrust.total = t.at("total").get<std::array<double, kMechanismCount>>();
    r.thrust.segment_total = t.at("segment_total").get<std::vector<double>>();
    r.thrust.flagged = t.at("flagged").get<bool>();
    r.thrust.reason = t.at("reason").get<std::string>();
    const auto& tl = j.at("tail");
    r.tail.spring = detail::component_from(tl.at("spring"));
    for (std::size_t m = 0; m < r.tail.fluid.size(); ++m) r.tail.fluid[m] = detail::component_from(tl.at("fluid").at(m));
    r.tail.flagged = tl.at("flagged").get<bool>();
    r.tail.reason = tl.at("reason").get<std::string>();
    for (const auto& s : j.at("sessions")) {
        SessionSummary ss;
        ss.session = s.at("session").get<int>();
        ss.seed = s.at("seed").get<std::uint64_t>();
        ss.best_sample_reward = s.at("best_sample_reward").get<double>();
        ss.final_eta_reward = s.at("final_eta_reward").get<double>();
        ss.best_sample = s.at("best_sample").get<PolicyVector>();
        ss.final_eta = s.at("final_eta").get<PolicyVector>();
        r.sessions.push_back(std::move(ss));
    }
    for (const auto& e : j.at("learning")) r.learning.push_back(episode_from_json(e));
    r.wall_seconds = j.at("wall_seconds").get<double>();
    return r;
}

/// Re-simulates `policy` with the force log on and fills the analysis fields.
inline void analyze_best(CaseResult& r, const RobotModel& model, const HydroParams& hydro) {
    const GaitPolicy policy = decode(r.best_policy, r.spec.noa);
    const Trajectory tr = simulate(model, hydro, policy, r.spec.sim(true));
    r.speed = reward(tr);
    r.total_length = model.total_length();
    r.segment_length = model.segment(1).geometry.length;
    r.body_lengths_per_s = r.speed / r.total_length;
    r.gait = gait_metrics(tr, model);
    r.wave = wavelength(tr, model, policy.frequency);
    r.thrust = thrust_decomposition(tr);
    r.tail = tail_torque_decomposition(tr);
}

/// Trains one case (all sessions) and analyzes its best gait. Failures are
/// captured in the result rather than thrown.
inline CaseResult run_case(const CaseSpec& spec, int jobs = 1, const EpisodeCallback& on_episode = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    CaseResult r;
    r.spec = spec;
    r.hash = spec.hash();
    try {
        spec.validate();
        const RobotModel model = spec.model();
        const HydroParams hydro = spec.hydro();
        const SimOptions sim = spec.sim(false);
        const int noa = spec.noa;
        const Objective objective = [&](std::span<const double> g) {
            return reward(simulate(model, hydro, decode(g, noa), sim));
        };
        const auto [lo, hi] = gait_bounds(noa, spec.e_max, spec.f_min, spec.f_max);
        const TrainResult tr = train(objective, EpheHyperParams::initial(lo, hi), spec.ephe(jobs), on_episode);
        for (const auto& s : tr.sessions) {
            r.sessions.push_back(
                {s.session, s.seed, s.best_sample_reward, s.final_eta_reward, s.best_sample, s.final_eta});
            for (const auto& e : s.episodes) r.learning.push_back(e);
        }
        r.best_policy = tr.best;
        r.best_session = tr.best_session;
        analyze_best(r, model, hydro);
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace ubot
