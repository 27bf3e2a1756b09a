#pragma once

/**
 * @file sweep.hpp
 * @brief Grid enumeration, INI configuration and the resumable sweep runner.
 *
 * Each finished case is written to `<results>/cases/<id>-<hash>.json` as soon
 * as it completes. A rerun loads any case whose file exists with a matching
 * hash and a successful status, and trains the rest. Loaded cases have their
 * best gait re-analyzed, so analysis fixes do not require retraining.
 */

#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ubot/expsuite/case.hpp"
#include "ubot/expsuite/io.hpp"

namespace ubot {

struct Grid {
    std::vector<int> noa{2, 4, 6};
    std::vector<StiffnessLevel> stiffness{StiffnessLevel::high, StiffnessLevel::medium, StiffnessLevel::low};
    std::vector<HydroModel> hm{HydroModel::hm1, HydroModel::hm2, HydroModel::hm3, HydroModel::hm4};

    /// Cases in NoA-major, then stiffness, then model order.
    std::vector<CaseSpec> enumerate(const CaseSpec& base) const {
        std::vector<CaseSpec> out;
        for (int n : noa) {
            for (auto s : stiffness) {
                for (auto m : hm) {
                    CaseSpec c = base;
                    c.noa = n;
                    c.stiffness = s;
                    c.hm = m;
                    out.push_back(c);
                }
            }
        }
        return out;
    }
};

namespace detail {

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(parse(item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw std::invalid_argument("empty list '" + text + "'");
    return out;
}

}  // namespace detail

/// Parses a grid selector: "full", or a subset such as
/// "noa=2,4;stiffness=H;hm=HM4" (omitted keys keep every value).
inline Grid parse_grid(const std::string& selector) {
    Grid g;
    if (selector.empty() || selector == "full") return g;
    std::stringstream ss(selector);
    std::string part;
    while (std::getline(ss, part, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("grid: expected key=value in '" + part + "'");
        const std::string key = part.substr(0, eq);
        const std::string value = part.substr(eq + 1);
        if (key == "noa") {
            g.noa = detail::parse_list<int>(value, [](const std::string& s) { return std::stoi(s); });
        } else if (key == "stiffness") {
            g.stiffness = detail::parse_list<StiffnessLevel>(value, parse_stiffness);
        } else if (key == "hm") {
            g.hm = detail::parse_list<HydroModel>(value, parse_hydro_model);
        } else {
            throw std::invalid_argument("grid: unknown key '" + key + "'");
        }
    }
    return g;
}

struct SweepConfig {
    CaseSpec base;
    Grid grid;
};

/// Reads `key = value` settings. Sections: [robot], [sim], [ephe], [grid].
inline SweepConfig load_config(const std::filesystem::path& path) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(path.string(), pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    SweepConfig cfg;
    CaseSpec& b = cfg.base;
    b.resistance = pt.get("robot.resistance", b.resistance);
    b.nose_pressure = pt.get("robot.nose_pressure", b.nose_pressure);
    b.e_max = pt.get("robot.e_max", b.e_max);
    b.fluid_density = pt.get("robot.fluid_density", b.fluid_density);
    b.friction_coeff = pt.get("robot.friction_coeff", b.friction_coeff);
    b.drag_coeff = pt.get("robot.drag_coeff", b.drag_coeff);
    b.f_min = pt.get("robot.f_min", b.f_min);
    b.f_max = pt.get("robot.f_max", b.f_max);
    b.dt = pt.get("sim.dt", b.dt);
    b.horizon = pt.get("sim.horizon", b.horizon);
    b.reward_window = pt.get("sim.reward_window", b.reward_window);
    b.output_rate = pt.get("sim.output_rate", b.output_rate);
    b.rollouts = pt.get("ephe.rollouts", b.rollouts);
    b.elites = pt.get("ephe.elites", b.elites);
    b.episodes = pt.get("ephe.episodes", b.episodes);
    b.sessions = pt.get("ephe.sessions", b.sessions);
    b.seed = pt.get("ephe.seed", b.seed);
    if (auto v = pt.get_optional<std::string>("grid.noa")) {
        cfg.grid.noa = detail::parse_list<int>(*v, [](const std::string& s) { return std::stoi(s); });
    }
    if (auto v = pt.get_optional<std::string>("grid.stiffness")) {
        cfg.grid.stiffness = detail::parse_list<StiffnessLevel>(*v, parse_stiffness);
    }
    if (auto v = pt.get_optional<std::string>("grid.hm")) {
        cfg.grid.hm = detail::parse_list<HydroModel>(*v, parse_hydro_model);
    }
    return cfg;
}

inline std::filesystem::path case_file(const std::filesystem::path& results, const CaseSpec& spec) {
    return results / "cases" / (spec.id() + "-" + spec.hash() + ".json");
}

/// Loads a stored successful result for `spec`, if any.
inline std::optional<CaseResult> load_case(const std::filesystem::path& results, const CaseSpec& spec) {
    const auto path = case_file(results, spec);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        CaseResult r = case_result_from_json(json::parse(read_file(path)));
        if (r.ok && r.hash == spec.hash()) return r;
    } catch (const std::exception&) {
        // A damaged file is treated as missing and recomputed.
    }
    return std::nullopt;
}

inline void store_case(const std::filesystem::path& results, const CaseResult& r) {
    write_file_atomic(case_file(results, r.spec), to_json(r).dump() + "\n");
}

struct SweepOptions {
    int jobs = 1;
    bool resume = true;
    std::function<void(const std::string&)> log;  ///< progress lines
};

/// Runs every case, persisting each as it finishes; failures are recorded and
/// the sweep continues.
inline std::vector<CaseResult> run_sweep(const std::vector<CaseSpec>& grid, const std::filesystem::path& results,
                                         const SweepOptions& opt = {}) {
    std::vector<CaseResult> out;
    out.reserve(grid.size());
    auto say = [&](const std::string& s) {
        if (opt.log) opt.log(s);
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const CaseSpec& spec = grid[i];
        const std::string tag = "[" + std::to_string(i + 1) + "/" + std::to_string(grid.size()) + "] " + spec.id();
        if (opt.resume) {
            if (auto done = load_case(results, spec)) {
                // Training is reused; the analysis of the stored best gait is redone.
                analyze_best(*done, spec.model(), spec.hydro());
                say(tag + " cached");
                out.push_back(std::move(*done));
                continue;
            }
        }
        say(tag + " training");
        EpisodeCallback cb;
        if (opt.log) {
            cb = [&](const EpisodeRecord& e) {
                std::ostringstream os;
                os << tag << " session " << e.session << " episode " << e.episode << " best " << e.best_reward()
                   << " mean " << e.mean_reward();
                say(os.str());
            };
        }
        CaseResult r = run_case(spec, opt.jobs, cb);
        store_case(results, r);
        say(tag + (r.ok ? " done: " + fmt17(r.speed) + " m/s" : " FAILED: " + r.error));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ubot
