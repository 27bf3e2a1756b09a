#pragma once

/**
 * @file io.hpp
 * @brief Result files: CSV tables, learning curves, trajectory export and
 *        import, and the plain-text summary table.
 *
 * Every floating-point field is written with 17 significant digits so that
 * parsing a file back reproduces the in-memory doubles exactly.
 */

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ios>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ubot/dynamics.hpp"
#include "ubot/expsuite/case.hpp"
#include "ubot/rollout.hpp"

namespace ubot {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Writes `text` to `path` via a temporary file and rename.
inline void write_file_atomic(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw IoError("csv: no column '" + name + "'");
    }

    double number(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (first) {
            t.header = split_csv_line(line);
            first = false;
        } else {
            t.rows.push_back(split_csv_line(line));
        }
    }
    return t;
}

// ---------------------------------------------------------------- reports

inline std::string speeds_csv(const std::vector<CaseResult>& results) {
    std::ostringstream os;
    os << "case,noa,stiffness,hm,status,speed_m_per_s,body_lengths_per_s,total_length_m\n";
    for (const auto& r : results) {
        os << r.spec.id() << ',' << r.spec.noa << ',' << short_name(r.spec.stiffness) << ',' << to_string(r.spec.hm)
           << ',' << (r.ok ? "ok" : "failed") << ',' << fmt17(r.speed) << ',' << fmt17(r.body_lengths_per_s) << ','
           << fmt17(r.total_length) << '\n';
    }
    return os.str();
}

inline std::string wavelengths_csv(const std::vector<CaseResult>& results) {
    std::ostringstream os;
    os << "case,noa,stiffness,hm,wavelength_m,wave_per_segment,phase_slope_rad_per_m,flagged\n";
    for (const auto& r : results) {
        os << r.spec.id() << ',' << r.spec.noa << ',' << short_name(r.spec.stiffness) << ',' << to_string(r.spec.hm)
           << ',' << fmt17(r.wave.wavelength) << ',' << fmt17(r.wave.wave_per_segment) << ','
           << fmt17(r.wave.slope) << ',' << (r.wave.flagged ? 1 : 0) << '\n';
    }
    return os.str();
}

inline std::string segment_label(int j, int body_count) {
    if (j == 0) return "head";
    if (j == body_count - 1) return "fin";
    if (j == body_count - 2) return "peduncle";
    return "body" + std::to_string(j);
}

/// Window-averaged force along the swim direction [N], segments then a total
/// row, followed by the fin-joint torque summary [N·m].
inline std::string thrust_csv(const CaseResult& r) {
    std::ostringstream os;
    os << "# window-averaged force along the swim direction [N]\n";
    os << "segment";
    for (const char* m : kMechanismNames) os << ',' << m << "_N";
    os << ",total_N\n";
    const int n = static_cast<int>(r.thrust.segment.size());
    for (int j = 0; j < n; ++j) {
        os << segment_label(j, n);
        for (double v : r.thrust.segment[static_cast<std::size_t>(j)]) os << ',' << fmt17(v);
        os << ',' << fmt17(r.thrust.segment_total[static_cast<std::size_t>(j)]) << '\n';
    }
    os << "total";
    for (double v : r.thrust.total) os << ',' << fmt17(v);
    os << ',' << fmt17(r.thrust.grand_total()) << '\n';
    return os.str();
}

inline std::string tail_torque_csv(const CaseResult& r) {
    std::ostringstream os;
    os << "component,rms_Nm,mean_Nm,peak_Nm\n";
    auto row = [&](const std::string& name, const TorqueComponent& c) {
        os << name << ',' << fmt17(c.rms) << ',' << fmt17(c.mean) << ',' << fmt17(c.peak) << '\n';
    };
    row("spring", r.tail.spring);
    for (int m = 0; m < kMechanismCount; ++m) row(kMechanismNames[static_cast<std::size_t>(m)], r.tail.fluid[static_cast<std::size_t>(m)]);
    return os.str();
}

/// One JSON object per episode, sessions in order.
inline std::string learning_jsonl(const CaseResult& r) {
    std::ostringstream os;
    for (const auto& e : r.learning) os << episode_json(e).dump() << '\n';
    return os.str();
}

inline void print_summary(std::ostream& os, const std::vector<CaseResult>& results) {
    os << std::left << std::setw(12) << "case" << std::right << std::setw(8) << "status" << std::setw(12) << "cm/s"
       << std::setw(9) << "BL/s" << std::setw(10) << "lambda_cm" << std::setw(8) << "l/lam" << std::setw(9) << "f_Hz"
       << '\n';
    for (const auto& r : results) {
        const double f = r.best_policy.empty() ? 0.0 : r.best_policy.back();
        os << std::left << std::setw(12) << r.spec.id() << std::right << std::setw(8) << (r.ok ? "ok" : "FAILED")
           << std::fixed << std::setprecision(2) << std::setw(12) << 100.0 * r.speed << std::setw(9)
           << r.body_lengths_per_s << std::setw(10) << 100.0 * r.wave.wavelength << std::setw(8)
           << r.wave.wave_per_segment << std::setw(9) << f << (r.wave.flagged ? "  (wave flagged)" : "") << '\n';
        os.unsetf(std::ios::floatfield);
    }
}

/// Writes speeds.csv, wavelengths.csv and the per-case files into `dir`.
inline void emit_reports(const std::vector<CaseResult>& results, const fs::path& dir, std::ostream* summary = nullptr) {
    if (results.empty()) throw std::invalid_argument("emit_reports: no results");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
    write_file_atomic(dir / "speeds.csv", speeds_csv(results));
    write_file_atomic(dir / "wavelengths.csv", wavelengths_csv(results));
    for (const auto& r : results) {
        if (!r.ok) continue;
        write_file_atomic(dir / ("thrust_" + r.spec.id() + ".csv"), thrust_csv(r));
        write_file_atomic(dir / ("tail_torque_" + r.spec.id() + ".csv"), tail_torque_csv(r));
        write_file_atomic(dir / ("learning_" + r.spec.id() + ".jsonl"), learning_jsonl(r));
    }
    if (summary != nullptr) print_summary(*summary, results);
}

// ------------------------------------------------------------ trajectories

/// Generalized state columns: t, x_h, y_h, theta_h, phi_1..phi_{NoA+1}, then
/// their rates.
inline std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream os;
    const int joints = tr.noa + 1;
    os << "t,x_h,y_h,theta_h";
    for (int k = 1; k <= joints; ++k) os << ",phi_" << k;
    os << ",vx_h,vy_h,omega_h";
    for (int k = 1; k <= joints; ++k) os << ",phidot_" << k;
    os << '\n';
    for (const auto& s : tr.samples) {
        os << fmt17(s.t);
        for (Eigen::Index i = 0; i < s.q.size(); ++i) os << ',' << fmt17(s.q[i]);
        for (Eigen::Index i = 0; i < s.qd.size(); ++i) os << ',' << fmt17(s.qd[i]);
        os << '\n';
    }
    return os.str();
}

/// Per-sample mechanism split: world-frame force and torque per segment, then
/// joint torque components.
inline std::string forces_csv(const Trajectory& tr) {
    std::ostringstream os;
    if (tr.forces.empty()) return os.str();
    const std::size_t nseg = tr.forces.front().segments.size();
    const std::size_t nj = tr.forces.front().joints.size();
    os << 't';
    for (std::size_t j = 0; j < nseg; ++j) {
        for (const char* m : kMechanismNames) os << ",seg" << j << '_' << m << "_fx,seg" << j << '_' << m << "_fy,seg" << j << '_' << m << "_tz";
    }
    for (std::size_t k = 1; k <= nj; ++k) {
        os << ",joint" << k << "_actuation,joint" << k << "_spring";
        for (const char* m : kMechanismNames) os << ",joint" << k << '_' << m;
    }
    os << '\n';
    for (const auto& f : tr.forces) {
        os << fmt17(f.t);
        for (const auto& sf : f.segments) {
            for (int m = 0; m < kMechanismCount; ++m) {
                const auto mm = static_cast<std::size_t>(m);
                os << ',' << fmt17(sf.force[mm].x()) << ',' << fmt17(sf.force[mm].y()) << ',' << fmt17(sf.torque[mm]);
            }
        }
        for (const auto& jt : f.joints) {
            os << ',' << fmt17(jt.actuation) << ',' << fmt17(jt.spring);
            for (double v : jt.fluid) os << ',' << fmt17(v);
        }
        os << '\n';
    }
    return os.str();
}

/// Sidecar with everything needed to rebuild the model and rescore the run.
struct TrajectoryMeta {
    CaseSpec spec;
    GaitPolicy policy;
    bool aborted = false;
    std::string abort_reason;
    Vec2 com_window_start = Vec2::Zero();
    Vec2 com_end = Vec2::Zero();

    json to_json() const {
        return json{{"spec", spec.to_json()},
                    {"policy", encode(policy)},
                    {"aborted", aborted},
                    {"abort_reason", abort_reason},
                    {"com_window_start", {com_window_start.x(), com_window_start.y()}},
                    {"com_end", {com_end.x(), com_end.y()}}};
    }

    static TrajectoryMeta from_json(const json& j) {
        TrajectoryMeta m;
        m.spec = CaseSpec::from_json(j.at("spec"));
        m.policy = decode(j.at("policy").get<std::vector<double>>(), m.spec.noa);
        m.aborted = j.at("aborted").get<bool>();
        m.abort_reason = j.at("abort_reason").get<std::string>();
        const auto a = j.at("com_window_start").get<std::vector<double>>();
        const auto b = j.at("com_end").get<std::vector<double>>();
        m.com_window_start = Vec2(a.at(0), a.at(1));
        m.com_end = Vec2(b.at(0), b.at(1));
        return m;
    }
};

inline fs::path meta_path(const fs::path& traj_csv) { return fs::path(traj_csv.string() + ".meta.json"); }
inline fs::path forces_path(const fs::path& traj_csv) { return fs::path(traj_csv.string() + ".forces.csv"); }

inline void write_trajectory(const fs::path& path, const Trajectory& tr, const CaseSpec& spec) {
    write_file_atomic(path, trajectory_csv(tr));
    if (!tr.forces.empty()) write_file_atomic(forces_path(path), forces_csv(tr));
    TrajectoryMeta meta{spec, tr.policy, tr.aborted, tr.abort_reason, tr.com_window_start, tr.com_end};
    write_file_atomic(meta_path(path), meta.to_json().dump(2) + "\n");
}

/// Rebuilds a Trajectory from its CSV, optional force file and sidecar.
inline Trajectory read_trajectory(const fs::path& path, TrajectoryMeta* meta_out = nullptr) {
    const TrajectoryMeta meta = TrajectoryMeta::from_json(json::parse(read_file(meta_path(path))));
    const RobotModel model = meta.spec.model();
    const int dof = model.dof();
    Trajectory tr;
    tr.noa = meta.spec.noa;
    tr.segment_length = model.segment(1).geometry.length;
    tr.total_length = model.total_length();
    tr.hydro = meta.spec.hydro();
    tr.policy = meta.policy;
    tr.dt = meta.spec.dt;
    tr.horizon = meta.spec.horizon;
    tr.reward_window = meta.spec.reward_window;
    tr.seed = meta.spec.seed;
    tr.aborted = meta.aborted;
    tr.abort_reason = meta.abort_reason;
    tr.com_window_start = meta.com_window_start;
    tr.com_end = meta.com_end;

    const CsvTable table = parse_csv(read_file(path));
    if (table.header.size() != static_cast<std::size_t>(1 + 2 * dof)) {
        throw IoError("trajectory csv: expected " + std::to_string(1 + 2 * dof) + " columns");
    }
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) throw IoError("trajectory csv: ragged row");
        GeneralizedState s{Eigen::VectorXd(dof), Eigen::VectorXd(dof), std::stod(row[0])};
        for (int i = 0; i < dof; ++i) {
            s.q[i] = std::stod(row[static_cast<std::size_t>(1 + i)]);
            s.qd[i] = std::stod(row[static_cast<std::size_t>(1 + dof + i)]);
        }
        tr.samples.push_back(std::move(s));
    }

    const fs::path fpath = forces_path(path);
    if (fs::exists(fpath)) {
        const CsvTable ft = parse_csv(read_file(fpath));
        const std::size_t nseg = static_cast<std::size_t>(model.body_count());
        const std::size_t nj = static_cast<std::size_t>(model.joint_count());
        const std::size_t expect = 1 + nseg * 3 * kMechanismCount + nj * (2 + kMechanismCount);
        if (ft.header.size() != expect) throw IoError("forces csv: unexpected column count");
        for (const auto& row : ft.rows) {
            if (row.size() != expect) throw IoError("forces csv: ragged row");
            ForceSample f;
            std::size_t c = 0;
            f.t = std::stod(row[c++]);
            f.segments.resize(nseg);
            for (auto& sf : f.segments) {
                for (int m = 0; m < kMechanismCount; ++m) {
                    const auto mm = static_cast<std::size_t>(m);
                    const double fx = std::stod(row[c++]);
                    const double fy = std::stod(row[c++]);
                    sf.force[mm] = Vec2(fx, fy);
                    sf.torque[mm] = std::stod(row[c++]);
                }
            }
            f.joints.resize(nj);
            for (auto& jt : f.joints) {
                jt.actuation = std::stod(row[c++]);
                jt.spring = std::stod(row[c++]);
                for (auto& v : jt.fluid) v = std::stod(row[c++]);
            }
            tr.forces.push_back(std::move(f));
        }
    }
    if (meta_out != nullptr) *meta_out = meta;
    return tr;
}

}  // namespace ubot
