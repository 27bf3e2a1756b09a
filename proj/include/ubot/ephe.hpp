#pragma once

/**
 * @file ephe.hpp
 * @brief EM-based policy hyper-parameter exploration over a diagonal Gaussian.
 *
 * Each episode draws M vectors from N(η, σ²) (clipped to the box), scores
 * them, keeps the K best and moves the search distribution to their
 * reward-weighted mean and spread:
 *
 *   η' = Σ R γ / Σ R,   σ' = sqrt(Σ R (γ − η')² / Σ R)
 *
 * Random streams are keyed by (seed, episode, rollout), so results do not
 * depend on how many threads evaluate the rollouts.
 */

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <initializer_list>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ubot {

using PolicyVector = std::vector<double>;

/// Derives an independent 64-bit stream seed from a key path.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    for (auto k : key) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

struct EpheHyperParams {
    PolicyVector eta;    ///< mean
    PolicyVector sigma;  ///< per-dimension standard deviation
    PolicyVector lo;     ///< lower bounds
    PolicyVector hi;     ///< upper bounds

    std::size_t dim() const { return eta.size(); }

    /// Midpoint of the box with σ = (hi − lo)/4.
    static EpheHyperParams initial(const PolicyVector& lo, const PolicyVector& hi) {
        EpheHyperParams hp;
        hp.lo = lo;
        hp.hi = hi;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            hp.eta.push_back(0.5 * (lo[i] + hi[i]));
            hp.sigma.push_back(0.25 * (hi[i] - lo[i]));
        }
        hp.validate();
        return hp;
    }

    void validate() const {
        const std::size_t n = eta.size();
        if (n == 0 || sigma.size() != n || lo.size() != n || hi.size() != n) {
            throw std::invalid_argument("ephe: η, σ and bounds must have equal, nonzero length");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!(lo[i] < hi[i])) throw std::invalid_argument("ephe: lower bound must be below upper bound");
            if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i])) {
                throw std::invalid_argument("ephe: σ must be finite and non-negative");
            }
            if (!std::isfinite(eta[i])) throw std::invalid_argument("ephe: η must be finite");
        }
    }
};

/// Box for [e_1, Ψ_2, e_2, ..., Ψ_N, e_N, f]: amplitudes in [0, e_max], phases in
/// [0, 1] cycles and frequency in [f_min, f_max].
inline std::pair<PolicyVector, PolicyVector> gait_bounds(int noa, double e_max, double f_min = 0.5,
                                                         double f_max = 5.0) {
    if (noa < 1 || !(e_max > 0.0) || !(f_min > 0.0) || !(f_max > f_min)) {
        throw std::invalid_argument("gait_bounds: invalid arguments");
    }
    PolicyVector lo{0.0};
    PolicyVector hi{e_max};
    for (int j = 1; j < noa; ++j) {
        lo.push_back(0.0);
        hi.push_back(1.0);
        lo.push_back(0.0);
        hi.push_back(e_max);
    }
    lo.push_back(f_min);
    hi.push_back(f_max);
    return {lo, hi};
}

struct SampleBatch {
    std::vector<PolicyVector> samples;
    std::size_t clipped = 0;  ///< coordinates that hit a bound
};

/// Row i uses its own stream derived from (seed, i).
inline SampleBatch sample_policies(const EpheHyperParams& hp, int count, std::uint64_t seed) {
    hp.validate();
    if (count < 1) throw std::invalid_argument("sample_policies: count must be positive");
    SampleBatch batch;
    batch.samples.resize(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) {
        std::mt19937_64 rng(derive_seed({seed, static_cast<std::uint64_t>(r)}));
        auto& g = batch.samples[static_cast<std::size_t>(r)];
        g.resize(hp.dim());
        for (std::size_t i = 0; i < hp.dim(); ++i) {
            double x = hp.eta[i];
            if (hp.sigma[i] > 0.0) x = std::normal_distribution<double>(hp.eta[i], hp.sigma[i])(rng);
            const double c = std::clamp(x, hp.lo[i], hp.hi[i]);
            if (c != x) ++batch.clipped;
            g[i] = c;
        }
    }
    return batch;
}

/// Indices of the K largest rewards, best first; ties go to the lower index.
inline std::vector<std::size_t> elite_indices(std::span<const double> rewards, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > rewards.size()) {
        throw std::invalid_argument("elite_indices: need 1 <= K <= M");
    }
    std::vector<std::size_t> idx(rewards.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rewards[a] > rewards[b]; });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

struct UpdateOutcome {
    EpheHyperParams hp;
    bool applied = false;  ///< false when every elite reward was zero
};

inline UpdateOutcome update(const EpheHyperParams& hp, const std::vector<PolicyVector>& elite,
                            std::span<const double> rewards) {
    hp.validate();
    if (elite.empty() || elite.size() != rewards.size()) {
        throw std::invalid_argument("update: need K >= 1 elite vectors with one reward each");
    }
    double total = 0.0;
    for (double r : rewards) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("update: rewards must be finite and >= 0");
        total += r;
    }
    UpdateOutcome out{hp, false};
    if (!(total > 0.0)) return out;

    const std::size_t n = hp.dim();
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t k = 0; k < elite.size(); ++k) m += rewards[k] * elite[k].at(i);
        m /= total;
        double v = 0.0;
        for (std::size_t k = 0; k < elite.size(); ++k) {
            const double d = elite[k][i] - m;
            v += rewards[k] * d * d;
        }
        out.hp.eta[i] = m;
        out.hp.sigma[i] = std::sqrt(v / total);
    }
    out.applied = true;
    return out;
}

struct EpheConfig {
    int rollouts = 50;  ///< M
    int elites = 25;    ///< K
    int episodes = 40;
    int sessions = 3;
    std::uint64_t seed = 1;
    int jobs = 1;  ///< threads evaluating rollouts; never changes results

    void validate() const {
        if (rollouts < 1 || elites < 1 || elites > rollouts || episodes < 1 || sessions < 1 || jobs < 1) {
            throw std::invalid_argument("ephe config: need 1 <= K <= M, episodes >= 1, sessions >= 1, jobs >= 1");
        }
    }
};

struct EpisodeRecord {
    int session = 0;
    int episode = 0;
    std::uint64_t seed = 0;
    std::vector<PolicyVector> samples;
    std::vector<double> rewards;
    std::vector<std::size_t> elite;
    PolicyVector eta;    ///< after the update
    PolicyVector sigma;  ///< after the update
    bool update_applied = false;
    std::size_t clipped = 0;
    double wall_seconds = 0.0;

    double mean_reward() const {
        return rewards.empty() ? 0.0 : std::accumulate(rewards.begin(), rewards.end(), 0.0) / rewards.size();
    }
    double best_reward() const { return rewards.empty() ? 0.0 : *std::max_element(rewards.begin(), rewards.end()); }
};

struct SessionResult {
    int session = 0;
    std::uint64_t seed = 0;
    std::vector<EpisodeRecord> episodes;
    PolicyVector best_sample;
    double best_sample_reward = 0.0;
    PolicyVector final_eta;
    double final_eta_reward = 0.0;

    /// The better of the best sampled vector and the final mean.
    const PolicyVector& best() const { return final_eta_reward > best_sample_reward ? final_eta : best_sample; }
    double best_reward() const { return std::max(final_eta_reward, best_sample_reward); }
};

struct TrainResult {
    std::vector<SessionResult> sessions;
    PolicyVector best;
    double best_reward = 0.0;
    int best_session = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(jobs, n);
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Non-finite or negative objective values score zero.
inline double safe_reward(const Objective& objective, std::span<const double> gamma) {
    const double r = objective(gamma);
    return (std::isfinite(r) && r > 0.0) ? r : 0.0;
}

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

inline SessionResult train_session(const Objective& objective, const EpheHyperParams& start, const EpheConfig& cfg,
                                   int session, const EpisodeCallback& on_episode = {}) {
    cfg.validate();
    start.validate();
    SessionResult res;
    res.session = session;
    res.seed = derive_seed({cfg.seed, static_cast<std::uint64_t>(session)});
    EpheHyperParams hp = start;
    bool have_best = false;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        const auto t0 = std::chrono::steady_clock::now();
        EpisodeRecord rec;
        rec.session = session;
        rec.episode = ep;
        rec.seed = derive_seed({res.seed, static_cast<std::uint64_t>(ep)});
        SampleBatch batch = sample_policies(hp, cfg.rollouts, rec.seed);
        rec.clipped = batch.clipped;
        rec.samples = std::move(batch.samples);
        rec.rewards.assign(rec.samples.size(), 0.0);
        parallel_for(cfg.rollouts, cfg.jobs, [&](int i) {
            const auto k = static_cast<std::size_t>(i);
            rec.rewards[k] = safe_reward(objective, rec.samples[k]);
        });
        for (std::size_t i = 0; i < rec.rewards.size(); ++i) {
            if (!have_best || rec.rewards[i] > res.best_sample_reward) {
                res.best_sample_reward = rec.rewards[i];
                res.best_sample = rec.samples[i];
                have_best = true;
            }
        }
        rec.elite = elite_indices(rec.rewards, cfg.elites);
        std::vector<PolicyVector> elite;
        std::vector<double> elite_r;
        for (auto i : rec.elite) {
            elite.push_back(rec.samples[i]);
            elite_r.push_back(rec.rewards[i]);
        }
        const UpdateOutcome up = update(hp, elite, elite_r);
        hp = up.hp;
        rec.update_applied = up.applied;
        rec.eta = hp.eta;
        rec.sigma = hp.sigma;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (on_episode) on_episode(rec);
        res.episodes.push_back(std::move(rec));
    }
    res.final_eta = hp.eta;
    res.final_eta_reward = safe_reward(objective, hp.eta);
    return res;
}

/// Independent sessions from a common start; the overall best is the best
/// session's better candidate (lower session index on ties).
inline TrainResult train(const Objective& objective, const EpheHyperParams& start, const EpheConfig& cfg,
                         const EpisodeCallback& on_episode = {}) {
    cfg.validate();
    TrainResult out;
    for (int s = 0; s < cfg.sessions; ++s) {
        out.sessions.push_back(train_session(objective, start, cfg, s, on_episode));
        const auto& sr = out.sessions.back();
        if (s == 0 || sr.best_reward() > out.best_reward) {
            out.best_reward = sr.best_reward();
            out.best = sr.best();
            out.best_session = s;
        }
    }
    return out;
}

}  // namespace ubot
