#include "ped/pruning.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "ped/error.hpp"

namespace ped {

std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::ClusterHead: return "cluster-head";
    case Strategy::TopK: return "top-k";
    case Strategy::Random: return "random";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string &s) {
    if (s == "cluster-head")
        return Strategy::ClusterHead;
    if (s == "top-k")
        return Strategy::TopK;
    if (s == "random")
        return Strategy::Random;
    throw Error(ErrorCode::InvalidArgument,
                "strategy must be cluster-head, top-k or random, got \"" + s + "\"");
}

Selection select_units(const energy::DependenceProfile &profile, int k, Strategy strategy, std::uint64_t seed,
                       cluster1d::HeadMode head_mode) {
    const std::size_t n = profile.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " for a profile of " + std::to_string(n) + " units");
    if (profile.indices.size() != n)
        throw Error(ErrorCode::InvalidArgument, "profile indices do not match its values");

    Selection sel;
    sel.strategy = strategy;
    sel.k = k;
    sel.seed = seed;
    sel.head_mode = head_mode;

    switch (strategy) {
    case Strategy::ClusterHead: {
        sel.clustering = cluster1d::ckmeans(profile.values, k);
        sel.heads = cluster1d::cluster_heads(*sel.clustering, profile.values, head_mode);
        sel.kept = sel.heads;
        break;
    }
    case Strategy::TopK: {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return profile.values[a] > profile.values[b]; });
        sel.kept.assign(order.begin(), order.begin() + k);
        break;
    }
    case Strategy::Random: {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        sel.kept.assign(order.begin(), order.begin() + k);
        break;
    }
    }
    std::sort(sel.kept.begin(), sel.kept.end());

    const int units = std::max(profile.unit_count,
                               profile.indices.empty() ? 0 : *std::max_element(profile.indices.begin(),
                                                                               profile.indices.end()) + 1);
    sel.policy.alphas.assign(static_cast<std::size_t>(units), 0);
    sel.policy.stage = profile.stage + 1;
    for (std::size_t pos : sel.kept)
        sel.policy.alphas[static_cast<std::size_t>(profile.indices[pos])] = 1;
    return sel;
}

int next_k(int active_count) {
    if (active_count < 2)
        throw Error(ErrorCode::CannotPruneBelowOne,
                    std::to_string(active_count) + " active unit(s) cannot be reduced further");
    return active_count - 1;
}

int StageSchedule::k_for(int stage, int active_count) const {
    if (k_sequence.empty())
        return next_k(active_count);
    if (stage < 0 || static_cast<std::size_t>(stage) >= k_sequence.size())
        throw Error(ErrorCode::ScheduleExhausted, "no cluster count for stage " + std::to_string(stage) + " (" +
                                                      std::to_string(k_sequence.size()) + " given)");
    const int k = k_sequence[static_cast<std::size_t>(stage)];
    if (k < 1 || k >= active_count)
        throw Error(ErrorCode::BadK, "stage " + std::to_string(stage) + ": k = " + std::to_string(k) +
                                         " must satisfy 1 <= k < " + std::to_string(active_count));
    return k;
}

std::uint64_t stage_seed(std::uint64_t seed, int stage) {
    // splitmix64 finaliser over (seed, stage)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(stage) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

// Adapter failures carry the stage index; numerical failures keep their code.
template <typename Fn> auto guarded(int stage, Fn &&fn) -> decltype(fn()) {
    const std::string where = "stage " + std::to_string(stage) + ": ";
    try {
        return fn();
    } catch (const Error &e) {
        throw Error(is_numerical(e.code()) ? e.code() : ErrorCode::AdapterFailure, where + e.what());
    } catch (const std::exception &e) {
        throw Error(ErrorCode::AdapterFailure, where + e.what());
    }
}

} // namespace

std::vector<StageReport> run_ped(ModelAdapter &adapter, const StageSchedule &schedule, Strategy strategy,
                                 std::uint64_t seed, const PedOptions &options) {
    if (schedule.n_stages < 0)
        throw Error(ErrorCode::InvalidArgument, "negative stage count");
    std::vector<StageReport> reports;
    for (int t = 0; t < schedule.n_stages; ++t) {
        const auto started = std::chrono::steady_clock::now();
        StageReport report;
        report.stage = t;
        const PruningPolicy current = adapter.policy();
        report.active_before = current.active_set();
        const int k = schedule.k_for(t, static_cast<int>(report.active_before.size()));
        const std::uint64_t s = stage_seed(seed, t);

        ModelAdapter::Observation obs = guarded(t, [&] { return adapter.observe(); });
        if (obs.units.size() != report.active_before.size())
            throw Error(ErrorCode::AdapterFailure, "stage " + std::to_string(t) + ": adapter returned " +
                                                       std::to_string(obs.units.size()) + " feature maps for " +
                                                       std::to_string(report.active_before.size()) +
                                                       " active units");
        report.profile = energy::dependence_profile(obs.units, obs.labels, options.variant, options.subsample_cap,
                                                    s, report.active_before, adapter.unit_count());
        report.profile.stage = current.stage;
        report.selection = select_units(report.profile, k, strategy, s, options.head_mode);
        report.metrics = guarded(t, [&] { return adapter.apply_and_retrain(report.selection.policy, t); });
        report.param_count = adapter.param_count();
        report.flop_count = adapter.flop_count();
        report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace ped
