#ifndef PED_PRUNING_HPP
#define PED_PRUNING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ped/cluster1d.hpp"
#include "ped/energy.hpp"
#include "ped/types.hpp"

namespace ped {

/// Per-unit keep flags over the original unit indexing.
struct PruningPolicy {
    std::vector<std::uint8_t> alphas;
    /// Number of selection stages that produced this policy; 0 for the unpruned model.
    int stage = 0;

    static PruningPolicy all_active(int units) {
        return {std::vector<std::uint8_t>(static_cast<std::size_t>(units), 1), 0};
    }

    int unit_count() const { return static_cast<int>(alphas.size()); }
    bool active(int unit) const { return alphas[static_cast<std::size_t>(unit)] != 0; }
    std::vector<int> active_set() const {
        std::vector<int> out;
        for (std::size_t l = 0; l < alphas.size(); ++l)
            if (alphas[l])
                out.push_back(static_cast<int>(l));
        return out;
    }
    int active_count() const { return static_cast<int>(active_set().size()); }

    bool operator==(const PruningPolicy &) const = default;
};

enum class Strategy { ClusterHead, TopK, Random };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string &s);

struct Selection {
    PruningPolicy policy;
    Strategy strategy = Strategy::ClusterHead;
    int k = 0;
    std::uint64_t seed = 0;
    /// Positions into the profile that were kept, ascending.
    std::vector<std::size_t> kept;
    /// ClusterHead only.
    std::optional<cluster1d::Clustering> clustering;
    std::vector<std::size_t> heads;
    cluster1d::HeadMode head_mode = cluster1d::HeadMode::MaxValue;
};

/// Keeps exactly k profile entries. ClusterHead clusters the values into k groups and
/// keeps each group's head; TopK keeps the k largest (ties to the smaller position);
/// Random keeps a uniform k-subset drawn from `seed`.
Selection select_units(const energy::DependenceProfile &profile, int k, Strategy strategy, std::uint64_t seed,
                       cluster1d::HeadMode head_mode = cluster1d::HeadMode::MaxValue);

/// Decrement rule: one fewer unit than currently active.
int next_k(int active_count);

struct StageSchedule {
    int n_stages = 0;
    /// Explicit cluster counts per stage; empty selects the decrement rule.
    std::vector<int> k_sequence;

    int k_for(int stage, int active_count) const;
};

struct RetrainMetrics {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// What run_ped needs from a model: feature maps of the active units on held-out data,
/// the labels to measure dependence against, and warm-start retraining under a policy.
class ModelAdapter {
  public:
    struct Observation {
        /// One matrix per active unit, in ascending unit order.
        std::vector<FeatureMatrix> units;
        LabelVector labels;
    };

    virtual ~ModelAdapter() = default;

    virtual int unit_count() const = 0;
    virtual const PruningPolicy &policy() const = 0;
    virtual Observation observe() = 0;
    virtual RetrainMetrics apply_and_retrain(const PruningPolicy &policy, int stage) = 0;
    virtual RetrainMetrics evaluate() = 0;
    virtual std::int64_t param_count() const = 0;
    virtual std::int64_t flop_count() const = 0;
};

struct PedOptions {
    energy::Variant variant = energy::Variant::V;
    std::optional<std::size_t> subsample_cap;
    cluster1d::HeadMode head_mode = cluster1d::HeadMode::MaxValue;
};

struct StageReport {
    int stage = 0;
    std::vector<int> active_before;
    energy::DependenceProfile profile;
    Selection selection;
    RetrainMetrics metrics;
    std::int64_t param_count = 0;
    std::int64_t flop_count = 0;
    double wall_time = 0.0;
};

/// Seed used for subsampling and random selection at a given stage.
std::uint64_t stage_seed(std::uint64_t seed, int stage);

/// Runs schedule.n_stages rounds of measure -> select -> retrain on the adapter.
std::vector<StageReport> run_ped(ModelAdapter &adapter, const StageSchedule &schedule, Strategy strategy,
                                 std::uint64_t seed, const PedOptions &options = {});

} // namespace ped

#endif // PED_PRUNING_HPP
