#ifndef PED_TOYNET_HPP
#define PED_TOYNET_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ped/io.hpp"
#include "ped/pruning.hpp"
#include "ped/types.hpp"

namespace ped::toynet {

enum class Composition : std::uint8_t { Residual = 0, Dense = 1 };
/// Identity exists for gradient verification of purely linear units.
enum class Activation : std::uint8_t { Relu = 0, Identity = 1 };

std::string to_string(Composition c);
Composition parse_composition(const std::string &s);

struct SkipNetConfig {
    int units = 8;
    int input_dim = 2;
    /// Stem width; also the unit width of the residual variant.
    int width = 16;
    /// Output width of each dense unit.
    int growth = 4;
    int classes = 2;
    Composition composition = Composition::Residual;
    Activation activation = Activation::Relu;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Residual units: T = W2 act(W1 U + b1) + b2. Dense units use w1/b1 only: T = act(W1 [U_0, T_<l] + b1).
struct UnitParams {
    MatrixXd w1;
    VectorXd b1;
    MatrixXd w2;
    VectorXd b2;
};

/// Dense weight matrices keep one column block per potential input (stem, then each
/// earlier unit); blocks of pruned units are skipped, not zeroed.
struct Parameters {
    MatrixXd stem_w;
    VectorXd stem_b;
    std::vector<UnitParams> units;
    MatrixXd head_w;
    VectorXd head_b;

    /// Visits every scalar in a fixed canonical order.
    void for_each(const std::function<void(double &)> &fn);
    std::size_t size() const;
};

struct SkipNetwork {
    SkipNetConfig config;
    Parameters params;
    PruningPolicy policy;
};

/// Targets are 1-based class ids.
struct Batch {
    MatrixXd inputs;
    std::vector<int> targets;

    std::size_t size() const { return targets.size(); }
};

struct ForwardResult {
    MatrixXd logits;
    /// T_1..T_L before policy masking, for every unit.
    std::vector<MatrixXd> feature_maps;
    /// U_0..U_L. Dense outputs are the live concatenation (pruned units contribute no columns).
    std::vector<MatrixXd> unit_outputs;
};

struct TrainConfig {
    int epochs = 60;
    double lr = 0.05;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

SkipNetwork init_network(const SkipNetConfig &cfg);

ForwardResult forward(const SkipNetwork &net, const MatrixXd &inputs);
ForwardResult forward(const SkipNetwork &net, const MatrixXd &inputs, const PruningPolicy &policy);

/// Mean softmax cross-entropy and its gradient with respect to every parameter.
/// Parameters of pruned units receive exactly zero.
double loss_and_gradient(const SkipNetwork &net, const Batch &batch, Parameters *gradient);
double loss(const SkipNetwork &net, const Batch &batch);

std::vector<int> predict(const SkipNetwork &net, const MatrixXd &inputs);
double accuracy(const SkipNetwork &net, const Batch &batch);

/// Mini-batch SGD on the active units; throws DivergedLoss on a non-finite loss.
SkipNetwork train(SkipNetwork net, const Batch &data, const TrainConfig &cfg);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Largest |analytic| and |numeric| seen on pruned-unit parameters.
    double pruned_max_abs_analytic = 0.0;
    double pruned_max_abs_numeric = 0.0;
};

/// Central finite differences against the analytic gradient, over every parameter.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const SkipNetwork &net, const Batch &batch, double eps);

/// One n x width matrix per active unit, rows in input order.
std::vector<FeatureMatrix> extract_feature_maps(const SkipNetwork &net, const MatrixXd &inputs);
std::vector<FeatureMatrix> extract_feature_maps(const SkipNetwork &net, const MatrixXd &inputs,
                                                const PruningPolicy &policy);

int head_input_width(const SkipNetConfig &cfg, const PruningPolicy &policy);
std::int64_t count_params(const SkipNetConfig &cfg, const PruningPolicy &policy);
/// Per-sample forward cost: 2 * in * out per linear map plus one op per rectified element.
std::int64_t count_flops(const SkipNetConfig &cfg, const PruningPolicy &policy);
/// Drop in count_params / count_flops from pruning an active unit, in closed form.
std::int64_t unit_param_cost(const SkipNetConfig &cfg, const PruningPolicy &policy, int unit);
std::int64_t unit_flop_cost(const SkipNetConfig &cfg, const PruningPolicy &policy, int unit);

/// The parameters the pruned model actually uses, concatenated in canonical order.
VectorXd materialize_params(const SkipNetwork &net);

enum class DataKind { Blobs, Rings };
std::string to_string(DataKind k);
DataKind parse_data_kind(const std::string &s);

/// Balanced synthetic classification data; sample i has class (i mod p) + 1.
Batch gen_synthetic(DataKind kind, int n, int p, int input_dim, double noise, std::uint64_t seed);

struct Splits {
    Batch train;
    Batch validation;
    Batch test;
};

/// Seeded shuffle followed by contiguous train / validation / test slices.
Splits split_dataset(const Batch &data, double train_fraction, double validation_fraction, std::uint64_t seed);

Batch subset(const Batch &data, std::span<const std::size_t> rows);

// Checkpoint: "PEDN" u8 version u8 composition u8 activation u8 reserved, u64 units, input_dim,
// width, growth, classes, seed, u64 stage, u8 alphas[units], then f64 parameters in canonical order.
inline constexpr std::uint8_t kCheckpointVersion = 1;
io::Bytes encode_checkpoint(const SkipNetwork &net);
SkipNetwork decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string &source = "<memory>");
void save_checkpoint(const std::filesystem::path &path, const SkipNetwork &net);
SkipNetwork load_checkpoint(const std::filesystem::path &path);

enum class LabelSource { Predicted, True };
std::string to_string(LabelSource s);
LabelSource parse_label_source(const std::string &s);

/// Full desk-scale experiment description.
struct ToyConfig {
    SkipNetConfig net;
    DataKind data_kind = DataKind::Rings;
    int samples = 2000;
    double noise = 0.1;
    TrainConfig train;
    /// Retraining epochs per stage as a fraction of the initial epochs.
    double retrain_fraction = 0.25;
    double train_fraction = 0.6;
    double validation_fraction = 0.2;
    LabelSource label_source = LabelSource::Predicted;
};

/// The experiment's data, generated and split from seeds derived from the network seed.
Splits make_splits(const ToyConfig &cfg);

/// In-process adapter: the toy network with its data splits. Dependence is measured on
/// the validation split, accuracy reported on train and test.
class ToyAdapter : public ModelAdapter {
  public:
    ToyAdapter(SkipNetwork net, Splits splits, ToyConfig cfg);

    /// Generates data, initialises and trains the unpruned network.
    static ToyAdapter pretrained(const ToyConfig &cfg);

    int unit_count() const override { return net_.config.units; }
    const PruningPolicy &policy() const override { return net_.policy; }
    Observation observe() override;
    RetrainMetrics apply_and_retrain(const PruningPolicy &policy, int stage) override;
    RetrainMetrics evaluate() override;
    std::int64_t param_count() const override { return count_params(net_.config, net_.policy); }
    std::int64_t flop_count() const override { return count_flops(net_.config, net_.policy); }

    const SkipNetwork &network() const { return net_; }
    const Splits &splits() const { return splits_; }
    const ToyConfig &config() const { return cfg_; }

  private:
    SkipNetwork net_;
    Splits splits_;
    ToyConfig cfg_;
};

/// Relabels to a gap-free alphabet 1..p' preserving order of the classes present.
LabelVector compact_labels(const std::vector<int> &labels);

} // namespace ped::toynet

#endif // PED_TOYNET_HPP
