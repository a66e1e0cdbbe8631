#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iterator>
#include <memory>
#include <sstream>

#include "ped/cluster1d.hpp"
#include "ped/energy.hpp"
#include "ped/error.hpp"
#include "ped/io.hpp"
#include "ped/pruning.hpp"
#include "ped/serialize.hpp"
#include "ped/toynet.hpp"

namespace ped::cli {

namespace {

using json::Json;
namespace fs = std::filesystem;

constexpr double kGradTolerance = 1e-4;

// Top-level keys of a JSON object become option values of the selected subcommand; keys
// are long flag names without the dashes, with '_' accepted for '-'. Arrays feed
// multi-value options.
class JsonConfig : public CLI::Config {
  public:
    std::vector<std::string> path;

    std::string to_config(const CLI::App *, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream &input) const override {
        const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
        const Json j = json::parse(text, "--config");
        if (!j.is_object())
            throw Error(ErrorCode::ParseError, "config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto &[key, value] : j.items()) {
            if (key == "config")
                continue;
            CLI::ConfigItem item;
            item.parents = path;
            item.name = key;
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            if (value.is_array()) {
                for (const auto &v : value)
                    item.inputs.push_back(scalar(v, key));
            } else {
                item.inputs.push_back(scalar(value, key));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

  private:
    static std::string scalar(const Json &v, const std::string &key) {
        if (v.is_string())
            return v.get<std::string>();
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        if (v.is_number())
            return v.dump();
        throw Error(ErrorCode::ParseError, "config field \"" + key + "\" must be a string, number, boolean or array");
    }
};

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// RFC-4180 quoting for fields that need it.
std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"')
            q += '"';
        q += c;
    }
    return q + "\"";
}

std::string csv_row(const std::vector<std::string> &fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i)
        row += (i ? "," : "") + csv_field(fields[i]);
    return row + "\r\n";
}

void emit(std::ostream &out, const std::string &path, const std::string &text) {
    if (path.empty())
        out << text;
    else
        io::write_text(path, text);
}

std::string dump(const Json &j) { return j.dump(2) + "\n"; }

Json read_json(const std::string &path) {
    const auto bytes = io::read_file(path);
    return json::parse(std::string(bytes.begin(), bytes.end()), path);
}

// Subcommand chain named by the leading arguments.
std::vector<std::string> subcommand_path(const CLI::App &app, int argc, const char *const *argv) {
    std::vector<std::string> path;
    const CLI::App *at = &app;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config") {
            ++i;
            continue;
        }
        if (arg.rfind("--config=", 0) == 0)
            continue;
        const CLI::App *next = nullptr;
        for (const CLI::App *sub : at->get_subcommands({}))
            if (sub->get_name() == argv[i])
                next = sub;
        if (next == nullptr)
            break;
        path.emplace_back(argv[i]);
        at = next;
    }
    return path;
}

const std::vector<std::string> kStrategies{"cluster-head", "top-k", "random"};

// ---------------------------------------------------------------------------------------------
// Toy network options shared by train, ped-run, grad-check and compare.

struct NetFlags {
    int units = 8;
    int input_dim = 2;
    int width = 16;
    int growth = 4;
    int classes = 2;
    std::string composition = "residual";
    std::string activation = "relu";

    void add(CLI::App *app) {
        app->add_option("--units", units, "Skip-units L")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--input-dim", input_dim, "Input features")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--width", width, "Stem and residual width")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--growth", growth, "Dense unit output width")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--classes", classes, "Classes p")->capture_default_str()->check(CLI::Range(2, 1 << 20));
        app->add_option("--composition", composition, "residual or dense")
            ->capture_default_str()
            ->check(CLI::IsMember({"residual", "dense"}));
        app->add_option("--activation", activation, "relu or identity")
            ->capture_default_str()
            ->check(CLI::IsMember({"relu", "identity"}));
    }

    toynet::SkipNetConfig config(std::uint64_t seed) const {
        toynet::SkipNetConfig c;
        c.units = units;
        c.input_dim = input_dim;
        c.width = width;
        c.growth = growth;
        c.classes = classes;
        c.composition = toynet::parse_composition(composition);
        c.activation = activation == "relu" ? toynet::Activation::Relu : toynet::Activation::Identity;
        c.seed = seed;
        return c;
    }

    void echo(Json &j) const {
        j["units"] = units;
        j["input-dim"] = input_dim;
        j["width"] = width;
        j["growth"] = growth;
        j["classes"] = classes;
        j["composition"] = composition;
        j["activation"] = activation;
    }
};

struct ToyFlags {
    NetFlags net;
    std::string kind = "rings";
    int samples = 2000;
    double noise = 0.1;
    int epochs = 60;
    double lr = 0.05;
    int batch_size = 32;
    double retrain_fraction = 0.25;
    double train_fraction = 0.6;
    double validation_fraction = 0.2;
    std::string label_source = "predicted";

    void add(CLI::App *app) {
        net.add(app);
        app->add_option("--kind", kind, "Synthetic data: blobs or rings")
            ->capture_default_str()
            ->check(CLI::IsMember({"blobs", "rings"}));
        app->add_option("--samples", samples, "Samples before splitting")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--noise", noise, "Data noise scale")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--epochs", epochs, "Initial training epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--lr", lr, "SGD learning rate")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--retrain-fraction", retrain_fraction, "Retraining epochs per stage as a fraction of --epochs")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        app->add_option("--train-fraction", train_fraction, "Share of samples for training")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--validation-fraction", validation_fraction,
                        "Share of samples for measuring dependence")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--label-source", label_source, "Labels for dependence: predicted or true")
            ->capture_default_str()
            ->check(CLI::IsMember({"predicted", "true"}));
    }

    toynet::ToyConfig config(std::uint64_t seed) const {
        if (train_fraction + validation_fraction >= 1.0)
            throw Error(ErrorCode::InvalidArgument, "train and validation fractions must leave a test split");
        toynet::ToyConfig c;
        c.net = net.config(seed);
        c.data_kind = toynet::parse_data_kind(kind);
        c.samples = samples;
        c.noise = noise;
        c.train = {epochs, lr, batch_size, seed};
        c.retrain_fraction = retrain_fraction;
        c.train_fraction = train_fraction;
        c.validation_fraction = validation_fraction;
        c.label_source = toynet::parse_label_source(label_source);
        c.net.validate();
        return c;
    }

    void echo(Json &j) const {
        net.echo(j);
        j["kind"] = kind;
        j["samples"] = samples;
        j["noise"] = noise;
        j["epochs"] = epochs;
        j["lr"] = lr;
        j["batch-size"] = batch_size;
        j["retrain-fraction"] = retrain_fraction;
        j["train-fraction"] = train_fraction;
        j["validation-fraction"] = validation_fraction;
        j["label-source"] = label_source;
    }
};

struct PedFlags {
    int stages = 4;
    std::vector<int> k_sequence;
    std::string head_mode = "max";
    std::string variant = "v";
    std::size_t subsample_cap = 0;

    void add(CLI::App *app) {
        app->add_option("--stages", stages, "Pruning stages N")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--k-sequence", k_sequence, "Cluster count per stage; default keeps one fewer unit each stage")
            ->delimiter(',');
        app->add_option("--head-mode", head_mode, "Cluster head: max or centroid")
            ->capture_default_str()
            ->check(CLI::IsMember({"max", "centroid"}));
        app->add_option("--variant", variant, "Energy statistic: v or u")
            ->capture_default_str()
            ->check(CLI::IsMember({"v", "u"}));
        app->add_option("--subsample-cap", subsample_cap, "Stratified subsample size for dependence; 0 uses all")
            ->capture_default_str();
    }

    StageSchedule schedule(int units) const {
        if (!k_sequence.empty()) {
            if (static_cast<int>(k_sequence.size()) < stages)
                throw Error(ErrorCode::ScheduleExhausted, std::to_string(k_sequence.size()) +
                                                              " cluster counts for " + std::to_string(stages) +
                                                              " stages");
            int active = units;
            for (int k : k_sequence) {
                if (k < 1 || k >= active)
                    throw Error(ErrorCode::BadK, "k-sequence must decrease strictly from " + std::to_string(units) +
                                                     " and stay >= 1");
                active = k;
            }
        } else if (stages >= units) {
            throw Error(ErrorCode::CannotPruneBelowOne,
                        std::to_string(stages) + " decrement stages would prune all " + std::to_string(units) + " units");
        }
        return {stages, k_sequence};
    }

    PedOptions options() const {
        PedOptions o;
        o.variant = energy::parse_variant(variant);
        o.head_mode = cluster1d::parse_head_mode(head_mode);
        if (subsample_cap > 0)
            o.subsample_cap = subsample_cap;
        return o;
    }

    void echo(Json &j) const {
        j["stages"] = stages;
        j["k-sequence"] = k_sequence;
        j["head-mode"] = head_mode;
        j["variant"] = variant;
        j["subsample-cap"] = subsample_cap;
    }
};

Json metrics_json(const RetrainMetrics &m, std::int64_t params, std::int64_t flops) {
    return {{"train_accuracy", m.train_accuracy},
            {"test_accuracy", m.test_accuracy},
            {"param_count", params},
            {"flop_count", flops}};
}

// ---------------------------------------------------------------------------------------------

struct Command {
    std::function<int(std::ostream &, std::ostream &)> run;
};

void add_estat(CLI::App &app, Command &cmd) {
    struct Flags {
        std::vector<std::string> features;
        std::string labels;
        std::string variant = "v";
        std::size_t subsample_cap = 0;
        std::uint64_t seed = 0;
        std::string policy;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    CLI::App *sub = app.add_subcommand("estat", "Energy Dependence profile of feature-map dumps");
    sub->add_option("features", f->features, "One PEDF or CSV dump per active unit, in unit order")->required();
    sub->add_option("--labels", f->labels, "PEDL or CSV labels, one per sample row")->required();
    sub->add_option("--variant", f->variant, "v or u")->capture_default_str()->check(CLI::IsMember({"v", "u"}));
    sub->add_option("--subsample-cap", f->subsample_cap, "Stratified subsample size; 0 uses all")->capture_default_str();
    sub->add_option("--seed", f->seed, "Subsampling seed")->capture_default_str();
    sub->add_option("--policy", f->policy, "Policy JSON of the previous stage; maps dumps to unit indices");
    sub->add_option("--out", f->out, "Write the profile here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &) {
            const auto variant = energy::parse_variant(f->variant);
            PruningPolicy policy = PruningPolicy::all_active(static_cast<int>(f->features.size()));
            if (!f->policy.empty()) {
                policy = json::policy_from_json(read_json(f->policy));
                if (policy.active_count() != static_cast<int>(f->features.size()))
                    throw Error(ErrorCode::LengthMismatch, std::to_string(f->features.size()) + " dumps for " +
                                                               std::to_string(policy.active_count()) +
                                                               " active units",
                                f->policy);
            }
            const LabelVector labels = io::load_labels(f->labels);
            std::vector<FeatureMatrix> units;
            for (const auto &path : f->features) {
                units.push_back(io::load_feature_dump(path));
                try {
                    io::validate_pair(units.back(), labels);
                } catch (const Error &e) {
                    throw Error(e.code(), e.what(), path);
                }
            }
            std::optional<std::size_t> cap;
            if (f->subsample_cap > 0)
                cap = f->subsample_cap;
            auto profile = energy::dependence_profile(units, labels, variant, cap, f->seed, policy.active_set(),
                                                      policy.unit_count());
            profile.stage = policy.stage;
            Json j = json::to_json(profile);
            j["config"] = {{"features", f->features},
                           {"labels", f->labels},
                           {"variant", f->variant},
                           {"subsample-cap", f->subsample_cap},
                           {"seed", f->seed},
                           {"policy", f->policy.empty() ? Json(nullptr) : Json(f->policy)}};
            emit(out, f->out, dump(j));
            return kExitOk;
        };
    });
}

void add_select(CLI::App &app, Command &cmd) {
    struct Flags {
        std::string profile;
        int k = 0;
        std::string strategy = "cluster-head";
        std::string head_mode = "max";
        std::uint64_t seed = 0;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    CLI::App *sub = app.add_subcommand("select", "Choose the units to keep from a dependence profile");
    sub->add_option("--profile", f->profile, "Profile JSON from estat")->required();
    sub->add_option("--k", f->k, "Units to keep")->required();
    sub->add_option("--strategy", f->strategy, "cluster-head, top-k or random")
        ->capture_default_str()
        ->check(CLI::IsMember(kStrategies));
    sub->add_option("--head-mode", f->head_mode, "max or centroid")
        ->capture_default_str()
        ->check(CLI::IsMember({"max", "centroid"}));
    sub->add_option("--seed", f->seed, "Seed for random selection")->capture_default_str();
    sub->add_option("--out", f->out, "Write the policy here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &err) {
            const auto profile = json::profile_from_json(read_json(f->profile));
            if (f->k == static_cast<int>(profile.size()))
                err << "warning: k equals the number of profiled units; nothing is pruned\n";
            const auto sel = select_units(profile, f->k, parse_strategy(f->strategy), f->seed,
                                          cluster1d::parse_head_mode(f->head_mode));
            Json j = json::to_json(sel);
            j["config"] = {{"profile", f->profile},
                           {"k", f->k},
                           {"strategy", f->strategy},
                           {"head-mode", f->head_mode},
                           {"seed", f->seed}};
            emit(out, f->out, dump(j));
            return kExitOk;
        };
    });
}

bool same_shape(const toynet::SkipNetConfig &a, const toynet::SkipNetConfig &b) {
    return a.units == b.units && a.input_dim == b.input_dim && a.width == b.width && a.growth == b.growth &&
           a.classes == b.classes && a.composition == b.composition && a.activation == b.activation &&
           a.seed == b.seed;
}

void add_train(CLI::App *toy, Command &cmd) {
    struct Flags {
        ToyFlags toy;
        std::uint64_t seed = 0;
        std::string checkpoint;
        std::string resume;
        std::string policy;
        std::string dump_dir;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    CLI::App *sub = toy->add_subcommand("train", "Train the toy network; optionally export feature dumps");
    f->toy.add(sub);
    sub->add_option("--seed", f->seed, "Network, data and training seed")->capture_default_str();
    sub->add_option("--checkpoint", f->checkpoint, "Write the trained network (PEDN) here");
    sub->add_option("--resume", f->resume, "Warm-start from this checkpoint instead of a fresh initialisation");
    sub->add_option("--policy", f->policy, "Policy JSON to apply before training; units cannot be re-activated");
    sub->add_option("--dump-dir", f->dump_dir, "Write validation feature maps (PEDF) and labels (PEDL) here");
    sub->add_option("--out", f->out, "Write the summary here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &) {
            const auto cfg = f->toy.config(f->seed);
            toynet::SkipNetwork net;
            if (f->resume.empty()) {
                net = toynet::init_network(cfg.net);
            } else {
                net = toynet::load_checkpoint(f->resume);
                if (!same_shape(net.config, cfg.net))
                    throw Error(ErrorCode::ShapeMismatch, "checkpoint network differs from the configured one",
                                f->resume);
            }
            if (!f->policy.empty()) {
                const auto policy = json::policy_from_json(read_json(f->policy));
                if (policy.unit_count() != cfg.net.units)
                    throw Error(ErrorCode::ShapeMismatch,
                                "policy covers " + std::to_string(policy.unit_count()) + " units", f->policy);
                for (int l = 0; l < policy.unit_count(); ++l)
                    if (policy.active(l) && !net.policy.active(l))
                        throw Error(ErrorCode::InvalidArgument, "unit " + std::to_string(l) + " was already pruned",
                                    f->policy);
                net.policy = policy;
            }
            const auto splits = toynet::make_splits(cfg);
            net = toynet::train(std::move(net), splits.train, cfg.train);
            if (!f->checkpoint.empty())
                toynet::save_checkpoint(f->checkpoint, net);

            Json dumps = Json::array();
            if (!f->dump_dir.empty()) {
                fs::create_directories(f->dump_dir);
                const auto &val = splits.validation;
                const auto maps = toynet::extract_feature_maps(net, val.inputs);
                const auto active = net.policy.active_set();
                for (std::size_t i = 0; i < maps.size(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof name, "unit_%02d.pedf", active[i]);
                    const auto path = (fs::path(f->dump_dir) / name).string();
                    io::write_feature_dump(path, maps[i]);
                    dumps.push_back(path);
                }
                const auto labels = toynet::compact_labels(cfg.label_source == toynet::LabelSource::Predicted
                                                               ? toynet::predict(net, val.inputs)
                                                               : val.targets);
                io::write_labels(fs::path(f->dump_dir) / "labels.pedl", labels);
            }

            Json config;
            f->toy.echo(config);
            config["seed"] = f->seed;
            config["resume"] = f->resume.empty() ? Json(nullptr) : Json(f->resume);
            config["policy"] = f->policy.empty() ? Json(nullptr) : Json(f->policy);
            Json j = metrics_json({toynet::accuracy(net, splits.train), toynet::accuracy(net, splits.test)},
                                  toynet::count_params(net.config, net.policy),
                                  toynet::count_flops(net.config, net.policy));
            j["policy"] = json::to_json(net.policy);
            j["checkpoint"] = f->checkpoint.empty() ? Json(nullptr) : Json(f->checkpoint);
            j["dumps"] = dumps;
            j["config"] = config;
            emit(out, f->out, dump(j));
            return kExitOk;
        };
    });
}

void add_ped_run(CLI::App *toy, Command &cmd) {
    struct Flags {
        ToyFlags toy;
        PedFlags ped;
        std::string strategy = "cluster-head";
        std::uint64_t seed = 0;
        std::string csv;
        bool timing = false;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    CLI::App *sub = toy->add_subcommand("ped-run", "Train the toy network, then prune it stage by stage");
    f->toy.add(sub);
    f->ped.add(sub);
    sub->add_option("--strategy", f->strategy, "cluster-head, top-k or random")
        ->capture_default_str()
        ->check(CLI::IsMember(kStrategies));
    sub->add_option("--seed", f->seed, "Seed for network, data, training and selection")->capture_default_str();
    sub->add_option("--csv", f->csv, "Also write stage,params,flops,accuracy rows here");
    sub->add_flag("--timing", f->timing, "Include wall-clock time per stage (breaks byte-identical reruns)");
    sub->add_option("--out", f->out, "Write the report here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &) {
            const auto cfg = f->toy.config(f->seed);
            const auto schedule = f->ped.schedule(cfg.net.units);
            const auto options = f->ped.options();
            const auto strategy = parse_strategy(f->strategy);

            auto adapter = toynet::ToyAdapter::pretrained(cfg);
            const Json initial = metrics_json(adapter.evaluate(), adapter.param_count(), adapter.flop_count());
            const auto reports = run_ped(adapter, schedule, strategy, f->seed, options);

            Json config;
            f->toy.echo(config);
            f->ped.echo(config);
            config["strategy"] = f->strategy;
            config["seed"] = f->seed;
            Json list = Json::array();
            std::string csv = csv_row({"stage", "params", "flops", "accuracy"});
            for (const auto &r : reports) {
                list.push_back(json::to_json(r, f->timing));
                csv += csv_row({std::to_string(r.stage), std::to_string(r.param_count), std::to_string(r.flop_count),
                                number(r.metrics.test_accuracy)});
            }
            if (!f->csv.empty())
                io::write_text(f->csv, csv);
            emit(out, f->out, dump({{"config", config}, {"initial", initial}, {"reports", list}}));
            return kExitOk;
        };
    });
}

void add_grad_check(CLI::App *toy, Command &cmd) {
    struct Flags {
        NetFlags net;
        int batch = 8;
        double eps = 1e-5;
        std::vector<int> prune;
        std::uint64_t seed = 0;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    f->net.units = 3;
    f->net.width = 6;
    CLI::App *sub = toy->add_subcommand("grad-check", "Compare backprop against central finite differences");
    f->net.add(sub);
    sub->add_option("--batch", f->batch, "Samples in the check batch")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--eps", f->eps, "Finite-difference step")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--prune", f->prune, "Unit indices to prune before checking")->delimiter(',');
    sub->add_option("--seed", f->seed, "Network and batch seed")->capture_default_str();
    sub->add_option("--out", f->out, "Write the result here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &) {
            auto net = toynet::init_network(f->net.config(f->seed));
            for (int l : f->prune) {
                if (l < 0 || l >= net.config.units)
                    throw Error(ErrorCode::InvalidArgument, "no unit " + std::to_string(l) + " to prune");
                net.policy.alphas[static_cast<std::size_t>(l)] = 0;
            }
            const auto batch = toynet::gen_synthetic(toynet::DataKind::Blobs, f->batch, net.config.classes,
                                                     net.config.input_dim, 1.0, stage_seed(f->seed, -1));
            const auto r = toynet::grad_check(net, batch, f->eps);
            const bool pass = r.max_rel_error < kGradTolerance;
            Json config;
            f->net.echo(config);
            config["batch"] = f->batch;
            config["eps"] = f->eps;
            config["prune"] = f->prune;
            config["seed"] = f->seed;
            emit(out, f->out,
                 dump({{"max_rel_error", r.max_rel_error},
                       {"checked", r.checked},
                       {"pruned_max_abs_analytic", r.pruned_max_abs_analytic},
                       {"pruned_max_abs_numeric", r.pruned_max_abs_numeric},
                       {"tolerance", kGradTolerance},
                       {"pass", pass},
                       {"config", config}}));
            return pass ? kExitOk : kExitNumerical;
        };
    });
}

void add_gen_data(CLI::App *toy, Command &cmd) {
    struct Flags {
        std::string kind = "blobs";
        int n = 100;
        int p = 2;
        int input_dim = 2;
        double noise = 0.1;
        std::string storage = "f64";
        std::uint64_t seed = 0;
        std::string features;
        std::string labels;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    CLI::App *sub = toy->add_subcommand("gen-data", "Write a synthetic dataset as PEDF features and PEDL labels");
    sub->add_option("--kind", f->kind, "blobs or rings")->capture_default_str()->check(CLI::IsMember({"blobs", "rings"}));
    sub->add_option("--n", f->n, "Samples")->capture_default_str();
    sub->add_option("--p", f->p, "Classes")->capture_default_str();
    sub->add_option("--input-dim", f->input_dim, "Features per sample")->capture_default_str();
    sub->add_option("--noise", f->noise, "Noise scale")->capture_default_str()->check(CLI::NonNegativeNumber);
    sub->add_option("--storage", f->storage, "f32 or f64")->capture_default_str()->check(CLI::IsMember({"f32", "f64"}));
    sub->add_option("--seed", f->seed, "Data seed")->capture_default_str();
    sub->add_option("--features", f->features, "Output PEDF path")->required();
    sub->add_option("--labels", f->labels, "Output PEDL path")->required();
    sub->add_option("--out", f->out, "Write the summary here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &) {
            const auto data = toynet::gen_synthetic(toynet::parse_data_kind(f->kind), f->n, f->p, f->input_dim,
                                                    f->noise, f->seed);
            const auto storage = f->storage == "f32" ? StorageType::F32 : StorageType::F64;
            io::write_feature_dump(f->features, FeatureMatrix(data.inputs, storage));
            io::write_labels(f->labels, io::make_labels(data.targets));
            std::vector<int> counts(static_cast<std::size_t>(f->p), 0);
            for (int t : data.targets)
                ++counts[static_cast<std::size_t>(t - 1)];
            emit(out, f->out,
                 dump({{"n", f->n},
                       {"d", f->input_dim},
                       {"class_counts", counts},
                       {"config",
                        {{"kind", f->kind},
                         {"n", f->n},
                         {"p", f->p},
                         {"input-dim", f->input_dim},
                         {"noise", f->noise},
                         {"storage", f->storage},
                         {"seed", f->seed},
                         {"features", f->features},
                         {"labels", f->labels}}}}));
            return kExitOk;
        };
    });
}

void add_compare(CLI::App &app, Command &cmd) {
    struct Flags {
        ToyFlags toy;
        PedFlags ped;
        std::vector<std::uint64_t> seeds{0, 1, 2};
        std::vector<std::string> strategies = kStrategies;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    CLI::App *sub = app.add_subcommand("compare", "Run identical schedules per strategy and seed; CSV out");
    f->toy.add(sub);
    f->ped.add(sub);
    sub->add_option("--seeds", f->seeds, "Seeds, one toy experiment each")->delimiter(',')->capture_default_str();
    sub->add_option("--strategies", f->strategies, "Strategies to compare")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember(kStrategies));
    sub->add_option("--out", f->out, "Write the CSV here instead of stdout");
    sub->callback([f, &cmd] {
        cmd.run = [f](std::ostream &out, std::ostream &err) {
            const auto schedule = f->ped.schedule(f->toy.net.units);
            const auto options = f->ped.options();
            std::vector<Strategy> strategies;
            for (const auto &s : f->strategies)
                strategies.push_back(parse_strategy(s));
            for (auto seed : f->seeds)
                (void)f->toy.config(seed);

            Json config;
            f->toy.echo(config);
            f->ped.echo(config);
            config["seeds"] = f->seeds;
            config["strategies"] = f->strategies;
            err << "config: " << config.dump() << "\n";

            std::string csv = csv_row(
                {"strategy", "seed", "stage", "remaining_params_pct", "remaining_flops_pct", "accuracy"});
            for (auto seed : f->seeds) {
                const auto base = toynet::ToyAdapter::pretrained(f->toy.config(seed));
                const double params0 = static_cast<double>(base.param_count());
                const double flops0 = static_cast<double>(base.flop_count());
                for (std::size_t i = 0; i < strategies.size(); ++i) {
                    auto adapter = base;
                    for (const auto &r : run_ped(adapter, schedule, strategies[i], seed, options))
                        csv += csv_row({f->strategies[i], std::to_string(seed), std::to_string(r.stage),
                                        number(100.0 * static_cast<double>(r.param_count) / params0),
                                        number(100.0 * static_cast<double>(r.flop_count) / flops0),
                                        number(r.metrics.test_accuracy)});
                }
            }
            emit(out, f->out, csv);
            return kExitOk;
        };
    });
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Prune skip-units by Energy Dependence"};
    app.name("ped");
    app.require_subcommand(1);
    app.fallthrough();
    auto fmt = std::make_shared<JsonConfig>();
    app.config_formatter(fmt);
    app.set_config("--config", "", "JSON file of option values for the subcommand; command-line flags win");
    app.allow_config_extras(CLI::config_extras_mode::error);
    Command cmd;

    add_estat(app, cmd);
    add_select(app, cmd);
    CLI::App *toy = app.add_subcommand("toynet", "Built-in toy skip-connection network");
    toy->require_subcommand(1);
    add_train(toy, cmd);
    add_ped_run(toy, cmd);
    add_grad_check(toy, cmd);
    add_gen_data(toy, cmd);
    add_compare(app, cmd);

    fmt->path = subcommand_path(app, argc, argv);
    try {
        app.parse(argc, argv);
        if (!cmd.run)
            throw Error(ErrorCode::InvalidArgument, "no command selected");
        return cmd.run(out, err);
    } catch (const CLI::ConfigError &e) {
        std::string what = e.what();
        const std::string cli11 = "INI was not able to parse ";
        if (what.rfind(cli11, 0) == 0)
            what = "config file sets unknown option " + what.substr(cli11.size());
        err << "error: " << what << "\n";
        return kExitInvalid;
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return is_numerical(e.code()) ? kExitNumerical : kExitInvalid;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

} // namespace ped::cli
