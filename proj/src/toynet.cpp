#include "ped/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "ped/error.hpp"
#include "le.hpp"

namespace ped::toynet {

std::string to_string(Composition c) { return c == Composition::Residual ? "residual" : "dense"; }

Composition parse_composition(const std::string &s) {
    if (s == "residual")
        return Composition::Residual;
    if (s == "dense")
        return Composition::Dense;
    throw Error(ErrorCode::InvalidArgument, "composition must be residual or dense, got \"" + s + "\"");
}

std::string to_string(DataKind k) { return k == DataKind::Blobs ? "blobs" : "rings"; }

DataKind parse_data_kind(const std::string &s) {
    if (s == "blobs")
        return DataKind::Blobs;
    if (s == "rings")
        return DataKind::Rings;
    throw Error(ErrorCode::InvalidArgument, "data kind must be blobs or rings, got \"" + s + "\"");
}

std::string to_string(LabelSource s) { return s == LabelSource::Predicted ? "predicted" : "true"; }

LabelSource parse_label_source(const std::string &s) {
    if (s == "predicted")
        return LabelSource::Predicted;
    if (s == "true")
        return LabelSource::True;
    throw Error(ErrorCode::InvalidArgument, "label source must be predicted or true, got \"" + s + "\"");
}

void SkipNetConfig::validate() const {
    if (units < 1)
        throw Error(ErrorCode::InvalidArgument, "units must be >= 1");
    if (input_dim < 1 || width < 1 || (composition == Composition::Dense && growth < 1))
        throw Error(ErrorCode::InvalidArgument, "input_dim, width and growth must be >= 1");
    if (classes < 2)
        throw Error(ErrorCode::InvalidArgument, "classes must be >= 2");
}

namespace {

using Index = Eigen::Index;

MatrixXd activate(const MatrixXd &z, Activation a) {
    return a == Activation::Relu ? MatrixXd(z.cwiseMax(0.0)) : z;
}

// Multiplies `grad` by the activation derivative at `z`.
MatrixXd backprop_activation(const MatrixXd &grad, const MatrixXd &z, Activation a) {
    if (a == Activation::Identity)
        return grad;
    return (z.array() > 0.0).select(grad, 0.0);
}

MatrixXd affine(const MatrixXd &x, const MatrixXd &w, const VectorXd &b) {
    MatrixXd out = x * w.transpose();
    out.rowwise() += b.transpose();
    return out;
}

int act_cost(Activation a, int elements) { return a == Activation::Relu ? elements : 0; }

bool is_active(const PruningPolicy &policy, int l) {
    return policy.active(l);
}

// Column offset of a dense input block: 0 for the stem, then one block per unit.
Index dense_block_offset(const SkipNetConfig &cfg, int block) {
    return block == 0 ? 0 : cfg.width + static_cast<Index>(cfg.growth) * (block - 1);
}

Index dense_block_width(const SkipNetConfig &cfg, int block) { return block == 0 ? cfg.width : cfg.growth; }

// Live input blocks of dense unit `l` (or the head when l == units): stem plus active earlier units.
std::vector<int> dense_live_blocks(const SkipNetConfig &cfg, const PruningPolicy &policy, int l) {
    std::vector<int> blocks{0};
    for (int j = 0; j < std::min(l, cfg.units); ++j)
        if (is_active(policy, j))
            blocks.push_back(j + 1);
    return blocks;
}

MatrixXd gather_columns(const SkipNetConfig &cfg, const MatrixXd &w, const std::vector<int> &blocks) {
    Index cols = 0;
    for (int b : blocks)
        cols += dense_block_width(cfg, b);
    MatrixXd out(w.rows(), cols);
    Index at = 0;
    for (int b : blocks) {
        const Index bw = dense_block_width(cfg, b);
        out.middleCols(at, bw) = w.middleCols(dense_block_offset(cfg, b), bw);
        at += bw;
    }
    return out;
}

void scatter_columns(const SkipNetConfig &cfg, const MatrixXd &src, const std::vector<int> &blocks, MatrixXd &w) {
    Index at = 0;
    for (int b : blocks) {
        const Index bw = dense_block_width(cfg, b);
        w.middleCols(dense_block_offset(cfg, b), bw) += src.middleCols(at, bw);
        at += bw;
    }
}

struct Cache {
    MatrixXd z0;
    std::vector<MatrixXd> z1;  // per unit pre-activation
    std::vector<MatrixXd> h;   // residual hidden layer
    std::vector<MatrixXd> t;   // per unit feature map
    std::vector<MatrixXd> u;   // U_0..U_L
    std::vector<MatrixXd> in;  // dense unit inputs (live concatenation)
    MatrixXd head_in;
    MatrixXd logits;
};

MatrixXd concat_blocks(const Cache &c, const std::vector<int> &blocks, Index rows) {
    Index cols = 0;
    for (int b : blocks)
        cols += b == 0 ? c.u[0].cols() : c.t[static_cast<std::size_t>(b - 1)].cols();
    MatrixXd out(rows, cols);
    Index at = 0;
    for (int b : blocks) {
        const MatrixXd &m = b == 0 ? c.u[0] : c.t[static_cast<std::size_t>(b - 1)];
        out.middleCols(at, m.cols()) = m;
        at += m.cols();
    }
    return out;
}

Cache run_forward(const SkipNetwork &net, const MatrixXd &x, const PruningPolicy &policy) {
    const SkipNetConfig &cfg = net.config;
    const Parameters &p = net.params;
    if (x.cols() != cfg.input_dim)
        throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.cols()) + " columns, network expects " +
                                                  std::to_string(cfg.input_dim));
    if (policy.unit_count() != cfg.units)
        throw Error(ErrorCode::ShapeMismatch, "policy covers " + std::to_string(policy.unit_count()) +
                                                  " units, network has " + std::to_string(cfg.units));
    const auto L = static_cast<std::size_t>(cfg.units);
    Cache c;
    c.z1.resize(L);
    c.t.resize(L);
    c.u.reserve(L + 1);
    c.z0 = affine(x, p.stem_w, p.stem_b);
    c.u.push_back(activate(c.z0, cfg.activation));

    if (cfg.composition == Composition::Residual) {
        c.h.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            const UnitParams &up = p.units[l];
            c.z1[l] = affine(c.u[l], up.w1, up.b1);
            c.h[l] = activate(c.z1[l], cfg.activation);
            c.t[l] = affine(c.h[l], up.w2, up.b2);
            c.u.push_back(is_active(policy, static_cast<int>(l)) ? MatrixXd(c.u[l] + c.t[l]) : c.u[l]);
        }
        c.head_in = c.u.back();
    } else {
        c.in.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            const auto blocks = dense_live_blocks(cfg, policy, static_cast<int>(l));
            c.in[l] = concat_blocks(c, blocks, x.rows());
            c.z1[l] = affine(c.in[l], gather_columns(cfg, p.units[l].w1, blocks), p.units[l].b1);
            c.t[l] = activate(c.z1[l], cfg.activation);
            c.u.push_back(concat_blocks(c, dense_live_blocks(cfg, policy, static_cast<int>(l) + 1), x.rows()));
        }
        c.head_in = c.u.back();
    }
    const MatrixXd head_w = cfg.composition == Composition::Residual
                                ? p.head_w
                                : gather_columns(cfg, p.head_w, dense_live_blocks(cfg, policy, cfg.units));
    c.logits = affine(c.head_in, head_w, p.head_b);
    return c;
}

Parameters zeros_like(const Parameters &p) {
    Parameters z;
    z.stem_w = MatrixXd::Zero(p.stem_w.rows(), p.stem_w.cols());
    z.stem_b = VectorXd::Zero(p.stem_b.size());
    for (const auto &u : p.units)
        z.units.push_back({MatrixXd::Zero(u.w1.rows(), u.w1.cols()), VectorXd::Zero(u.b1.size()),
                           MatrixXd::Zero(u.w2.rows(), u.w2.cols()), VectorXd::Zero(u.b2.size())});
    z.head_w = MatrixXd::Zero(p.head_w.rows(), p.head_w.cols());
    z.head_b = VectorXd::Zero(p.head_b.size());
    return z;
}

void check_targets(const Batch &batch, int classes) {
    if (batch.inputs.rows() != static_cast<Index>(batch.targets.size()))
        throw Error(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.inputs.rows()) + " inputs and " +
                                                  std::to_string(batch.targets.size()) + " targets");
    if (batch.targets.empty())
        throw Error(ErrorCode::ShapeMismatch, "empty batch");
    for (int t : batch.targets)
        if (t < 1 || t > classes)
            throw Error(ErrorCode::ShapeMismatch, "target " + std::to_string(t) + " outside 1.." +
                                                      std::to_string(classes));
}

// Mean cross-entropy; fills d(loss)/d(logits) when requested.
double softmax_cross_entropy(const MatrixXd &logits, const std::vector<int> &targets, MatrixXd *dlogits) {
    const Index m = logits.rows();
    double total = 0.0;
    if (dlogits)
        dlogits->resize(m, logits.cols());
    for (Index i = 0; i < m; ++i) {
        const double mx = logits.row(i).maxCoeff();
        const auto shifted = (logits.row(i).array() - mx).exp();
        const double z = shifted.sum();
        const Index target = targets[static_cast<std::size_t>(i)] - 1;
        total += std::log(z) + mx - logits(i, target);
        if (dlogits) {
            dlogits->row(i) = shifted / z;
            (*dlogits)(i, target) -= 1.0;
        }
    }
    if (dlogits)
        *dlogits /= static_cast<double>(m);
    return total / static_cast<double>(m);
}

template <typename Fn> void visit_params(Parameters &p, Fn &&fn) {
    auto each = [&](auto &m, int unit) {
        for (Index k = 0; k < m.size(); ++k)
            fn(m.data()[k], unit);
    };
    each(p.stem_w, -1);
    each(p.stem_b, -1);
    for (std::size_t l = 0; l < p.units.size(); ++l) {
        each(p.units[l].w1, static_cast<int>(l));
        each(p.units[l].b1, static_cast<int>(l));
        each(p.units[l].w2, static_cast<int>(l));
        each(p.units[l].b2, static_cast<int>(l));
    }
    each(p.head_w, -1);
    each(p.head_b, -1);
}

void sgd_step(Parameters &p, const Parameters &g, double lr) {
    p.stem_w -= lr * g.stem_w;
    p.stem_b -= lr * g.stem_b;
    for (std::size_t l = 0; l < p.units.size(); ++l) {
        p.units[l].w1 -= lr * g.units[l].w1;
        p.units[l].b1 -= lr * g.units[l].b1;
        p.units[l].w2 -= lr * g.units[l].w2;
        p.units[l].b2 -= lr * g.units[l].b2;
    }
    p.head_w -= lr * g.head_w;
    p.head_b -= lr * g.head_b;
}

} // namespace

void Parameters::for_each(const std::function<void(double &)> &fn) {
    visit_params(*this, [&](double &v, int) { fn(v); });
}

std::size_t Parameters::size() const {
    std::size_t n = static_cast<std::size_t>(stem_w.size() + stem_b.size() + head_w.size() + head_b.size());
    for (const auto &u : units)
        n += static_cast<std::size_t>(u.w1.size() + u.b1.size() + u.w2.size() + u.b2.size());
    return n;
}

SkipNetwork init_network(const SkipNetConfig &cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    auto fill = [&](Index rows, Index cols, Index fan_in) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        MatrixXd w(rows, cols);
        for (Index k = 0; k < w.size(); ++k)
            w.data()[k] = scale * dist(rng);
        return w;
    };
    auto fill_vec = [&](Index size, Index fan_in) -> VectorXd { return fill(size, 1, fan_in); };

    SkipNetwork net;
    net.config = cfg;
    net.policy = PruningPolicy::all_active(cfg.units);
    Parameters &p = net.params;
    const Index w = cfg.width;
    p.stem_w = fill(w, cfg.input_dim, cfg.input_dim);
    p.stem_b = fill_vec(w, cfg.input_dim);
    for (int l = 0; l < cfg.units; ++l) {
        UnitParams u;
        if (cfg.composition == Composition::Residual) {
            u.w1 = fill(w, w, w);
            u.b1 = fill_vec(w, w);
            u.w2 = fill(w, w, w);
            u.b2 = fill_vec(w, w);
        } else {
            const Index in = dense_block_offset(cfg, l + 1);
            u.w1 = fill(cfg.growth, in, in);
            u.b1 = fill_vec(cfg.growth, in);
            u.w2 = MatrixXd(0, 0);
            u.b2 = VectorXd(0);
        }
        p.units.push_back(std::move(u));
    }
    const Index head_in = cfg.composition == Composition::Residual ? w : dense_block_offset(cfg, cfg.units + 1);
    p.head_w = fill(cfg.classes, head_in, head_in);
    p.head_b = fill_vec(cfg.classes, head_in);
    return net;
}

ForwardResult forward(const SkipNetwork &net, const MatrixXd &inputs, const PruningPolicy &policy) {
    Cache c = run_forward(net, inputs, policy);
    return {std::move(c.logits), std::move(c.t), std::move(c.u)};
}

ForwardResult forward(const SkipNetwork &net, const MatrixXd &inputs) { return forward(net, inputs, net.policy); }

double loss_and_gradient(const SkipNetwork &net, const Batch &batch, Parameters *gradient) {
    const SkipNetConfig &cfg = net.config;
    check_targets(batch, cfg.classes);
    const Cache c = run_forward(net, batch.inputs, net.policy);
    MatrixXd dlogits;
    const double value = softmax_cross_entropy(c.logits, batch.targets, gradient ? &dlogits : nullptr);
    if (!gradient)
        return value;

    const Parameters &p = net.params;
    Parameters &g = *gradient;
    g = zeros_like(p);
    const auto L = static_cast<std::size_t>(cfg.units);
    g.head_b = dlogits.colwise().sum().transpose();

    MatrixXd du0;
    if (cfg.composition == Composition::Residual) {
        g.head_w = dlogits.transpose() * c.head_in;
        MatrixXd du = dlogits * p.head_w;
        for (std::size_t l = L; l-- > 0;) {
            if (!is_active(net.policy, static_cast<int>(l)))
                continue;
            const UnitParams &up = p.units[l];
            UnitParams &gu = g.units[l];
            gu.w2 = du.transpose() * c.h[l];
            gu.b2 = du.colwise().sum().transpose();
            const MatrixXd dz = backprop_activation(du * up.w2, c.z1[l], cfg.activation);
            gu.w1 = dz.transpose() * c.u[l];
            gu.b1 = dz.colwise().sum().transpose();
            du += dz * up.w1;
        }
        du0 = std::move(du);
    } else {
        std::vector<MatrixXd> dt(L);
        for (std::size_t l = 0; l < L; ++l)
            dt[l] = MatrixXd::Zero(batch.inputs.rows(), cfg.growth);
        du0 = MatrixXd::Zero(batch.inputs.rows(), cfg.width);
        // Routes a gradient on a live concatenation back onto its blocks.
        auto split = [&](const MatrixXd &d_in, const std::vector<int> &blocks) {
            Index at = 0;
            for (int b : blocks) {
                const Index bw = dense_block_width(cfg, b);
                if (b == 0)
                    du0 += d_in.middleCols(at, bw);
                else
                    dt[static_cast<std::size_t>(b - 1)] += d_in.middleCols(at, bw);
                at += bw;
            }
        };
        const auto head_blocks = dense_live_blocks(cfg, net.policy, cfg.units);
        scatter_columns(cfg, dlogits.transpose() * c.head_in, head_blocks, g.head_w);
        split(dlogits * gather_columns(cfg, p.head_w, head_blocks), head_blocks);
        for (std::size_t l = L; l-- > 0;) {
            if (!is_active(net.policy, static_cast<int>(l)))
                continue;
            const auto blocks = dense_live_blocks(cfg, net.policy, static_cast<int>(l));
            const MatrixXd dz = backprop_activation(dt[l], c.z1[l], cfg.activation);
            scatter_columns(cfg, dz.transpose() * c.in[l], blocks, g.units[l].w1);
            g.units[l].b1 = dz.colwise().sum().transpose();
            split(dz * gather_columns(cfg, p.units[l].w1, blocks), blocks);
        }
    }
    const MatrixXd dz0 = backprop_activation(du0, c.z0, cfg.activation);
    g.stem_w = dz0.transpose() * batch.inputs;
    g.stem_b = dz0.colwise().sum().transpose();
    return value;
}

double loss(const SkipNetwork &net, const Batch &batch) { return loss_and_gradient(net, batch, nullptr); }

std::vector<int> predict(const SkipNetwork &net, const MatrixXd &inputs) {
    const Cache c = run_forward(net, inputs, net.policy);
    std::vector<int> out(static_cast<std::size_t>(inputs.rows()));
    for (Index i = 0; i < c.logits.rows(); ++i) {
        Index arg;
        c.logits.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg) + 1;
    }
    return out;
}

double accuracy(const SkipNetwork &net, const Batch &batch) {
    const auto pred = predict(net, batch.inputs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        hits += pred[i] == batch.targets[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Batch subset(const Batch &data, std::span<const std::size_t> rows) {
    Batch out;
    out.inputs.resize(static_cast<Index>(rows.size()), data.inputs.cols());
    out.targets.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.inputs.row(static_cast<Index>(i)) = data.inputs.row(static_cast<Index>(rows[i]));
        out.targets.push_back(data.targets[rows[i]]);
    }
    return out;
}

SkipNetwork train(SkipNetwork net, const Batch &data, const TrainConfig &cfg) {
    if (!(cfg.lr > 0.0))
        throw Error(ErrorCode::InvalidArgument, "learning rate must be > 0");
    if (cfg.epochs < 0)
        throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
    if (cfg.batch_size < 1)
        throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
    if (cfg.epochs == 0)
        return net;
    check_targets(data, net.config.classes);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Parameters grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const Batch mb = subset(data, std::span(order).subspan(start, stop - start));
            const double value = loss_and_gradient(net, mb, &grad);
            if (!std::isfinite(value))
                throw Error(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch) +
                                                         ", batch starting at " + std::to_string(start));
            sgd_step(net.params, grad, cfg.lr);
        }
    }
    return net;
}

GradCheckResult grad_check(const SkipNetwork &net, const Batch &batch, double eps) {
    if (!(eps > 0.0))
        throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
    Parameters analytic;
    loss_and_gradient(net, batch, &analytic);
    std::vector<double> a;
    visit_params(analytic, [&](double &v, int) { a.push_back(v); });

    SkipNetwork probe = net;
    std::vector<double *> slots;
    std::vector<int> owner;
    visit_params(probe.params, [&](double &v, int unit) {
        slots.push_back(&v);
        owner.push_back(unit);
    });

    GradCheckResult result;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const double saved = *slots[k];
        *slots[k] = saved + eps;
        const double up = loss(probe, batch);
        *slots[k] = saved - eps;
        const double down = loss(probe, batch);
        *slots[k] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(a[k]), std::abs(numeric), 1e-6});
        result.max_rel_error = std::max(result.max_rel_error, std::abs(a[k] - numeric) / denom);
        if (owner[k] >= 0 && !net.policy.active(owner[k])) {
            result.pruned_max_abs_analytic = std::max(result.pruned_max_abs_analytic, std::abs(a[k]));
            result.pruned_max_abs_numeric = std::max(result.pruned_max_abs_numeric, std::abs(numeric));
        }
        ++result.checked;
    }
    return result;
}

std::vector<FeatureMatrix> extract_feature_maps(const SkipNetwork &net, const MatrixXd &inputs,
                                                const PruningPolicy &policy) {
    if (inputs.rows() == 0)
        throw Error(ErrorCode::ShapeMismatch, "no inputs");
    Cache c = run_forward(net, inputs, policy);
    std::vector<FeatureMatrix> out;
    for (int l = 0; l < net.config.units; ++l)
        if (policy.active(l))
            out.emplace_back(std::move(c.t[static_cast<std::size_t>(l)]), StorageType::F64);
    return out;
}

std::vector<FeatureMatrix> extract_feature_maps(const SkipNetwork &net, const MatrixXd &inputs) {
    return extract_feature_maps(net, inputs, net.policy);
}

int head_input_width(const SkipNetConfig &cfg, const PruningPolicy &policy) {
    if (cfg.composition == Composition::Residual)
        return cfg.width;
    return cfg.width + cfg.growth * policy.active_count();
}

std::int64_t count_params(const SkipNetConfig &cfg, const PruningPolicy &policy) {
    const std::int64_t w = cfg.width, g = cfg.growth, p = cfg.classes;
    std::int64_t total = static_cast<std::int64_t>(cfg.input_dim) * w + w;
    if (cfg.composition == Composition::Residual) {
        for (int l = 0; l < cfg.units; ++l)
            if (policy.active(l))
                total += 2 * (w * w + w);
    } else {
        std::int64_t live = 0;
        for (int l = 0; l < cfg.units; ++l)
            if (policy.active(l)) {
                total += (w + g * live) * g + g;
                ++live;
            }
    }
    total += static_cast<std::int64_t>(head_input_width(cfg, policy)) * p + p;
    return total;
}

std::int64_t count_flops(const SkipNetConfig &cfg, const PruningPolicy &policy) {
    const std::int64_t w = cfg.width, g = cfg.growth, p = cfg.classes;
    std::int64_t total = 2 * static_cast<std::int64_t>(cfg.input_dim) * w + act_cost(cfg.activation, cfg.width);
    if (cfg.composition == Composition::Residual) {
        for (int l = 0; l < cfg.units; ++l)
            if (policy.active(l))
                total += 2 * w * w + act_cost(cfg.activation, cfg.width) + 2 * w * w;
    } else {
        std::int64_t live = 0;
        for (int l = 0; l < cfg.units; ++l)
            if (policy.active(l)) {
                total += 2 * (w + g * live) * g + act_cost(cfg.activation, cfg.growth);
                ++live;
            }
    }
    total += 2 * static_cast<std::int64_t>(head_input_width(cfg, policy)) * p;
    return total;
}

namespace {

void require_active(const PruningPolicy &policy, int unit) {
    if (unit < 0 || unit >= policy.unit_count() || !policy.active(unit))
        throw Error(ErrorCode::InvalidArgument, "unit " + std::to_string(unit) + " is not active");
}

std::int64_t active_before(const PruningPolicy &policy, int unit) {
    std::int64_t n = 0;
    for (int j = 0; j < unit; ++j)
        n += policy.active(j);
    return n;
}

std::int64_t active_after(const PruningPolicy &policy, int unit) {
    std::int64_t n = 0;
    for (int j = unit + 1; j < policy.unit_count(); ++j)
        n += policy.active(j);
    return n;
}

} // namespace

std::int64_t unit_param_cost(const SkipNetConfig &cfg, const PruningPolicy &policy, int unit) {
    require_active(policy, unit);
    const std::int64_t w = cfg.width, g = cfg.growth, p = cfg.classes;
    if (cfg.composition == Composition::Residual)
        return 2 * (w * w + w);
    // Own weights and bias, plus the columns every later live unit and the head spend on it.
    return (w + g * active_before(policy, unit)) * g + g + g * g * active_after(policy, unit) + g * p;
}

std::int64_t unit_flop_cost(const SkipNetConfig &cfg, const PruningPolicy &policy, int unit) {
    require_active(policy, unit);
    const std::int64_t w = cfg.width, g = cfg.growth, p = cfg.classes;
    if (cfg.composition == Composition::Residual)
        return 4 * w * w + act_cost(cfg.activation, cfg.width);
    return 2 * (w + g * active_before(policy, unit)) * g + act_cost(cfg.activation, cfg.growth) +
           2 * g * g * active_after(policy, unit) + 2 * g * p;
}

VectorXd materialize_params(const SkipNetwork &net) {
    const SkipNetConfig &cfg = net.config;
    const Parameters &p = net.params;
    std::vector<double> out;
    auto push = [&](const auto &m) { out.insert(out.end(), m.data(), m.data() + m.size()); };
    push(p.stem_w);
    push(p.stem_b);
    for (int l = 0; l < cfg.units; ++l) {
        if (!net.policy.active(l))
            continue;
        const UnitParams &u = p.units[static_cast<std::size_t>(l)];
        if (cfg.composition == Composition::Residual) {
            push(u.w1);
            push(u.b1);
            push(u.w2);
            push(u.b2);
        } else {
            push(gather_columns(cfg, u.w1, dense_live_blocks(cfg, net.policy, l)));
            push(u.b1);
        }
    }
    if (cfg.composition == Composition::Residual)
        push(p.head_w);
    else
        push(gather_columns(cfg, p.head_w, dense_live_blocks(cfg, net.policy, cfg.units)));
    push(p.head_b);
    return Eigen::Map<VectorXd>(out.data(), static_cast<Index>(out.size()));
}

namespace {
constexpr double kBlobSeparation = 1.5;
constexpr int kBlobAttempts = 1000;
} // namespace

Batch gen_synthetic(DataKind kind, int n, int p, int input_dim, double noise, std::uint64_t seed) {
    if (p < 1 || n < p)
        throw Error(ErrorCode::BadArity, "need n >= p >= 1, got n = " + std::to_string(n) + ", p = " + std::to_string(p));
    if (input_dim < (kind == DataKind::Rings ? 2 : 1))
        throw Error(ErrorCode::BadArity, "input_dim " + std::to_string(input_dim) + " too small for " + to_string(kind));
    if (!(noise >= 0.0) || !std::isfinite(noise))
        throw Error(ErrorCode::InvalidArgument, "noise must be finite and >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Batch out;
    out.inputs.resize(n, input_dim);
    out.targets.resize(static_cast<std::size_t>(n));

    MatrixXd centers;
    if (kind == DataKind::Blobs) {
        // Rejection keeps centres kBlobSeparation apart so blobs stay separable at small noise.
        std::uniform_real_distribution<double> box(-3.0, 3.0);
        centers.resize(p, input_dim);
        for (Index c = 0; c < p; ++c) {
            for (int attempt = 0; attempt < kBlobAttempts; ++attempt) {
                for (Index j = 0; j < input_dim; ++j)
                    centers(c, j) = box(rng);
                bool apart = true;
                for (Index o = 0; o < c && apart; ++o)
                    apart = (centers.row(c) - centers.row(o)).norm() >= kBlobSeparation;
                if (apart)
                    break;
            }
        }
    }
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        const int c = i % p;
        out.targets[static_cast<std::size_t>(i)] = c + 1;
        if (kind == DataKind::Blobs) {
            for (int j = 0; j < input_dim; ++j)
                out.inputs(i, j) = centers(c, j) + (noise > 0.0 ? noise * gauss(rng) : 0.0);
        } else {
            const double radius = 1.0 + c;
            const double theta = angle(rng);
            out.inputs(i, 0) = radius * std::cos(theta) + noise * gauss(rng);
            out.inputs(i, 1) = radius * std::sin(theta) + noise * gauss(rng);
            for (int j = 2; j < input_dim; ++j)
                out.inputs(i, j) = noise * gauss(rng);
        }
    }
    return out;
}

Splits split_dataset(const Batch &data, double train_fraction, double validation_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(validation_fraction > 0.0) || train_fraction + validation_fraction >= 1.0)
        throw Error(ErrorCode::InvalidArgument, "split fractions must be positive and sum below 1");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n = static_cast<double>(order.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * train_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround(n * validation_fraction));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= order.size())
        throw Error(ErrorCode::InvalidArgument, "dataset too small for the requested split");
    std::span<const std::size_t> all(order);
    return {subset(data, all.subspan(0, n_train)), subset(data, all.subspan(n_train, n_val)),
            subset(data, all.subspan(n_train + n_val))};
}

namespace {
constexpr std::uint8_t kCheckpointMagic[4] = {0x50, 0x45, 0x44, 0x4E};
}

io::Bytes encode_checkpoint(const SkipNetwork &net) {
    const SkipNetConfig &cfg = net.config;
    io::Bytes out(kCheckpointMagic, kCheckpointMagic + 4);
    out.push_back(kCheckpointVersion);
    out.push_back(static_cast<std::uint8_t>(cfg.composition));
    out.push_back(static_cast<std::uint8_t>(cfg.activation));
    out.push_back(0);
    for (std::int64_t v : {cfg.units, cfg.input_dim, cfg.width, cfg.growth, cfg.classes})
        le::append<std::uint64_t>(out, static_cast<std::uint64_t>(v));
    le::append<std::uint64_t>(out, cfg.seed);
    le::append<std::uint64_t>(out, static_cast<std::uint64_t>(net.policy.stage));
    out.insert(out.end(), net.policy.alphas.begin(), net.policy.alphas.end());
    SkipNetwork copy = net;
    copy.params.for_each([&](double &v) { le::append<double>(out, v); });
    return out;
}

SkipNetwork decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string &source) {
    constexpr std::size_t kFixed = 8 + 7 * 8;
    if (bytes.size() < 4 || !std::equal(kCheckpointMagic, kCheckpointMagic + 4, bytes.begin()))
        throw Error(ErrorCode::BadMagic, "expected magic \"PEDN\"", source, 0);
    if (bytes.size() < kFixed)
        throw Error(ErrorCode::TruncatedPayload, "header needs " + std::to_string(kFixed) + " bytes", source,
                    bytes.size());
    if (bytes[4] != kCheckpointVersion)
        throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(bytes[4]), source, 4);
    if (bytes[5] > 1 || bytes[6] > 1)
        throw Error(ErrorCode::ParseError, "unknown composition or activation", source, 5);
    SkipNetConfig cfg;
    cfg.composition = static_cast<Composition>(bytes[5]);
    cfg.activation = static_cast<Activation>(bytes[6]);
    auto small = [&](std::size_t offset) {
        const auto v = le::read<std::uint64_t>(bytes, offset);
        if (v > (1u << 20))
            throw Error(ErrorCode::ParseError, "implausible size " + std::to_string(v), source, offset);
        return static_cast<int>(v);
    };
    cfg.units = small(8);
    cfg.input_dim = small(16);
    cfg.width = small(24);
    cfg.growth = small(32);
    cfg.classes = small(40);
    cfg.seed = le::read<std::uint64_t>(bytes, 48);
    const auto stage = small(56);
    try {
        cfg.validate();
    } catch (const Error &e) {
        throw Error(ErrorCode::ParseError, e.what(), source, 8);
    }
    SkipNetwork net = init_network(cfg);
    std::size_t offset = kFixed;
    if (bytes.size() < offset + static_cast<std::size_t>(cfg.units))
        throw Error(ErrorCode::TruncatedPayload, "policy flags missing", source, bytes.size());
    net.policy.alphas.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                             bytes.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(cfg.units)));
    net.policy.stage = stage;
    for (std::size_t l = 0; l < net.policy.alphas.size(); ++l)
        if (net.policy.alphas[l] > 1)
            throw Error(ErrorCode::ParseError, "policy flag must be 0 or 1", source, offset + l);
    offset += static_cast<std::size_t>(cfg.units);
    const std::size_t expected = offset + 8 * net.params.size();
    if (bytes.size() < expected)
        throw Error(ErrorCode::TruncatedPayload, "parameters need " + std::to_string(expected) + " bytes", source,
                    bytes.size());
    if (bytes.size() > expected)
        throw Error(ErrorCode::TrailingBytes, std::to_string(bytes.size() - expected) + " bytes after parameters",
                    source, expected);
    net.params.for_each([&](double &v) {
        v = le::read<double>(bytes, offset);
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue, "parameter is not finite", source, offset);
        offset += 8;
    });
    return net;
}

void save_checkpoint(const std::filesystem::path &path, const SkipNetwork &net) {
    io::write_file(path, encode_checkpoint(net));
}

SkipNetwork load_checkpoint(const std::filesystem::path &path) {
    return decode_checkpoint(io::read_file(path), path.string());
}

LabelVector compact_labels(const std::vector<int> &labels) {
    std::map<int, int> remap;
    for (int l : labels)
        remap.emplace(l, 0);
    int next = 1;
    for (auto &[from, to] : remap)
        to = next++;
    std::vector<int> out(labels.size());
    std::transform(labels.begin(), labels.end(), out.begin(), [&](int l) { return remap.at(l); });
    return io::make_labels(std::move(out));
}

ToyAdapter::ToyAdapter(SkipNetwork net, Splits splits, ToyConfig cfg)
    : net_(std::move(net)), splits_(std::move(splits)), cfg_(std::move(cfg)) {}

Splits make_splits(const ToyConfig &cfg) {
    cfg.net.validate();
    const Batch data = gen_synthetic(cfg.data_kind, cfg.samples, cfg.net.classes, cfg.net.input_dim, cfg.noise,
                                     stage_seed(cfg.net.seed, -1));
    return split_dataset(data, cfg.train_fraction, cfg.validation_fraction, stage_seed(cfg.net.seed, -2));
}

ToyAdapter ToyAdapter::pretrained(const ToyConfig &cfg) {
    Splits splits = make_splits(cfg);
    SkipNetwork net = train(init_network(cfg.net), splits.train, cfg.train);
    return ToyAdapter(std::move(net), std::move(splits), cfg);
}

ModelAdapter::Observation ToyAdapter::observe() {
    const Batch &val = splits_.validation;
    Observation obs;
    obs.units = extract_feature_maps(net_, val.inputs);
    obs.labels = compact_labels(cfg_.label_source == LabelSource::Predicted ? predict(net_, val.inputs)
                                                                             : val.targets);
    return obs;
}

RetrainMetrics ToyAdapter::apply_and_retrain(const PruningPolicy &policy, int stage) {
    if (policy.unit_count() != net_.config.units)
        throw Error(ErrorCode::ShapeMismatch, "policy covers " + std::to_string(policy.unit_count()) + " units");
    for (int l = 0; l < policy.unit_count(); ++l)
        if (policy.active(l) && !net_.policy.active(l))
            throw Error(ErrorCode::InvalidArgument, "unit " + std::to_string(l) + " was already pruned");
    net_.policy = policy;
    TrainConfig retrain = cfg_.train;
    retrain.epochs = std::max(1, static_cast<int>(std::lround(cfg_.train.epochs * cfg_.retrain_fraction)));
    retrain.seed = stage_seed(cfg_.train.seed, stage);
    net_ = train(std::move(net_), splits_.train, retrain);
    return evaluate();
}

RetrainMetrics ToyAdapter::evaluate() { return {accuracy(net_, splits_.train), accuracy(net_, splits_.test)}; }

} // namespace ped::toynet
