#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "armspace/errors.hpp"
#include "armspace/nn/losses.hpp"
#include "armspace/nn/network.hpp"
#include "armspace/nn/optimizers.hpp"
#include "armspace/nn/scalers.hpp"
#include "armspace/types.hpp"

namespace armspace {

/// Hidden widths of the encoder and the two heads. The paper-scale default
/// fixes only the 2150-wide encoder output; everything else is a
/// configurable choice recorded here.
struct HiddenPlan {
    std::vector<int> encoder = {256, 512, 1024, 2048, 2150};
    std::vector<int> head = {1024, 512, 256, 128, 64, 32, 16};
    int est_outputs = 36;
    double dropout = 0.5;
    double bn_momentum = 0.99;
    double bn_eps = 1e-3;
    // batchnorm + PReLU + dropout follow the last `encoder_tail` encoder
    // dense layers (the output layer is part of that tail) and the first
    // `head_blocks` dense layers of each head
    int encoder_tail = 4;
    int head_blocks = 4;

    /// A small plan for desk-scale experiments.
    static HiddenPlan desk(int encoder_out = 256) {
        HiddenPlan p;
        p.encoder = {128, 256, encoder_out};
        p.head = {128, 64, 32};
        return p;
    }
};

struct CombinedModel {
    int input_dim = 0;
    nn::Network encoder;
    nn::Network conf_head;
    nn::Network est_head;
    nn::Scaler input_scaler;
    nn::Scaler target_scaler;
    double threshold = 0.5;

    Matrix scaled_inputs(const Matrix& x) const {
        return input_scaler.fitted ? input_scaler.apply(x) : x;
    }

    int est_head_outputs() const { return est_head.output_width(); }

    void set_threshold(double value) {
        if (!(value > 0.0 && value < 1.0)) throw DomainError("threshold must be in (0, 1)");
        threshold = value;
    }
};

/// Builds the shared-encoder confidence/estimation architecture with
/// deterministic Glorot initialization from the seed.
inline CombinedModel build_combined(int input_dim, const HiddenPlan& plan = {},
                                    std::uint64_t seed = 0) {
    if (input_dim != 24 && input_dim != 96)
        throw BadPlan("combined model input width must be 24 or 96");
    if (plan.encoder.empty() || plan.head.empty()) throw BadPlan("empty layer plan");
    if (plan.est_outputs < 1) throw BadPlan("estimation output width must be positive");

    Rng rng(splitmix64(seed));
    CombinedModel model;
    model.input_dim = input_dim;

    auto block = [&](nn::Network& net) {
        nn::add_batchnorm(net, plan.bn_momentum, plan.bn_eps);
        nn::add_prelu(net);
        nn::add_dropout(net, plan.dropout);
    };

    model.encoder = nn::Network(input_dim);
    const int enc_layers = static_cast<int>(plan.encoder.size());
    for (int i = 0; i < enc_layers; ++i) {
        nn::add_dense(model.encoder, plan.encoder[static_cast<std::size_t>(i)], rng);
        if (i >= enc_layers - plan.encoder_tail)
            block(model.encoder);
        else
            nn::add_prelu(model.encoder);
    }

    auto build_head = [&](int out, bool sigmoid) {
        nn::Network head(model.encoder.output_width());
        const int hidden = static_cast<int>(plan.head.size());
        for (int i = 0; i < hidden; ++i) {
            nn::add_dense(head, plan.head[static_cast<std::size_t>(i)], rng);
            if (i < plan.head_blocks)
                block(head);
            else
                nn::add_prelu(head);
        }
        nn::add_dense(head, out, rng);
        if (sigmoid) nn::add_sigmoid(head);
        return head;
    };
    model.conf_head = build_head(1, true);
    model.est_head = build_head(plan.est_outputs, false);
    return model;
}

struct TrainConfig {
    int batch_size = 4096;
    int epochs = 25;
    double validation_split = 0.2;
    nn::OptimizerConfig optimizer = nn::OptimizerConfig::defaults(nn::OptAlgo::adam);
    int conf_passes = 2;
    int est_passes = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) throw DomainError("batch_size must be >= 1");
        if (epochs < 1) throw DomainError("epochs must be >= 1");
        if (!(validation_split > 0.0 && validation_split < 1.0))
            throw DomainError("validation_split must be in (0, 1)");
        if (conf_passes < 1 || est_passes < 1)
            throw DomainError("cycle passes must be >= 1");
        optimizer.validate();
    }
};

struct EpochRecord {
    int epoch = 0;
    std::string phase;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_metric = 0.0;  // accuracy for conf phases, R^2 for est phases
    double wall_ms = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

inline void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write history: " + path);
    os << "epoch,phase,train_loss,val_loss,wall_ms\n";
    for (const auto& rec : history.epochs) {
        os << rec.epoch << ',' << rec.phase << ',' << rec.train_loss << ',' << rec.val_loss
           << ',' << rec.wall_ms << '\n';
    }
}

namespace detail {

struct Split {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> val;
};

inline Split make_split(Eigen::Index rows, double val_fraction, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    auto val_rows = static_cast<std::size_t>(
        std::llround(static_cast<double>(rows) * val_fraction));
    val_rows = std::min(val_rows, order.size() - 1);
    Split split;
    split.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_rows));
    split.val.assign(order.end() - static_cast<std::ptrdiff_t>(val_rows), order.end());
    return split;
}

inline Matrix gather_rows(const Matrix& src, const std::vector<Eigen::Index>& idx,
                          std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Eigen::Index>(end - begin), src.cols());
    for (std::size_t i = begin; i < end; ++i)
        out.row(static_cast<Eigen::Index>(i - begin)) = src.row(idx[i]);
    return out;
}

inline void shuffle_indices(std::vector<Eigen::Index>& idx, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

inline double r_squared(const Matrix& y, const Matrix& yhat) {
    const double sse = (y - yhat).squaredNorm();
    const Vector mean = y.colwise().mean();
    const double sst = (y.rowwise() - mean.transpose()).squaredNorm();
    if (sst <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - sse / sst;
}

inline double accuracy_at_half(const Matrix& y, const Matrix& scores) {
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        if ((scores(i, 0) >= 0.5) == (y(i, 0) >= 0.5)) ++hits;
    return y.rows() > 0 ? static_cast<double>(hits) / static_cast<double>(y.rows()) : 0.0;
}

class EpochTimer {
public:
    EpochTimer() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Removes rows whose labels carry the no-solution sentinel.
inline void drop_sentinel_rows(const Matrix& features, const Matrix& labels, Matrix& out_x,
                               Matrix& out_y) {
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(labels.rows()));
    for (Eigen::Index i = 0; i < labels.rows(); ++i)
        if (labels.row(i).allFinite()) keep.push_back(i);
    out_x.resize(static_cast<Eigen::Index>(keep.size()), features.cols());
    out_y.resize(static_cast<Eigen::Index>(keep.size()), labels.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out_x.row(static_cast<Eigen::Index>(i)) = features.row(keep[i]);
        out_y.row(static_cast<Eigen::Index>(i)) = labels.row(keep[i]);
    }
}

/// Joint encoder + estimation-head training with MSE on min-max scaled
/// targets; the pre-training stage of the full schedule and the whole
/// schedule for estimation-only runs.
inline TrainHistory pretrain_encoder(CombinedModel& model, const Matrix& features,
                                     const Matrix& labels, const TrainConfig& cfg) {
    cfg.validate();
    if (features.cols() != model.input_dim)
        throw WidthMismatch("dataset width does not match model input");

    Matrix x, y;
    drop_sentinel_rows(features, labels, x, y);
    if (x.rows() == 0) throw EmptyDataset("no rows with a Jacobian solution");
    if (y.cols() != model.est_head_outputs())
        throw WidthMismatch("label width does not match estimation head");

    const detail::Split split =
        detail::make_split(x.rows(), cfg.validation_split, mix_seed(cfg.seed, 0x5917));
    if (!model.input_scaler.fitted) {
        model.input_scaler = nn::Scaler::fit(
            nn::ScalerKind::standardize,
            detail::gather_rows(x, split.train, 0, split.train.size()));
    }
    if (!model.target_scaler.fitted) {
        model.target_scaler = nn::Scaler::fit(
            nn::ScalerKind::minmax,
            detail::gather_rows(y, split.train, 0, split.train.size()), -1.0, 1.0);
    }
    const Matrix xs = model.input_scaler.apply(x);
    const Matrix ys = model.target_scaler.apply(y);

    auto slots = model.encoder.param_slots();
    {
        auto est_slots = model.est_head.param_slots();
        slots.insert(slots.end(), est_slots.begin(), est_slots.end());
    }
    nn::Optimizer opt(cfg.optimizer);

    TrainHistory history;
    std::vector<Eigen::Index> train_idx = split.train;
    Rng dropout_rng(mix_seed(cfg.seed, 0xD207));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        detail::EpochTimer timer;
        detail::shuffle_indices(train_idx, mix_seed(cfg.seed, 0xE000 + epoch));
        double total_loss = 0.0;
        for (std::size_t begin = 0; begin < train_idx.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(cfg.batch_size), train_idx.size());
            const Matrix xb = detail::gather_rows(xs, train_idx, begin, end);
            const Matrix yb = detail::gather_rows(ys, train_idx, begin, end);
            const Matrix enc = model.encoder.forward(xb, nn::Mode::train, dropout_rng);
            const Matrix out = model.est_head.forward(enc, nn::Mode::train, dropout_rng);
            const nn::LossValue loss = nn::loss_mse(yb, out);
            model.encoder.backward(model.est_head.backward(loss.grad));
            opt.step(slots);
            total_loss += loss.value * static_cast<double>(end - begin);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = "pretrain";
        rec.train_loss = total_loss / static_cast<double>(train_idx.size());
        if (!split.val.empty()) {
            const Matrix xv = detail::gather_rows(xs, split.val, 0, split.val.size());
            const Matrix yv = detail::gather_rows(ys, split.val, 0, split.val.size());
            const Matrix pred = model.est_head.infer(model.encoder.infer(xv));
            rec.val_loss = nn::loss_mse(yv, pred).value;
            rec.val_metric = detail::r_squared(yv, pred);
        } else {
            rec.val_loss = std::numeric_limits<double>::quiet_NaN();
            rec.val_metric = std::numeric_limits<double>::quiet_NaN();
        }
        rec.wall_ms = timer.ms();
        history.epochs.push_back(rec);
    }
    return history;
}

/// Joint encoder + confidence-head training with BCE. The schedule for the
/// kinematic confidence variant, which has no matching-width Jacobian
/// dataset to cycle against.
inline TrainHistory train_confidence(CombinedModel& model, const Matrix& features,
                                     const Matrix& labels, const TrainConfig& cfg) {
    cfg.validate();
    if (features.cols() != model.input_dim)
        throw WidthMismatch("dataset width does not match model input");
    if (labels.cols() != 1) throw WidthMismatch("confidence labels must have one column");
    if (features.rows() == 0) throw EmptyDataset("empty confidence dataset");

    const detail::Split split = detail::make_split(features.rows(), cfg.validation_split,
                                                   mix_seed(cfg.seed, 0x5917));
    if (!model.input_scaler.fitted) {
        model.input_scaler = nn::Scaler::fit(
            nn::ScalerKind::standardize,
            detail::gather_rows(features, split.train, 0, split.train.size()));
    }
    const Matrix xs = model.input_scaler.apply(features);

    auto slots = model.encoder.param_slots();
    {
        auto conf_slots = model.conf_head.param_slots();
        slots.insert(slots.end(), conf_slots.begin(), conf_slots.end());
    }
    nn::Optimizer opt(cfg.optimizer);

    TrainHistory history;
    std::vector<Eigen::Index> train_idx = split.train;
    Rng dropout_rng(mix_seed(cfg.seed, 0xD20A));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        detail::EpochTimer timer;
        detail::shuffle_indices(train_idx, mix_seed(cfg.seed, 0xF000 + epoch));
        double total_loss = 0.0;
        for (std::size_t begin = 0; begin < train_idx.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(cfg.batch_size), train_idx.size());
            const Matrix xb = detail::gather_rows(xs, train_idx, begin, end);
            const Matrix yb = detail::gather_rows(labels, train_idx, begin, end);
            const Matrix enc = model.encoder.forward(xb, nn::Mode::train, dropout_rng);
            const Matrix out = model.conf_head.forward(enc, nn::Mode::train, dropout_rng);
            const nn::LossValue loss = nn::loss_bce(yb, out);
            model.encoder.backward(model.conf_head.backward(loss.grad));
            opt.step(slots);
            total_loss += loss.value * static_cast<double>(end - begin);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = "conf_joint";
        rec.train_loss = total_loss / static_cast<double>(train_idx.size());
        if (!split.val.empty()) {
            const Matrix xv = detail::gather_rows(xs, split.val, 0, split.val.size());
            const Matrix yv = detail::gather_rows(labels, split.val, 0, split.val.size());
            const Matrix score = model.conf_head.infer(model.encoder.infer(xv));
            rec.val_loss = nn::loss_bce(yv, score).value;
            rec.val_metric = detail::accuracy_at_half(yv, score);
        } else {
            rec.val_loss = std::numeric_limits<double>::quiet_NaN();
            rec.val_metric = std::numeric_limits<double>::quiet_NaN();
        }
        rec.wall_ms = timer.ms();
        history.epochs.push_back(rec);
    }
    return history;
}

/// Alternating schedule: conf_passes confidence epochs with the encoder
/// frozen (inference mode, no parameter or running-stat updates), then
/// est_passes estimation epochs with the encoder unfrozen, repeated until
/// cfg.epochs phase-epochs are spent.
inline TrainHistory train_cycle(CombinedModel& model, const Matrix& conf_features,
                                const Matrix& conf_labels, const Matrix& jacob_features,
                                const Matrix& jacob_labels, const TrainConfig& cfg) {
    cfg.validate();
    if (conf_features.cols() != model.input_dim || jacob_features.cols() != model.input_dim)
        throw WidthMismatch("dataset width does not match model input");
    if (conf_labels.cols() != 1) throw WidthMismatch("confidence labels must have one column");

    Matrix jx, jy;
    drop_sentinel_rows(jacob_features, jacob_labels, jx, jy);
    if (jx.rows() == 0) throw EmptyDataset("no rows with a Jacobian solution");
    if (jy.cols() != model.est_head_outputs())
        throw WidthMismatch("label width does not match estimation head");

    const detail::Split conf_split = detail::make_split(
        conf_features.rows(), cfg.validation_split, mix_seed(cfg.seed, 0xC0DE));
    const detail::Split jacob_split =
        detail::make_split(jx.rows(), cfg.validation_split, mix_seed(cfg.seed, 0x1ACB));

    if (!model.input_scaler.fitted) {
        model.input_scaler = nn::Scaler::fit(
            nn::ScalerKind::standardize,
            detail::gather_rows(conf_features, conf_split.train, 0, conf_split.train.size()));
    }
    if (!model.target_scaler.fitted) {
        model.target_scaler = nn::Scaler::fit(
            nn::ScalerKind::minmax,
            detail::gather_rows(jy, jacob_split.train, 0, jacob_split.train.size()), -1.0, 1.0);
    }
    const Matrix conf_xs = model.input_scaler.apply(conf_features);
    const Matrix jacob_xs = model.input_scaler.apply(jx);
    const Matrix jacob_ys = model.target_scaler.apply(jy);

    auto conf_slots = model.conf_head.param_slots();
    auto est_slots = model.encoder.param_slots();
    {
        auto tail = model.est_head.param_slots();
        est_slots.insert(est_slots.end(), tail.begin(), tail.end());
    }
    nn::Optimizer conf_opt(cfg.optimizer);
    nn::Optimizer est_opt(cfg.optimizer);

    TrainHistory history;
    std::vector<Eigen::Index> conf_idx = conf_split.train;
    std::vector<Eigen::Index> jacob_idx = jacob_split.train;
    Rng dropout_rng(mix_seed(cfg.seed, 0xD20C));
    const int cycle_len = cfg.conf_passes + cfg.est_passes;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        detail::EpochTimer timer;
        const bool conf_phase = (epoch - 1) % cycle_len < cfg.conf_passes;
        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = conf_phase ? "conf" : "est";

        if (conf_phase) {
            detail::shuffle_indices(conf_idx, mix_seed(cfg.seed, 0xA000 + epoch));
            double total_loss = 0.0;
            for (std::size_t begin = 0; begin < conf_idx.size();
                 begin += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t end = std::min(
                    begin + static_cast<std::size_t>(cfg.batch_size), conf_idx.size());
                const Matrix xb = detail::gather_rows(conf_xs, conf_idx, begin, end);
                const Matrix yb = detail::gather_rows(conf_labels, conf_idx, begin, end);
                // frozen encoder: inference mode, gradients never reach it
                const Matrix enc = model.encoder.infer(xb);
                const Matrix out = model.conf_head.forward(enc, nn::Mode::train, dropout_rng);
                const nn::LossValue loss = nn::loss_bce(yb, out);
                model.conf_head.backward(loss.grad);
                conf_opt.step(conf_slots);
                total_loss += loss.value * static_cast<double>(end - begin);
            }
            rec.train_loss = total_loss / static_cast<double>(conf_idx.size());
            if (!conf_split.val.empty()) {
                const Matrix xv =
                    detail::gather_rows(conf_xs, conf_split.val, 0, conf_split.val.size());
                const Matrix yv =
                    detail::gather_rows(conf_labels, conf_split.val, 0, conf_split.val.size());
                const Matrix score = model.conf_head.infer(model.encoder.infer(xv));
                rec.val_loss = nn::loss_bce(yv, score).value;
                rec.val_metric = detail::accuracy_at_half(yv, score);
            }
        } else {
            detail::shuffle_indices(jacob_idx, mix_seed(cfg.seed, 0xB000 + epoch));
            double total_loss = 0.0;
            for (std::size_t begin = 0; begin < jacob_idx.size();
                 begin += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t end = std::min(
                    begin + static_cast<std::size_t>(cfg.batch_size), jacob_idx.size());
                const Matrix xb = detail::gather_rows(jacob_xs, jacob_idx, begin, end);
                const Matrix yb = detail::gather_rows(jacob_ys, jacob_idx, begin, end);
                const Matrix enc = model.encoder.forward(xb, nn::Mode::train, dropout_rng);
                const Matrix out = model.est_head.forward(enc, nn::Mode::train, dropout_rng);
                const nn::LossValue loss = nn::loss_mse(yb, out);
                model.encoder.backward(model.est_head.backward(loss.grad));
                est_opt.step(est_slots);
                total_loss += loss.value * static_cast<double>(end - begin);
            }
            rec.train_loss = total_loss / static_cast<double>(jacob_idx.size());
            if (!jacob_split.val.empty()) {
                const Matrix xv =
                    detail::gather_rows(jacob_xs, jacob_split.val, 0, jacob_split.val.size());
                const Matrix yv =
                    detail::gather_rows(jacob_ys, jacob_split.val, 0, jacob_split.val.size());
                const Matrix pred = model.est_head.infer(model.encoder.infer(xv));
                rec.val_loss = nn::loss_mse(yv, pred).value;
                rec.val_metric = detail::r_squared(yv, pred);
            }
        }
        rec.wall_ms = timer.ms();
        history.epochs.push_back(rec);
    }
    return history;
}

struct Prediction {
    double confidence = 0.0;
    std::optional<Eigen::Matrix<double, 6, 6>> jacobian;
};

/// Gated prediction: the estimation head runs only on rows whose confidence
/// clears the threshold; its output is un-scaled and reshaped row-major.
inline std::vector<Prediction> predict(CombinedModel& model, const Matrix& features) {
    if (features.cols() != model.input_dim)
        throw WidthMismatch("feature width does not match model input");
    const Matrix xs = model.scaled_inputs(features);
    const Matrix enc = model.encoder.infer(xs);
    const Matrix conf = model.conf_head.infer(enc);

    std::vector<Prediction> out(static_cast<std::size_t>(features.rows()));
    std::vector<Eigen::Index> gated;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        out[static_cast<std::size_t>(i)].confidence = conf(i, 0);
        if (conf(i, 0) >= model.threshold) gated.push_back(i);
    }
    if (!gated.empty()) {
        Matrix enc_gated(static_cast<Eigen::Index>(gated.size()), enc.cols());
        for (std::size_t i = 0; i < gated.size(); ++i)
            enc_gated.row(static_cast<Eigen::Index>(i)) = enc.row(gated[i]);
        Matrix est = model.est_head.infer(enc_gated);
        if (model.target_scaler.fitted) est = model.target_scaler.invert(est);
        if (est.cols() != 36) throw ShapeMismatch("estimation head does not emit 36 values");
        for (std::size_t i = 0; i < gated.size(); ++i) {
            Eigen::Matrix<double, 6, 6> j;
            for (int r = 0; r < 6; ++r)
                for (int c = 0; c < 6; ++c) j(r, c) = est(static_cast<Eigen::Index>(i), r * 6 + c);
            out[static_cast<std::size_t>(gated[i])].jacobian = j;
        }
    }
    return out;
}

/// Batched confidence scores only (no gating); the workspace generator and
/// the benchmark harness consume this.
inline Vector confidence_scores(CombinedModel& model, const Matrix& features) {
    if (features.cols() != model.input_dim)
        throw WidthMismatch("feature width does not match model input");
    return model.conf_head.infer(model.encoder.infer(model.scaled_inputs(features))).col(0);
}

/// Batched un-gated estimation outputs in target units.
inline Matrix estimate_jacobians(CombinedModel& model, const Matrix& features) {
    if (features.cols() != model.input_dim)
        throw WidthMismatch("feature width does not match model input");
    Matrix est = model.est_head.infer(model.encoder.infer(model.scaled_inputs(features)));
    if (model.target_scaler.fitted) est = model.target_scaler.invert(est);
    return est;
}

}  // namespace armspace
