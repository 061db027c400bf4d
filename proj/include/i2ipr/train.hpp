#pragma once

#include "dataset.hpp"
#include "denoiser.hpp"

namespace i2ipr {

struct TrainConfig {
    std::string dataset_path;
    int epochs = 20;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double warmup_fraction = 0.1;
    uint64_t seed = 1;
    std::vector<double> sigma_schedule; // indexed 0..trained_T; empty = all 1
    int trained_T = 32;
    int hidden_channels = 16;
    int layers = 4;
    int kernel_size = 3;
    int timestep_embed_dim = 16;

    double sigma_at(int i) const {
        if (sigma_schedule.empty()) return 1.0;
        return sigma_schedule.at(static_cast<size_t>(i));
    }

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: counts must be positive");
        if (learning_rate < 0.0 || weight_decay < 0.0) throw std::invalid_argument("TrainConfig: negative rate");
        if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
            throw std::invalid_argument("TrainConfig: warmup_fraction out of [0,1)");
        if (trained_T < 1) throw std::invalid_argument("TrainConfig: trained_T < 1");
        if (!sigma_schedule.empty() && static_cast<int>(sigma_schedule.size()) != trained_T + 1)
            throw std::invalid_argument("TrainConfig: sigma_schedule must have trained_T+1 entries");
    }
};

struct TrainReport {
    std::vector<double> train_loss; // per epoch
    std::vector<double> val_loss;   // per epoch, val_loss[0] is pre-training
    int best_epoch = 0;             // 0 means the untrained model won
};

namespace detail {

inline double forward_loss(const DenoiserModel& model, const DegradationSample& sample) {
    DenoiserTape tape = denoiser_forward(model, sample.x_t, sample.t_index, sample.inits);
    const std::vector<double> target = window_of(sample.target);
    double loss = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        const double d = tape.out_window[i] - target[i];
        loss += d * d / target.size();
    }
    return loss;
}

// Deterministic per-record sample used for validation: the timestep and noise
// seed are derived from the record id, not the training RNG stream.
inline DegradationSample validation_sample(const DatasetRecord& rec, const TrainConfig& cfg) {
    const uint64_t h = stable_hash(rec.id);
    const int t_index = 1 + static_cast<int>(h % static_cast<uint64_t>(cfg.trained_T));
    const double t = static_cast<double>(t_index) / cfg.trained_T;
    DegradationSample s = degrade(rec.target, rec.ensemble.estimates, t, cfg.sigma_at(t_index),
                                  derive_seed(cfg.seed, h | 1));
    s.t_index = t_index;
    return s;
}

inline double he_scale(const DenoiserArch& arch, int layer) {
    const double fan_in = static_cast<double>(arch.in_channels_of(layer)) *
                          arch.kernel_size * arch.kernel_size;
    return std::sqrt(2.0 / fan_in);
}

// Conv stack gets scaled normal init with a zeroed output layer, so the
// untrained model already returns the mean of its inputs; FiLM heads start at
// identity scale and zero shift.
inline DenoiserModel init_model(int k, const TrainConfig& cfg) {
    DenoiserModel model = DenoiserModel::zeros(k, cfg.hidden_channels, cfg.layers,
                                               cfg.kernel_size, cfg.timestep_embed_dim, cfg.trained_T);
    const ParamLayout layout(model.arch);
    Rng rng(derive_seed(cfg.seed, 0xA11));
    for (int l = 0; l < model.arch.layers - 1; ++l) {
        const double scale = he_scale(model.arch, l);
        const size_t count = static_cast<size_t>(model.arch.out_channels_of(l)) *
                             model.arch.in_channels_of(l) * model.arch.kernel_size * model.arch.kernel_size;
        for (size_t i = 0; i < count; ++i) model.params[layout.conv_w[l] + i] = scale * rng.normal();
    }
    const int e = model.arch.timestep_embed_dim;
    for (int i = 0; i < e * e; ++i) model.params[layout.embed_w + i] = 0.1 * rng.normal();
    return model;
}

} // namespace detail

// Decoupled-weight-decay descent with cosine-annealed learning rate and linear
// warmup; returns the snapshot with the best validation loss.
inline DenoiserModel train(const TrainConfig& cfg, const std::vector<DatasetRecord>& records,
                           TrainReport* report = nullptr) {
    cfg.validate();
    if (records.empty()) throw std::invalid_argument("train: empty dataset");
    const int k = static_cast<int>(records.front().ensemble.estimates.size());
    if (k < 1) throw std::invalid_argument("train: records carry no crude estimates");
    for (const DatasetRecord& r : records)
        if (static_cast<int>(r.ensemble.estimates.size()) != k)
            throw std::invalid_argument("train: inconsistent ensemble sizes");

    std::vector<size_t> train_idx, val_idx;
    for (size_t i = 0; i < records.size(); ++i)
        (is_validation_record(records[i].id) ? val_idx : train_idx).push_back(i);
    if (train_idx.empty()) train_idx = val_idx;
    if (val_idx.empty()) val_idx = train_idx; // tiny datasets validate in-sample

    DenoiserModel model = detail::init_model(k, cfg);
    std::vector<double> m1(model.params.size(), 0.0), m2(model.params.size(), 0.0);
    const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;

    const int steps_per_epoch =
        static_cast<int>((train_idx.size() + cfg.batch_size - 1) / cfg.batch_size);
    const long total_steps = static_cast<long>(steps_per_epoch) * cfg.epochs;
    const long warmup_steps = std::lround(cfg.warmup_fraction * total_steps);

    auto lr_at = [&](long step) {
        if (warmup_steps > 0 && step < warmup_steps)
            return cfg.learning_rate * (step + 1) / static_cast<double>(warmup_steps);
        const double progress = (total_steps == warmup_steps)
                                    ? 1.0
                                    : static_cast<double>(step - warmup_steps) / (total_steps - warmup_steps);
        return cfg.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
    };

    auto val_loss_of = [&](const DenoiserModel& m) {
        double loss = 0.0;
        for (size_t i : val_idx) loss += detail::forward_loss(m, detail::validation_sample(records[i], cfg));
        return loss / val_idx.size();
    };

    TrainReport local;
    TrainReport& rep = report ? *report : local;
    rep.val_loss.push_back(val_loss_of(model));
    DenoiserModel best = model;
    double best_val = rep.val_loss[0];
    rep.best_epoch = 0;

    Rng rng(derive_seed(cfg.seed, 0x7121));
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<size_t> order = train_idx;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_u64() % i]);

        double epoch_loss = 0.0;
        for (int s = 0; s < steps_per_epoch; ++s) {
            std::vector<DegradationSample> batch;
            for (int b = 0; b < cfg.batch_size; ++b) {
                const DatasetRecord& rec = records[order[(static_cast<size_t>(s) * cfg.batch_size + b) % order.size()]];
                const int t_index = 1 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(cfg.trained_T));
                DegradationSample sample =
                    degrade(rec.target, rec.ensemble.estimates, static_cast<double>(t_index) / cfg.trained_T,
                            cfg.sigma_at(t_index), rng.next_u64());
                sample.t_index = t_index;
                batch.push_back(std::move(sample));
            }
            auto [loss, grad] = loss_and_grad(model, batch);
            epoch_loss += loss / steps_per_epoch;
            const double lr = lr_at(step);
            ++step;
            for (size_t j = 0; j < model.params.size(); ++j) {
                m1[j] = b1 * m1[j] + (1.0 - b1) * grad[j];
                m2[j] = b2 * m2[j] + (1.0 - b2) * grad[j] * grad[j];
                const double mhat = m1[j] / (1.0 - std::pow(b1, step));
                const double vhat = m2[j] / (1.0 - std::pow(b2, step));
                model.params[j] -= lr * (mhat / (std::sqrt(vhat) + adam_eps) + cfg.weight_decay * model.params[j]);
            }
        }
        rep.train_loss.push_back(epoch_loss);
        rep.val_loss.push_back(val_loss_of(model));
        if (rep.val_loss.back() < best_val) {
            best_val = rep.val_loss.back();
            best = model;
            rep.best_epoch = epoch + 1;
        }
    }
    return best;
}

inline DenoiserModel train(const TrainConfig& cfg, TrainReport* report = nullptr) {
    cfg.validate();
    if (cfg.dataset_path.empty()) throw std::invalid_argument("train: no dataset path");
    std::vector<DatasetRecord> records;
    for (const std::string& id : read_manifest(cfg.dataset_path))
        records.push_back(read_record(cfg.dataset_path, id));
    return train(cfg, records, report);
}

} // namespace i2ipr
