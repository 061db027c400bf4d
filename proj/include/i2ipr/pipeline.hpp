#pragma once

#include <iostream>
#include <map>

#include "aggregate.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "synth.hpp"
#include "train.hpp"
#include "uncertainty.hpp"

namespace i2ipr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything the CLI needs: nested module configs plus a master seed.
struct PipelineConfig {
    uint64_t seed = 1;
    double alpha = 0.0;
    SyntheticCorpusSpec synth;
    InitConfig init;
    TrainConfig train;
    RefinementConfig refine;
    int aggregate_p = 1;
    TransformKind transform = TransformKind::Rot180;
    bool shift_search = false;
};

namespace detail {

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

inline bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("bad boolean value: " + s);
}

inline TransformKind parse_transform(const std::string& s) {
    if (s == "rot180") return TransformKind::Rot180;
    if (s == "flip_h") return TransformKind::FlipH;
    if (s == "flip_v") return TransformKind::FlipV;
    throw ConfigError("unknown transform: " + s);
}

inline void apply_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "alpha") cfg.alpha = std::stod(value);
        else if (key == "synth.count") cfg.synth.count = std::stoi(value);
        else if (key == "synth.image_dim") cfg.synth.image_dim = std::stoi(value);
        else if (key == "synth.min_shapes") cfg.synth.min_shapes = std::stoi(value);
        else if (key == "synth.max_shapes") cfg.synth.max_shapes = std::stoi(value);
        else if (key == "synth.min_intensity") cfg.synth.min_intensity = std::stod(value);
        else if (key == "synth.max_intensity") cfg.synth.max_intensity = std::stod(value);
        else if (key == "init.restarts") cfg.init.restarts = std::stoi(value);
        else if (key == "init.explore_iters") cfg.init.explore_iters = std::stoi(value);
        else if (key == "init.keep") cfg.init.keep = std::stoi(value);
        else if (key == "init.refine_iters") cfg.init.refine_iters = std::stoi(value);
        else if (key == "init.hio_block") cfg.init.hio_block = std::stoi(value);
        else if (key == "init.aer_block") cfg.init.aer_block = std::stoi(value);
        else if (key == "solver.beta") cfg.init.solver.beta = std::stod(value);
        else if (key == "solver.zeta") cfg.init.solver.zeta = std::stod(value);
        else if (key == "solver.accel_period") cfg.init.solver.accel_period = std::stoi(value);
        else if (key == "solver.max_iters") cfg.init.solver.max_iters = std::stoi(value);
        else if (key == "train.epochs") cfg.train.epochs = std::stoi(value);
        else if (key == "train.batch_size") cfg.train.batch_size = std::stoi(value);
        else if (key == "train.learning_rate") cfg.train.learning_rate = std::stod(value);
        else if (key == "train.weight_decay") cfg.train.weight_decay = std::stod(value);
        else if (key == "train.warmup_fraction") cfg.train.warmup_fraction = std::stod(value);
        else if (key == "train.trained_T") cfg.train.trained_T = std::stoi(value);
        else if (key == "train.hidden_channels") cfg.train.hidden_channels = std::stoi(value);
        else if (key == "train.layers") cfg.train.layers = std::stoi(value);
        else if (key == "train.sigma") cfg.train.sigma_schedule = parse_double_list(value);
        else if (key == "refine.T") cfg.refine.T = std::stoi(value);
        else if (key == "refine.K") cfg.refine.K = std::stoi(value);
        else if (key == "refine.beta") cfg.refine.beta = std::stod(value);
        else if (key == "refine.sigma") cfg.refine.sigma = parse_double_list(value);
        else if (key == "refine.lambda") cfg.refine.lambda = parse_double_list(value);
        else if (key == "refine.final_projection") cfg.refine.final_projection = parse_bool(value);
        else if (key == "aggregate.p") cfg.aggregate_p = std::stoi(value);
        else if (key == "aggregate.transform") cfg.transform = parse_transform(value);
        else if (key == "eval.shift_search") cfg.shift_search = parse_bool(value);
        else throw ConfigError("unknown config key: " + key);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + key + ": " + value);
    }
}

inline std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

// Flat key = value config with '#' comments.
inline PipelineConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        detail::apply_key(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Subcommand bodies, shared between the CLI binary and the test harnesses.
// Exit codes: 0 success, 1 record failures, 2 configuration error.
// ---------------------------------------------------------------------------

inline uint64_t record_seed(const PipelineConfig& cfg, const std::string& id, uint64_t purpose) {
    return derive_seed(derive_seed(cfg.seed, purpose), stable_hash(id));
}

inline int cmd_synth(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log = std::cout) {
    cfg.synth.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> ids;
    std::ostringstream stats;
    stats.precision(17);
    stats << "id,seed,snr_db\n";
    for (int i = 0; i < cfg.synth.count; ++i) {
        DatasetRecord rec;
        rec.id = record_id(i);
        try {
            rec.target = synth_image(cfg.synth, i);
            const uint64_t meas_seed = record_seed(cfg, rec.id, 1);
            rec.meas = measure(rec.target, cfg.alpha, meas_seed);
            write_record(out_dir, rec);
            stats << rec.id << "," << meas_seed << "," << snr_db(rec.target, rec.meas) << "\n";
        } catch (const std::exception& e) {
            log << "synth failed at record " << i << ": " << e.what() << "\n";
            return 1;
        }
        ids.push_back(rec.id);
    }
    write_manifest(out_dir, ids);
    io::atomic_write(out_dir + "/synth_stats.csv", [&](std::ostream& os) { os << stats.str(); });
    log << "synth: wrote " << ids.size() << " records to " << out_dir << "\n";
    return 0;
}

inline int cmd_init(const PipelineConfig& cfg, const std::string& data_dir, std::ostream& log = std::cout) {
    cfg.init.validate();
    int failures = 0;
    for (const std::string& id : read_manifest(data_dir)) {
        try {
            DatasetRecord rec = read_record(data_dir, id, false);
            rec.ensemble = initialize(rec.meas, cfg.init, record_seed(cfg, id, 2), rec.target);
            // ground truth is available here, so fix the trivial-ambiguity
            // orientation of the ensemble against it; training pairs built
            // from this dataset then share one orientation
            align_ensemble(rec.ensemble, rec.target);
            write_ensemble(data_dir + "/" + id, rec.ensemble);
            log << "init " << id << ": best residual " << rec.ensemble.residuals.front() << "\n";
        } catch (const std::exception& e) {
            log << "init failed for " << id << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures ? 1 : 0;
}

inline int cmd_train(const PipelineConfig& cfg, const std::string& data_dir,
                     const std::string& model_path, std::ostream& log = std::cout) {
    TrainConfig tc = cfg.train;
    tc.dataset_path = data_dir;
    tc.seed = derive_seed(cfg.seed, 3);
    TrainReport report;
    DenoiserModel model = train(tc, &report);
    write_i2dn(model_path, model);
    log << "train: initial val loss " << report.val_loss.front() << ", best "
        << report.val_loss[report.best_epoch] << " at epoch " << report.best_epoch << "\n";
    return 0;
}

// Denoiser used for reconstruction: either a trained model or, behind a test
// flag, an oracle that returns the record's own target.
struct ReconstructBackend {
    const DenoiserModel* model = nullptr;
    bool oracle = false;
};

namespace detail {

inline ImageGrid reconstruct_record(const DatasetRecord& rec, const ReconstructBackend& backend,
                                    const RefinementConfig& rcfg) {
    if (backend.oracle) {
        DenoiserFn oracle = [&rec](const ImageGrid&, int, const std::vector<ImageGrid>&) {
            return rec.target;
        };
        return reconstruct(rec.meas, rec.ensemble, oracle, rcfg);
    }
    if (!backend.model) throw ConfigError("reconstruct: no model and no oracle flag");
    return reconstruct(rec.meas, rec.ensemble, *backend.model, rcfg);
}

} // namespace detail

inline int cmd_reconstruct(const PipelineConfig& cfg, const std::string& data_dir,
                           const ReconstructBackend& backend, std::ostream& log = std::cout) {
    cfg.refine.validate();
    int failures = 0;
    for (const std::string& id : read_manifest(data_dir)) {
        try {
            DatasetRecord rec = read_record(data_dir, id);
            RefinementConfig rcfg = cfg.refine;
            rcfg.seed = record_seed(cfg, id, 4);
            ImageGrid out = detail::reconstruct_record(rec, backend, rcfg);
            write_igrd(data_dir + "/" + id + "/recon.igrd", out);
        } catch (const std::exception& e) {
            log << "reconstruct failed for " << id << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures ? 1 : 0;
}

inline int cmd_aggregate(const PipelineConfig& cfg, const std::string& data_dir,
                         const DenoiserModel& model, std::ostream& log = std::cout) {
    cfg.refine.validate();
    if (cfg.aggregate_p < 1) throw ConfigError("aggregate: p must be >= 1");
    const EquivariantTransform t{cfg.transform};
    int failures = 0;
    for (const std::string& id : read_manifest(data_dir)) {
        try {
            DatasetRecord rec = read_record(data_dir, id);
            RefinementConfig rcfg = cfg.refine;
            rcfg.seed = record_seed(cfg, id, 5);
            EnsembleResult res = aggregate(rec.meas, rec.ensemble, model, rcfg, cfg.aggregate_p, t);
            const std::string dir = data_dir + "/" + id;
            write_igrd(dir + "/agg_mean.igrd", res.mean);
            for (size_t q = 0; q < res.samples.size(); ++q) {
                std::ostringstream name;
                name << "agg_sample_" << std::setw(2) << std::setfill('0') << q << ".igrd";
                write_igrd(dir + "/" + name.str(), res.samples[q]);
            }
            UncertaintyReport unc = empirical_variance(res.samples);
            io::atomic_write(dir + "/agg_variance.txt", [&](std::ostream& os) {
                os.precision(17);
                os << unc.predicted_variance << "\n";
            });
        } catch (const std::exception& e) {
            log << "aggregate failed for " << id << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures ? 1 : 0;
}

// Per-record metrics for whichever estimate exists (aggregate mean preferred).
inline int cmd_eval(const PipelineConfig& cfg, const std::string& data_dir,
                    const std::string& out_csv, std::ostream& log = std::cout) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "id,psnr,ssim,ambiguity,shift_search\n";
    int failures = 0;
    for (const std::string& id : read_manifest(data_dir)) {
        try {
            const std::string dir = data_dir + "/" + id;
            ImageGrid target = read_igrd(dir + "/target.igrd");
            const std::string agg = dir + "/agg_mean.igrd";
            const std::string rec = dir + "/recon.igrd";
            ImageGrid est = std::filesystem::exists(agg) ? read_igrd(agg) : read_igrd(rec);
            auto [best, report] = resolve_ambiguity(est, target, cfg.shift_search);
            csv << id << "," << report.psnr_db << "," << report.ssim << ","
                << (report.ambiguity_used == Ambiguity::Rot180 ? "rot180" : "identity") << ","
                << (report.shift_search_used ? "true" : "false") << "\n";
        } catch (const std::exception& e) {
            log << "eval failed for " << id << ": " << e.what() << "\n";
            ++failures;
        }
    }
    io::atomic_write(out_csv, [&](std::ostream& os) { os << csv.str(); });
    return failures ? 1 : 0;
}

// Fits the isotonic map from predicted ensemble variances to realized squared
// errors and reports coverage before and after calibration.
inline int cmd_calibrate(const PipelineConfig& cfg, const std::string& data_dir,
                         const std::string& out_prefix, std::ostream& log = std::cout) {
    std::vector<std::pair<double, double>> pairs; // (predicted variance, mse)
    for (const std::string& id : read_manifest(data_dir)) {
        const std::string dir = data_dir + "/" + id;
        ImageGrid target = read_igrd(dir + "/target.igrd");
        ImageGrid mean = read_igrd(dir + "/agg_mean.igrd");
        std::ifstream vs(dir + "/agg_variance.txt");
        double predicted = 0.0;
        if (!(vs >> predicted)) throw std::runtime_error("missing variance for " + id);
        auto [best, report] = resolve_ambiguity(mean, target, cfg.shift_search);
        double mse = 0.0;
        size_t count = 0;
        for (size_t i = 0; i < best.values.size(); ++i)
            if (best.in_support(i)) {
                const double d = best.values[i] - target.values[i];
                mse += d * d;
                ++count;
            }
        pairs.emplace_back(predicted, mse / count);
    }
    if (pairs.size() < 2) {
        log << "calibrate: need at least 2 records\n";
        return 1;
    }
    CalibrationModel model = fit_isotonic(pairs);
    write_calibration(out_prefix + "_calibration.csv", model);

    const std::vector<double> levels = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::vector<std::pair<double, double>> raw, cal;
    for (const auto& [pred, mse] : pairs) {
        const double err = std::sqrt(mse);
        raw.emplace_back(pred, err);
        cal.emplace_back(calibrate(model, pred), err);
    }
    write_coverage_csv(out_prefix + "_coverage_raw.csv", coverage_curve(raw, levels));
    write_coverage_csv(out_prefix + "_coverage_calibrated.csv", coverage_curve(cal, levels));
    return 0;
}

// Full pipeline on an existing corpus: init, reconstruct, optional aggregate,
// eval.
inline int cmd_run(const PipelineConfig& cfg, const std::string& data_dir,
                   const ReconstructBackend& backend, std::ostream& log = std::cout) {
    int rc = cmd_init(cfg, data_dir, log);
    if (rc == 0) rc = cmd_reconstruct(cfg, data_dir, backend, log);
    if (rc == 0 && cfg.aggregate_p >= 1 && backend.model)
        rc = cmd_aggregate(cfg, data_dir, *backend.model, log);
    const int eval_rc = cmd_eval(cfg, data_dir, data_dir + "/metrics.csv", log);
    return rc != 0 ? rc : eval_rc;
}

} // namespace i2ipr
