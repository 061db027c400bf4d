#include <CLI11.hpp>

#include <i2ipr/i2ipr.hpp>

namespace {

struct CommonOpts {
    std::string config_path;
    std::string data_dir;
    std::string model_path;
    std::string out_path;
    bool oracle = false;

    // targeted overrides; sentinel = not set
    double alpha = -1.0;
    int T = 0;
    int p = 0;
    int64_t seed = -1;
    std::string transform;
    bool shift_search = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_data) {
    cmd->add_option("--config", o.config_path, "flat key = value config file");
    if (needs_data) cmd->add_option("--data", o.data_dir, "dataset directory")->required();
    cmd->add_option("--alpha", o.alpha, "noise scale override (8-bit units)");
    cmd->add_option("--T", o.T, "refinement steps override");
    cmd->add_option("--p", o.p, "aggregation runs override");
    cmd->add_option("--seed", o.seed, "master seed override");
    cmd->add_option("--transform", o.transform, "aggregation transform: rot180 | flip_h | flip_v");
    cmd->add_flag("--shift-search", o.shift_search, "diagnostic circular-shift search in eval");
}

i2ipr::PipelineConfig make_config(const CommonOpts& o) {
    i2ipr::PipelineConfig cfg =
        o.config_path.empty() ? i2ipr::PipelineConfig{} : i2ipr::load_config(o.config_path);
    if (o.alpha >= 0.0) cfg.alpha = o.alpha;
    if (o.T > 0) cfg.refine.T = o.T;
    if (o.p > 0) cfg.aggregate_p = o.p;
    if (o.seed >= 0) cfg.seed = static_cast<uint64_t>(o.seed);
    if (!o.transform.empty()) cfg.transform = i2ipr::detail::parse_transform(o.transform);
    if (o.shift_search) cfg.shift_search = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase retrieval toolkit: classical solvers, learned refinement, aggregation"};
    app.require_subcommand(1);

    CommonOpts synth_o, init_o, train_o, recon_o, agg_o, cal_o, eval_o, run_o;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    add_common(synth, synth_o, false);
    synth->add_option("--out", synth_o.out_path, "output corpus directory")->required();

    CLI::App* init = app.add_subcommand("init", "run the multi-restart initialization per record");
    add_common(init, init_o, true);

    CLI::App* train = app.add_subcommand("train-denoiser", "train the denoiser on a corpus");
    add_common(train, train_o, true);
    train->add_option("--model", train_o.model_path, "output model path")->required();

    CLI::App* recon = app.add_subcommand("reconstruct", "iterative refinement per record");
    add_common(recon, recon_o, true);
    recon->add_option("--model", recon_o.model_path, "trained model path");
    recon->add_flag("--oracle-denoiser", recon_o.oracle, "test hook: denoiser returns the target");

    CLI::App* agg = app.add_subcommand("aggregate", "transform-augmented multi-run aggregation");
    add_common(agg, agg_o, true);
    agg->add_option("--model", agg_o.model_path, "trained model path")->required();

    CLI::App* cal = app.add_subcommand("calibrate", "fit isotonic calibration of ensemble variances");
    add_common(cal, cal_o, true);
    cal->add_option("--out", cal_o.out_path, "output file prefix")->required();

    CLI::App* eval = app.add_subcommand("eval", "per-record PSNR/SSIM CSV");
    add_common(eval, eval_o, true);
    eval->add_option("--out", eval_o.out_path, "output CSV path")->required();

    CLI::App* run = app.add_subcommand("run", "init + reconstruct (+ aggregate) + eval");
    add_common(run, run_o, true);
    run->add_option("--model", run_o.model_path, "trained model path");
    run->add_flag("--oracle-denoiser", run_o.oracle, "test hook: denoiser returns the target");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return i2ipr::cmd_synth(make_config(synth_o), synth_o.out_path);
        if (init->parsed()) return i2ipr::cmd_init(make_config(init_o), init_o.data_dir);
        if (train->parsed())
            return i2ipr::cmd_train(make_config(train_o), train_o.data_dir, train_o.model_path);
        if (recon->parsed()) {
            i2ipr::ReconstructBackend backend;
            backend.oracle = recon_o.oracle;
            i2ipr::DenoiserModel model;
            if (!recon_o.model_path.empty()) {
                model = i2ipr::read_i2dn(recon_o.model_path);
                backend.model = &model;
            }
            return i2ipr::cmd_reconstruct(make_config(recon_o), recon_o.data_dir, backend);
        }
        if (agg->parsed()) {
            i2ipr::DenoiserModel model = i2ipr::read_i2dn(agg_o.model_path);
            return i2ipr::cmd_aggregate(make_config(agg_o), agg_o.data_dir, model);
        }
        if (cal->parsed()) return i2ipr::cmd_calibrate(make_config(cal_o), cal_o.data_dir, cal_o.out_path);
        if (eval->parsed()) return i2ipr::cmd_eval(make_config(eval_o), eval_o.data_dir, eval_o.out_path);
        if (run->parsed()) {
            i2ipr::ReconstructBackend backend;
            backend.oracle = run_o.oracle;
            i2ipr::DenoiserModel model;
            if (!run_o.model_path.empty()) {
                model = i2ipr::read_i2dn(run_o.model_path);
                backend.model = &model;
            }
            return i2ipr::cmd_run(make_config(run_o), run_o.data_dir, backend);
        }
    } catch (const i2ipr::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
