#include <catch_amalgamated.hpp>

#include <i2ipr/i2ipr.hpp>

using namespace i2ipr;

namespace {

ImageGrid random_image(int n, uint64_t seed) {
    ImageGrid g = ImageGrid::zeros(n);
    Rng rng(seed);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g.at(r, c) = rng.uniform();
    return g;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("i2ipr_test_" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str() const { return path.string(); }
};

// Desk-scale config: tiny images, short solver runs, oracle-friendly.
PipelineConfig desk_config() {
    PipelineConfig cfg;
    cfg.seed = 7;
    cfg.alpha = 0.0;
    cfg.synth.count = 3;
    cfg.synth.image_dim = 12;
    cfg.synth.seed = 7;
    cfg.init.restarts = 6;
    cfg.init.explore_iters = 20;
    cfg.init.keep = 2;
    cfg.init.refine_iters = 100;
    cfg.refine.T = 2;
    cfg.refine.K = 5;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 2;
    cfg.train.trained_T = 4;
    cfg.train.hidden_channels = 4;
    cfg.train.layers = 3;
    return cfg;
}

} // namespace

TEST_CASE("IGRD round-trips byte-exactly") {
    TempDir dir("igrd");
    ImageGrid g = random_image(8, 1);
    const std::string p1 = dir.str() + "/a.igrd", p2 = dir.str() + "/b.igrd";
    write_igrd(p1, g);
    ImageGrid back = read_igrd(p1);
    CHECK(back.values == g.values);
    CHECK(back.inner_dim == g.inner_dim);
    write_igrd(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("I2IM round-trips byte-exactly") {
    TempDir dir("i2im");
    ImageGrid g = random_image(8, 2);
    MagnitudeMeasurements m = measure(g, 3.0, 42);
    const std::string p1 = dir.str() + "/a.i2im", p2 = dir.str() + "/b.i2im";
    write_i2im(p1, m);
    MagnitudeMeasurements back = read_i2im(p1);
    CHECK(back.magnitudes == m.magnitudes);
    CHECK(back.alpha == m.alpha);
    CHECK(back.seed == m.seed);
    write_i2im(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("bad magic is rejected") {
    TempDir dir("magic");
    ImageGrid g = random_image(4, 3);
    write_igrd(dir.str() + "/a.igrd", g);
    CHECK_THROWS(read_i2im(dir.str() + "/a.igrd"));
    CHECK_THROWS(read_igrd(dir.str() + "/missing.igrd"));
}

TEST_CASE("PGM import/export with 8-bit quantization") {
    TempDir dir("pgm");
    ImageGrid g = random_image(8, 4);
    const std::string p1 = dir.str() + "/a.pgm", p2 = dir.str() + "/b.pgm";
    write_pgm(p1, g);
    ImageGrid back = read_pgm(p1);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            CHECK(std::abs(back.at(r, c) - g.at(r, c)) <= 0.5 / 255.0 + 1e-12);
    write_pgm(p2, back);
    CHECK(slurp(p1) == slurp(p2)); // quantization is idempotent
}

TEST_CASE("trace CSV export") {
    TempDir dir("trace");
    write_trace_csv(dir.str() + "/t.csv", {1.0, 0.5, 0.25});
    std::ifstream is(dir.str() + "/t.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "iter,residual");
    std::getline(is, line);
    CHECK(line == "1,1");
}

TEST_CASE("ensemble directory round-trip") {
    TempDir dir("ens");
    InitEnsemble ens;
    ens.estimates = {random_image(6, 5), random_image(6, 6)};
    ens.residuals = {0.25, 0.5};
    ens.seeds = {11, 12};
    ens.mean = axpby(0.5, ens.estimates[0], 0.5, ens.estimates[1]);
    write_ensemble(dir.str(), ens);
    InitEnsemble back = read_ensemble(dir.str());
    REQUIRE(back.estimates.size() == 2);
    CHECK(back.estimates[0].values == ens.estimates[0].values);
    CHECK(back.residuals == ens.residuals);
    CHECK(back.seeds == ens.seeds);
    CHECK(frame_distance(back.mean, ens.mean) < 1e-15);
}

TEST_CASE("validation split is deterministic and roughly a tenth") {
    int val = 0;
    for (int i = 0; i < 1000; ++i)
        if (is_validation_record(record_id(i))) ++val;
    CHECK(val > 40);
    CHECK(val < 250);
    CHECK(is_validation_record("rec_00000") == is_validation_record("rec_00000"));
}

TEST_CASE("config parser handles the full key set and rejects unknowns") {
    TempDir dir("cfg");
    const std::string path = dir.str() + "/run.cfg";
    {
        std::ofstream os(path);
        os << "# comment line\n"
           << "seed = 99\n"
           << "alpha = 3.5\n"
           << "synth.count = 4   # trailing comment\n"
           << "init.keep = 3\n"
           << "solver.beta = 0.8\n"
           << "refine.T = 8\n"
           << "refine.lambda = 0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8\n"
           << "aggregate.p = 2\n"
           << "aggregate.transform = flip_h\n"
           << "eval.shift_search = true\n";
    }
    PipelineConfig cfg = load_config(path);
    CHECK(cfg.seed == 99);
    CHECK(cfg.alpha == 3.5);
    CHECK(cfg.synth.count == 4);
    CHECK(cfg.init.keep == 3);
    CHECK(cfg.init.solver.beta == 0.8);
    CHECK(cfg.refine.T == 8);
    REQUIRE(cfg.refine.lambda.size() == 8);
    CHECK(cfg.refine.lambda[2] == 0.3);
    CHECK(cfg.aggregate_p == 2);
    CHECK(cfg.transform == TransformKind::FlipH);
    CHECK(cfg.shift_search);

    {
        std::ofstream os(path);
        os << "nonsense.key = 1\n";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
    {
        std::ofstream os(path);
        os << "refine.T eight\n";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("synth writes a deterministic corpus with recomputable SNR") {
    TempDir d1("synth1"), d2("synth2");
    PipelineConfig cfg = desk_config();
    cfg.alpha = 3.0;
    REQUIRE(cmd_synth(cfg, d1.str()) == 0);
    REQUIRE(cmd_synth(cfg, d2.str()) == 0);

    std::vector<std::string> ids = read_manifest(d1.str());
    REQUIRE(static_cast<int>(ids.size()) == cfg.synth.count);
    for (const std::string& id : ids) {
        CHECK(slurp(d1.str() + "/" + id + "/target.igrd") == slurp(d2.str() + "/" + id + "/target.igrd"));
        CHECK(slurp(d1.str() + "/" + id + "/meas.i2im") == slurp(d2.str() + "/" + id + "/meas.i2im"));
    }
    CHECK(slurp(d1.str() + "/synth_stats.csv") == slurp(d2.str() + "/synth_stats.csv"));

    // SNR column recomputes from the stored files
    std::ifstream stats(d1.str() + "/synth_stats.csv");
    std::string line;
    std::getline(stats, line); // header
    size_t row = 0;
    while (std::getline(stats, line)) {
        const size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const std::string id = line.substr(0, c1);
        const double recorded = std::stod(line.substr(c2 + 1));
        DatasetRecord rec = read_record(d1.str(), id, false);
        CHECK(std::abs(recorded - snr_db(rec.target, rec.meas)) < 1e-9);
        CHECK(std::isfinite(recorded));
        CHECK(recorded > 0.0);
        ++row;
    }
    CHECK(row == ids.size());
}

TEST_CASE("synth with zero records still succeeds") {
    TempDir dir("synth0");
    PipelineConfig cfg = desk_config();
    cfg.synth.count = 0;
    CHECK(cmd_synth(cfg, dir.str()) == 0);
    CHECK(read_manifest(dir.str()).empty());
}

TEST_CASE("oracle pipeline on a noiseless corpus reaches high PSNR and reruns identically") {
    TempDir dir("e2e");
    PipelineConfig cfg = desk_config();
    REQUIRE(cmd_synth(cfg, dir.str()) == 0);
    REQUIRE(cmd_init(cfg, dir.str()) == 0);
    ReconstructBackend backend;
    backend.oracle = true;
    REQUIRE(cmd_reconstruct(cfg, dir.str(), backend) == 0);
    REQUIRE(cmd_eval(cfg, dir.str(), dir.str() + "/metrics.csv") == 0);

    std::ifstream csv(dir.str() + "/metrics.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "id,psnr,ssim,ambiguity,shift_search");
    int rows = 0;
    while (std::getline(csv, line)) {
        const size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const double psnr_val = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(psnr_val > 50.0);
        ++rows;
    }
    CHECK(rows == cfg.synth.count);

    const std::string first = slurp(dir.str() + "/metrics.csv");
    REQUIRE(cmd_reconstruct(cfg, dir.str(), backend) == 0);
    REQUIRE(cmd_eval(cfg, dir.str(), dir.str() + "/metrics.csv") == 0);
    CHECK(slurp(dir.str() + "/metrics.csv") == first);
}

TEST_CASE("aggregate command writes 2p samples per record") {
    TempDir dir("aggcmd");
    PipelineConfig cfg = desk_config();
    cfg.synth.count = 2;
    cfg.aggregate_p = 1;
    REQUIRE(cmd_synth(cfg, dir.str()) == 0);
    REQUIRE(cmd_init(cfg, dir.str()) == 0);
    DenoiserModel model = DenoiserModel::zeros(cfg.init.keep, 4, 3, 3, 4, 4);
    REQUIRE(cmd_aggregate(cfg, dir.str(), model) == 0);
    for (const std::string& id : read_manifest(dir.str())) {
        const std::string d = dir.str() + "/" + id;
        CHECK(std::filesystem::exists(d + "/agg_mean.igrd"));
        CHECK(std::filesystem::exists(d + "/agg_sample_00.igrd"));
        CHECK(std::filesystem::exists(d + "/agg_sample_01.igrd"));
        CHECK_FALSE(std::filesystem::exists(d + "/agg_sample_02.igrd"));
        CHECK(std::filesystem::exists(d + "/agg_variance.txt"));
    }
}

TEST_CASE("train command produces a loadable model") {
    TempDir dir("traincmd");
    PipelineConfig cfg = desk_config();
    cfg.synth.count = 4;
    REQUIRE(cmd_synth(cfg, dir.str()) == 0);
    REQUIRE(cmd_init(cfg, dir.str()) == 0);
    const std::string model_path = dir.str() + "/model.i2dn";
    REQUIRE(cmd_train(cfg, dir.str(), model_path) == 0);
    DenoiserModel model = read_i2dn(model_path);
    CHECK(model.k == cfg.init.keep);
    CHECK(model.trained_T == cfg.train.trained_T);
}
