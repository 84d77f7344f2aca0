#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "topicspam/pipeline.hpp"

using namespace topicspam;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() /
                 ("topicspam_pipe_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CliResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out_file = workdir / "_stdout.txt";
    const fs::path err_file = workdir / "_stderr.txt";
    std::string cmd = std::string(TOPICSPAM_CLI_PATH) + " " + args + " >" + out_file.string() +
                      " 2>" + err_file.string();
    int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out_file);
    r.err = read_text_file(err_file);
    return r;
}

PipelineConfig small_config(const fs::path& dataset, const fs::path& out_dir) {
    PipelineConfig cfg;
    cfg.dataset = dataset;
    cfg.min_posts = 1;
    cfg.min_tokens = 10;
    cfg.min_df = 1;
    cfg.max_df_ratio = 1.0;
    cfg.lda.topics = 5;
    cfg.lda.iterations = 60;
    cfg.lda.burn_in = 10;
    cfg.lda.seed = 7;
    cfg.feature_sets = {"goss", "goss+loss"};
    cfg.folds = 5;
    cfg.train.rf_trees = 25;
    cfg.train.svm_epochs = 30;
    cfg.train.ada_rounds = 30;
    cfg.out_dir = out_dir;
    return cfg;
}

fs::path make_synth_dataset(const fs::path& dir, int legit = 30, int polluter = 15,
                            int fake = 15) {
    SynthConfig s;
    s.n_legit = legit;
    s.n_polluter = polluter;
    s.n_fake = fake;
    s.topics_true = 3;
    s.doc_len = 120;
    s.seed = 99;
    fs::path dataset = dir / "synth.jsonl";
    stage_synth(s, dataset, dir / "truth.json");
    return dataset;
}

} // namespace

TEST_CASE("feature csv round-trips bit-exactly") {
    auto dir = fresh_dir("csv");
    FeatureCsv fc;
    fc.config_hash = "abc123";
    fc.user_ids = {"u1", "u2"};
    fc.labels = {Label::Spammer, Label::Legitimate};
    fc.features.column_names = {"goss_0", "goss_1"};
    fc.features.values = Matrix(2, 2);
    fc.features.values.at(0, 0) = 0.1234567890123456789;
    fc.features.values.at(0, 1) = -1.0 / 3.0;
    fc.features.values.at(1, 0) = 1e-300;
    fc.features.values.at(1, 1) = 0.0;
    export_features_csv(fc, dir / "f.csv");
    auto back = import_features_csv(dir / "f.csv");
    CHECK(back.config_hash == "abc123");
    CHECK(back.user_ids == fc.user_ids);
    CHECK(back.labels == fc.labels);
    CHECK(back.features.column_names == fc.features.column_names);
    CHECK(back.features.values.data == fc.features.values.data);
    fs::remove_all(dir);
}

TEST_CASE("model artifact round-trips bit-exactly") {
    auto dir = fresh_dir("model");
    auto dataset = make_synth_dataset(dir, 8, 4, 4);
    auto cfg = small_config(dataset, dir);
    cfg.lda.iterations = 20;
    cfg.lda.burn_in = 5;
    auto corpus = stage_preprocess(cfg, dir / "corpus.json");
    auto model = stage_train(cfg, dir / "corpus.json", dir / "model.json");
    auto back = load_model_artifact(dir / "model.json");
    CHECK(back.model.theta.data == model.model.theta.data);
    CHECK(back.model.psi.data == model.model.psi.data);
    CHECK(back.model.doc_ids == model.model.doc_ids);
    CHECK(back.goss_stats.mu == model.goss_stats.mu);
    CHECK(back.corpus_hash == corpus.config_hash);
    CHECK(back.model.config.alpha == 0.3);
    fs::remove_all(dir);
}

TEST_CASE("artifact version and kind are enforced") {
    auto dir = fresh_dir("version");
    auto dataset = make_synth_dataset(dir, 6, 3, 3);
    auto cfg = small_config(dataset, dir);
    stage_preprocess(cfg, dir / "corpus.json");

    auto text = read_text_file(dir / "corpus.json");
    auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    auto tampered = text;
    tampered.replace(pos, 19, "\"format_version\": 9");
    write_text_file(dir / "tampered.json", tampered);
    CHECK_THROWS_AS(load_corpus_artifact(dir / "tampered.json"), FormatError);
    CHECK_THROWS_AS(load_model_artifact(dir / "corpus.json"), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("stale artifact mixes are rejected") {
    auto dir = fresh_dir("stale");
    auto dataset = make_synth_dataset(dir);
    auto cfg = small_config(dataset, dir);
    stage_preprocess(cfg, dir / "corpus.json");
    stage_train(cfg, dir / "corpus.json", dir / "model.json");

    // new corpus artifact under different preprocessing: hash changes
    auto cfg2 = cfg;
    cfg2.min_tokens = 20;
    stage_preprocess(cfg2, dir / "corpus.json");
    CHECK_THROWS_AS(stage_extract(cfg2, dir / "model.json", dir / "corpus.json", dir),
                    StaleArtifactError);
    CHECK_THROWS_AS(stage_evaluate(cfg2, dir / "model.json", dir / "corpus.json", dir),
                    StaleArtifactError);
    fs::remove_all(dir);
}

TEST_CASE("run pipeline writes every artifact and is deterministic") {
    auto dir = fresh_dir("run");
    auto dataset = make_synth_dataset(dir);
    auto cfg = small_config(dataset, dir / "a");
    auto artifacts = run_pipeline(cfg);
    CHECK(fs::exists(artifacts.corpus_file));
    CHECK(fs::exists(artifacts.model_file));
    CHECK(fs::exists(artifacts.report_json));
    CHECK(fs::exists(artifacts.report_txt));
    CHECK(fs::exists(artifacts.manifest_file));
    REQUIRE(artifacts.feature_csvs.size() == 2);
    // 2 feature sets x 3 classifiers
    CHECK(artifacts.rows.size() == 6);

    auto cfg_b = cfg;
    cfg_b.out_dir = dir / "b";
    run_pipeline(cfg_b);
    CHECK(read_text_file(dir / "a" / "report.json") == read_text_file(dir / "b" / "report.json"));
    CHECK(read_text_file(dir / "a" / "manifest.json") ==
          read_text_file(dir / "b" / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("evaluate from an exported csv alone produces a report") {
    auto dir = fresh_dir("csveval");
    auto dataset = make_synth_dataset(dir);
    auto cfg = small_config(dataset, dir);
    stage_preprocess(cfg, dir / "corpus.json");
    stage_train(cfg, dir / "corpus.json", dir / "model.json");
    auto csvs = stage_extract(cfg, dir / "model.json", dir / "corpus.json", dir);
    REQUIRE_FALSE(csvs.empty());

    auto csv_cfg = cfg;
    csv_cfg.protocol = FeatureProtocol::Global;
    csv_cfg.classifiers = {ClassifierKind::Adaboost};
    auto rows = stage_evaluate_csv(csv_cfg, {csvs.front()}, dir);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].feature_set == "goss");
    CHECK(rows[0].per_fold.size() == 5);

    auto strict = csv_cfg;
    strict.protocol = FeatureProtocol::FoldFit;
    CHECK_THROWS_AS(stage_evaluate_csv(strict, {csvs.front()}, dir), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("uc features on a pretokenized-only dataset are a config error") {
    auto dir = fresh_dir("uc");
    // build a pretokenized dataset with empty posts arrays
    std::vector<RawUser> users;
    for (int i = 0; i < 12; ++i) {
        RawUser u;
        u.user_id = "u" + std::to_string(i);
        u.label = i % 2 ? Label::Spammer : Label::Legitimate;
        std::vector<std::vector<std::string>> posts;
        for (int p = 0; p < 3; ++p) {
            std::vector<std::string> toks;
            for (int t = 0; t < 8; ++t)
                toks.push_back("tok" + std::to_string((i * 31 + p * 7 + t * 3) % 9));
            posts.push_back(toks);
        }
        u.pretokenized = posts;
        users.push_back(u);
    }
    save_dataset_jsonl(users, dir / "pretok.jsonl");

    PipelineConfig cfg = small_config(dir / "pretok.jsonl", dir);
    cfg.language = LanguageMode::Pretokenized;
    cfg.min_tokens = 5;
    cfg.lda.topics = 3;
    cfg.lda.iterations = 15;
    cfg.lda.burn_in = 3;
    cfg.feature_sets = {"goss+uc"};
    stage_preprocess(cfg, dir / "corpus.json");
    stage_train(cfg, dir / "corpus.json", dir / "model.json");
    CHECK_THROWS_AS(stage_extract(cfg, dir / "model.json", dir / "corpus.json", dir),
                    ConfigError);
    fs::remove_all(dir);
}

// --------------------------------------------------------------------------
// process-level tests against the real binary
// --------------------------------------------------------------------------

TEST_CASE("cli: missing dataset exits 2 with an io category") {
    auto dir = fresh_dir("cli_io");
    auto r = run_cli("run --dataset /nonexistent/nope.jsonl --out-dir " + (dir / "o").string(),
                     dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("error: io:", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli: unknown flag exits 2 with a config category") {
    auto dir = fresh_dir("cli_cfg");
    auto r = run_cli("run --no-such-flag", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("error: config:", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli: synth then run twice gives identical report bytes") {
    auto dir = fresh_dir("cli_det");
    auto r1 = run_cli("synth --out " + (dir / "s.jsonl").string() + " --seed 7 --legit 24"
                      " --polluters 12 --fakes 12 --topics-true 3 --doc-len 100",
                      dir);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(fs::exists(dir / "s.jsonl"));
    REQUIRE(fs::exists(dir / "s.jsonl.truth.json"));

    const std::string common =
        "run --dataset " + (dir / "s.jsonl").string() +
        " --min-posts 1 --min-tokens 10 --min-df 1 --max-df-ratio 1.0 --topics 4 --iters 50"
        " --burn-in 10 --seed 7 --features goss,loss --classifiers svm,adaboost --folds 4"
        " --svm-epochs 25 --ada-rounds 25";
    auto a = run_cli(common + " --out-dir " + (dir / "a").string(), dir);
    REQUIRE(a.exit_code == 0);
    auto b = run_cli(common + " --out-dir " + (dir / "b").string(), dir);
    REQUIRE(b.exit_code == 0);
    CHECK(read_text_file(dir / "a" / "report.json") == read_text_file(dir / "b" / "report.json"));

    // 2 feature sets x 2 classifiers -> 4 table rows after the 2 header lines
    std::istringstream table(read_text_file(dir / "a" / "report.txt"));
    int lines = 0;
    std::string line;
    while (std::getline(table, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 2 + 4);
    fs::remove_all(dir);
}

TEST_CASE("cli: run equals the hand-chained stages byte for byte") {
    auto dir = fresh_dir("cli_chain");
    auto r1 = run_cli("synth --out " + (dir / "s.jsonl").string() + " --seed 3 --legit 24"
                      " --polluters 12 --fakes 12 --topics-true 3 --doc-len 100",
                      dir);
    REQUIRE(r1.exit_code == 0);

    const std::string pre_flags = " --dataset " + (dir / "s.jsonl").string() +
                                  " --min-posts 1 --min-tokens 10 --min-df 1 --max-df-ratio 1.0";
    const std::string lda_flags = " --topics 4 --iters 50 --burn-in 10 --seed 11";
    const std::string eval_flags = " --features goss,goss+loss --classifiers svm,rf --folds 4"
                                   " --rf-trees 20 --svm-epochs 25";

    auto run_res = run_cli("run" + pre_flags + lda_flags + eval_flags + " --out-dir " +
                               (dir / "run").string(),
                           dir);
    REQUIRE(run_res.exit_code == 0);

    const std::string chain_dir = (dir / "chain").string();
    REQUIRE(run_cli("preprocess" + pre_flags + " --out-dir " + chain_dir, dir).exit_code == 0);
    REQUIRE(run_cli("train-lda" + lda_flags + " --out-dir " + chain_dir, dir).exit_code == 0);
    REQUIRE(run_cli("extract --features goss,goss+loss --out-dir " + chain_dir, dir).exit_code ==
            0);
    REQUIRE(run_cli("evaluate" + eval_flags + " --out-dir " + chain_dir, dir).exit_code == 0);

    for (const char* name : {"corpus.json", "model.json", "features_goss.csv",
                             "features_goss+loss.csv", "report.json", "report.txt"}) {
        INFO(name);
        CHECK(read_text_file(dir / "run" / name) == read_text_file(dir / "chain" / name));
    }
    fs::remove_all(dir);
}

TEST_CASE("cli: flags override the config file") {
    auto dir = fresh_dir("cli_conf");
    auto r1 = run_cli("synth --out " + (dir / "s.jsonl").string() +
                          " --seed 5 --legit 12 --polluters 6 --fakes 6 --topics-true 3"
                          " --doc-len 80",
                      dir);
    REQUIRE(r1.exit_code == 0);
    write_text_file(dir / "run.conf", "min-posts=1\nmin-tokens=10\nmin-df=1\nmax-df-ratio=1.0\n"
                                      "topics=3\niters=30\nburn-in=5\nseed=2\n");
    auto r = run_cli("preprocess --config " + (dir / "run.conf").string() + " --dataset " +
                         (dir / "s.jsonl").string() + " --min-tokens 15 --out-dir " +
                         (dir / "o").string(),
                     dir);
    REQUIRE(r.exit_code == 0);
    auto corpus = load_corpus_artifact(dir / "o" / "corpus.json");
    CHECK_FALSE(corpus.docs.empty());
    fs::remove_all(dir);
}

TEST_CASE("cli: TOPICSPAM_OUT_DIR sets the default artifact directory") {
    auto dir = fresh_dir("cli_env");
    auto r1 = run_cli("synth --out " + (dir / "s.jsonl").string() +
                          " --seed 5 --legit 12 --polluters 6 --fakes 6 --topics-true 3"
                          " --doc-len 80",
                      dir);
    REQUIRE(r1.exit_code == 0);
    const fs::path out_file = dir / "_stdout.txt";
    const fs::path err_file = dir / "_stderr.txt";
    std::string cmd = "TOPICSPAM_OUT_DIR=" + (dir / "env_out").string() + " " +
                      TOPICSPAM_CLI_PATH + " preprocess --dataset " + (dir / "s.jsonl").string() +
                      " --min-posts 1 --min-tokens 10 --min-df 1 --max-df-ratio 1.0 >" +
                      out_file.string() + " 2>" + err_file.string();
    int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    REQUIRE(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir / "env_out" / "corpus.json"));
    fs::remove_all(dir);
}
