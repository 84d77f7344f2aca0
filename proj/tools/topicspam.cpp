// topicspam: spammer detection from topic-distribution profiles.
// Pipeline: preprocess -> train-lda -> extract -> evaluate, plus a synthetic
// corpus generator and a `run` command composing all stages.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topicspam/pipeline.hpp"

namespace ts = topicspam;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t pos = s.find(',', start);
        std::string item = pos == std::string::npos ? s.substr(start) : s.substr(start, pos - start);
        if (!item.empty()) out.push_back(item);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string default_out_dir() {
    const char* env = std::getenv("TOPICSPAM_OUT_DIR");
    return env && *env ? env : "out";
}

// string-typed flag holders that need conversion after parsing
struct FlagState {
    std::string dataset;
    std::string format = "jsonl";
    std::string language = "english";
    std::string stopwords;
    std::string features = "goss,loss,goss+loss,raw";
    std::string classifiers = "svm,adaboost,rf";
    std::string protocol = "fold_fit";
    std::string out_dir = default_out_dir();
    std::string corpus_file;
    std::string model_file;
    std::vector<std::string> feature_csvs;
    std::uint64_t eval_seed = 0;
    bool no_stem = false;
};

void apply_flags(ts::PipelineConfig& cfg, const FlagState& st, const CLI::App* cmd) {
    cfg.dataset = st.dataset;
    if (st.format == "jsonl") cfg.format = ts::DatasetFormat::Jsonl;
    else if (st.format == "tsv") cfg.format = ts::DatasetFormat::Tsv;
    else throw ts::ConfigError("unknown dataset format '" + st.format + "'");

    if (st.language == "english") cfg.language = ts::LanguageMode::English;
    else if (st.language == "pretokenized") cfg.language = ts::LanguageMode::Pretokenized;
    else throw ts::ConfigError("unknown language mode '" + st.language + "'");

    cfg.stopword_file = st.stopwords;
    cfg.stem = !st.no_stem;
    cfg.feature_sets = split_list(st.features);
    if (cfg.feature_sets.empty())
        throw ts::ConfigError("at least one feature set must be selected");
    cfg.classifiers.clear();
    for (const auto& name : split_list(st.classifiers))
        cfg.classifiers.push_back(ts::parse_classifier(name));
    if (cfg.classifiers.empty())
        throw ts::ConfigError("at least one classifier must be selected");

    if (st.protocol == "fold_fit") cfg.protocol = ts::FeatureProtocol::FoldFit;
    else if (st.protocol == "global") cfg.protocol = ts::FeatureProtocol::Global;
    else throw ts::ConfigError("unknown protocol '" + st.protocol + "' (fold_fit or global)");

    cfg.out_dir = st.out_dir;
    const auto* eval_seed_opt = cmd->get_option_no_throw("--eval-seed");
    if (eval_seed_opt && eval_seed_opt->count() > 0) cfg.eval_seed = st.eval_seed;
}

void add_dataset_flags(CLI::App* cmd, FlagState& st) {
    cmd->add_option("--dataset", st.dataset, "labeled dataset file");
    cmd->add_option("--format", st.format, "dataset format: jsonl or tsv");
}

void add_preprocess_flags(CLI::App* cmd, FlagState& st, ts::PipelineConfig& cfg) {
    cmd->add_option("--language", st.language, "english or pretokenized");
    cmd->add_option("--stopwords", st.stopwords, "stopword file (default: builtin list)");
    cmd->add_option("--min-posts", cfg.min_posts, "drop users with fewer posts");
    cmd->add_option("--min-tokens", cfg.min_tokens, "drop users with fewer tokens left");
    cmd->add_flag("--no-stem", st.no_stem, "disable stemming in english mode");
    cmd->add_option("--min-df", cfg.min_df, "vocabulary: minimum document frequency");
    cmd->add_option("--max-df-ratio", cfg.max_df_ratio, "vocabulary: maximum df as corpus fraction");
}

void add_lda_flags(CLI::App* cmd, ts::PipelineConfig& cfg) {
    cmd->add_option("--topics", cfg.lda.topics, "number of topics K");
    cmd->add_option("--alpha", cfg.lda.alpha, "document-topic smoothing");
    cmd->add_option("--beta", cfg.lda.beta, "topic-word smoothing");
    cmd->add_option("--iters", cfg.lda.iterations, "Gibbs sweeps");
    cmd->add_option("--burn-in", cfg.lda.burn_in, "sweeps discarded before estimation");
    cmd->add_option("--seed", cfg.lda.seed, "model seed");
    cmd->add_flag("--average", cfg.lda.average, "average estimates over post-burn-in sweeps");
    cmd->add_option("--average-every", cfg.lda.average_every, "sweep spacing for averaging");
}

void add_eval_flags(CLI::App* cmd, FlagState& st, ts::PipelineConfig& cfg) {
    cmd->add_option("--features", st.features, "comma list of feature sets (atoms joined by +)");
    cmd->add_option("--classifiers", st.classifiers, "comma list of svm,adaboost,rf");
    cmd->add_option("--folds", cfg.folds, "cross-validation folds");
    cmd->add_option("--eval-seed", st.eval_seed, "evaluation seed (default: model seed + 1)");
    cmd->add_option("--protocol", st.protocol, "feature statistics protocol: fold_fit or global");
    cmd->add_option("--svm-lambda", cfg.train.svm_lambda, "svm regularization");
    cmd->add_option("--svm-epochs", cfg.train.svm_epochs, "svm epochs");
    cmd->add_option("--ada-rounds", cfg.train.ada_rounds, "adaboost rounds");
    cmd->add_option("--rf-trees", cfg.train.rf_trees, "random forest size");
    cmd->add_flag("--class-weighting", cfg.train.class_weighting, "weight classes by inverse frequency");
}

void add_out_dir_flag(CLI::App* cmd, FlagState& st) {
    cmd->add_option("--out-dir", st.out_dir,
                    "artifact directory (env TOPICSPAM_OUT_DIR overrides the default)");
}

int dispatch(CLI::App& app, const CLI::App* synth_cmd, const CLI::App* pre_cmd,
             const CLI::App* train_cmd, const CLI::App* extract_cmd, const CLI::App* eval_cmd,
             const CLI::App* run_cmd, FlagState& st, ts::PipelineConfig& cfg,
             ts::SynthConfig& synth_cfg, const std::string& synth_out,
             std::string& synth_truth) {
    namespace fs = std::filesystem;
    if (app.got_subcommand(synth_cmd)) {
        if (synth_truth.empty()) synth_truth = synth_out + ".truth.json";
        ts::stage_synth(synth_cfg, synth_out, synth_truth);
        std::cout << "wrote " << synth_out << " (" << synth_cfg.n_legit << " legit, "
                  << synth_cfg.n_polluter << " polluters, " << synth_cfg.n_fake << " fakes)\n";
        return 0;
    }

    apply_flags(cfg, st,
                app.got_subcommand(pre_cmd)       ? pre_cmd
                : app.got_subcommand(train_cmd)   ? train_cmd
                : app.got_subcommand(extract_cmd) ? extract_cmd
                : app.got_subcommand(eval_cmd)    ? eval_cmd
                                                  : run_cmd);
    const fs::path out_dir = cfg.out_dir;
    const fs::path corpus_file =
        st.corpus_file.empty() ? out_dir / "corpus.json" : fs::path(st.corpus_file);
    const fs::path model_file =
        st.model_file.empty() ? out_dir / "model.json" : fs::path(st.model_file);

    if (app.got_subcommand(pre_cmd)) {
        if (cfg.dataset.empty()) throw ts::ConfigError("--dataset is required");
        fs::create_directories(out_dir);
        auto art = ts::stage_preprocess(cfg, corpus_file);
        std::cout << "preprocess: " << art.docs.size() << " users kept, " << art.filtered.size()
                  << " filtered, vocabulary " << art.vocabulary.size() << " -> " << corpus_file
                  << "\n";
    } else if (app.got_subcommand(train_cmd)) {
        fs::create_directories(out_dir);
        auto art = ts::stage_train(cfg, corpus_file, model_file);
        std::cout << "train-lda: K=" << art.model.config.topics << ", "
                  << art.model.doc_ids.size() << " documents -> " << model_file << "\n";
    } else if (app.got_subcommand(extract_cmd)) {
        fs::create_directories(out_dir);
        auto paths = ts::stage_extract(cfg, model_file, corpus_file, out_dir);
        for (const auto& p : paths) std::cout << "extract: wrote " << p << "\n";
    } else if (app.got_subcommand(eval_cmd)) {
        fs::create_directories(out_dir);
        std::vector<ts::EvalReport> rows;
        if (!st.feature_csvs.empty()) {
            std::vector<fs::path> csvs(st.feature_csvs.begin(), st.feature_csvs.end());
            rows = ts::stage_evaluate_csv(cfg, csvs, out_dir);
        } else {
            rows = ts::stage_evaluate(cfg, model_file, corpus_file, out_dir);
        }
        std::cout << ts::render_report_table(rows);
    } else if (app.got_subcommand(run_cmd)) {
        if (cfg.dataset.empty()) throw ts::ConfigError("--dataset is required");
        auto artifacts = ts::run_pipeline(cfg);
        std::cout << ts::render_report_table(artifacts.rows);
        std::cout << "run: artifacts in " << cfg.out_dir << " (manifest "
                  << artifacts.manifest_file << ")\n";
    } else {
        std::cerr << app.help();
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spammer detection from topic-distribution profiles"};
    app.require_subcommand(0, 1);

    ts::PipelineConfig cfg;
    FlagState st;

    // synth
    ts::SynthConfig synth_cfg;
    std::string synth_out = "synth.jsonl";
    std::string synth_truth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic corpus");
    synth_cmd->add_option("--out", synth_out, "output dataset JSONL");
    synth_cmd->add_option("--truth", synth_truth, "ground-truth sidecar (default <out>.truth.json)");
    synth_cmd->add_option("--seed", synth_cfg.seed, "generator seed");
    synth_cmd->add_option("--legit", synth_cfg.n_legit, "legitimate user count");
    synth_cmd->add_option("--polluters", synth_cfg.n_polluter, "content polluter count");
    synth_cmd->add_option("--fakes", synth_cfg.n_fake, "fake account count");
    synth_cmd->add_option("--topics-true", synth_cfg.topics_true, "planted topic count");
    synth_cmd->add_option("--vocab-per-topic", synth_cfg.vocab_per_topic, "words per topic support");
    synth_cmd->add_option("--doc-len", synth_cfg.doc_len, "tokens per user");
    synth_cmd->add_option("--tokens-per-post", synth_cfg.tokens_per_post, "tokens per post");
    synth_cmd->add_option("--url-rate", synth_cfg.url_rate, "injected links per post");
    synth_cmd->add_option("--mention-rate", synth_cfg.mention_rate, "injected mentions per post");

    // preprocess
    auto* pre_cmd = app.add_subcommand("preprocess", "tokenize, filter and build the vocabulary");
    add_dataset_flags(pre_cmd, st);
    add_preprocess_flags(pre_cmd, st, cfg);
    add_out_dir_flag(pre_cmd, st);

    // train-lda
    auto* train_cmd = app.add_subcommand("train-lda", "fit the topic model by collapsed Gibbs sampling");
    train_cmd->add_option("--corpus", st.corpus_file, "corpus artifact (default <out-dir>/corpus.json)");
    add_lda_flags(train_cmd, cfg);
    add_out_dir_flag(train_cmd, st);

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "export feature CSVs from a trained model");
    extract_cmd->add_option("--model", st.model_file, "model artifact (default <out-dir>/model.json)");
    extract_cmd->add_option("--corpus", st.corpus_file, "corpus artifact");
    extract_cmd->add_option("--features", st.features, "comma list of feature sets");
    add_dataset_flags(extract_cmd, st); // raw posts, needed by the uc set
    add_out_dir_flag(extract_cmd, st);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "cross-validated evaluation");
    eval_cmd->add_option("--model", st.model_file, "model artifact (default <out-dir>/model.json)");
    eval_cmd->add_option("--corpus", st.corpus_file, "corpus artifact");
    eval_cmd->add_option("--features-csv", st.feature_csvs,
                         "evaluate exported feature CSVs instead of the model");
    add_dataset_flags(eval_cmd, st);
    add_eval_flags(eval_cmd, st, cfg);
    add_out_dir_flag(eval_cmd, st);

    // run
    auto* run_cmd = app.add_subcommand("run", "full pipeline: preprocess, train, extract, evaluate");
    add_dataset_flags(run_cmd, st);
    add_preprocess_flags(run_cmd, st, cfg);
    add_lda_flags(run_cmd, cfg);
    add_eval_flags(run_cmd, st, cfg);
    add_out_dir_flag(run_cmd, st);

    // a flat key=value file mirroring the flag names; flags win, keys owned
    // by other subcommands are ignored
    for (auto* cmd : {synth_cmd, pre_cmd, train_cmd, extract_cmd, eval_cmd, run_cmd}) {
        cmd->set_config("--config", "", "flat key=value config file; flags override");
        cmd->allow_config_extras(CLI::config_extras_mode::ignore_all);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    }

    try {
        return dispatch(app, synth_cmd, pre_cmd, train_cmd, extract_cmd, eval_cmd, run_cmd, st,
                        cfg, synth_cfg, synth_out, synth_truth);
    } catch (const ts::Error& e) {
        std::cerr << "error: " << e.category_name() << ": " << e.what() << "\n";
        switch (e.category()) {
        case ts::ErrorCategory::Io:
        case ts::ErrorCategory::Config: return 2;
        case ts::ErrorCategory::Data: return 3;
        case ts::ErrorCategory::Internal: return 4;
        }
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
}
