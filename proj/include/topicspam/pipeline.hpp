#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topicspam/corpus.hpp"
#include "topicspam/error.hpp"
#include "topicspam/eval.hpp"
#include "topicspam/lda.hpp"
#include "topicspam/serialize.hpp"
#include "topicspam/synth.hpp"

namespace topicspam {

// Everything a full run needs. Each stage hashes only the slice of this that
// affects its output, so artifacts produced by `run` and by hand-chained
// subcommands are byte-identical; a mixed set of artifacts from different
// configs is rejected by the hash chain.
struct PipelineConfig {
    // dataset
    std::filesystem::path dataset;
    DatasetFormat format = DatasetFormat::Jsonl;

    // preprocess
    LanguageMode language = LanguageMode::English;
    std::filesystem::path stopword_file; // empty: builtin list
    int min_posts = 20;
    int min_tokens = 50;
    bool stem = true;
    int min_df = 5;
    double max_df_ratio = 0.5;

    // topic model (lda.seed is the model seed)
    LdaConfig lda;

    // features + evaluation
    std::vector<std::string> feature_sets = {"goss", "loss", "goss+loss", "raw"};
    std::vector<ClassifierKind> classifiers = {ClassifierKind::LinearSvm,
                                               ClassifierKind::Adaboost,
                                               ClassifierKind::RandomForest};
    int folds = 10;
    std::optional<std::uint64_t> eval_seed; // default: model seed + 1
    FeatureProtocol protocol = FeatureProtocol::FoldFit;
    TrainParams train;

    std::filesystem::path out_dir = "out";

    std::uint64_t effective_eval_seed() const {
        return eval_seed ? *eval_seed : lda.seed + 1;
    }
};

namespace detail {

inline std::string format_name(DatasetFormat f) {
    return f == DatasetFormat::Jsonl ? "jsonl" : "tsv";
}

inline std::string language_name(LanguageMode m) {
    return m == LanguageMode::English ? "english" : "pretokenized";
}

inline std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

// canonical key=value block for one stage; hashed into the artifact chain
inline std::string preprocess_canonical(const PipelineConfig& cfg,
                                        const std::string& dataset_checksum,
                                        const std::string& stopword_checksum) {
    std::string s;
    s += "stage=preprocess\n";
    s += "dataset_checksum=" + dataset_checksum + "\n";
    s += "format=" + format_name(cfg.format) + "\n";
    s += "language=" + language_name(cfg.language) + "\n";
    s += "stopword_checksum=" + stopword_checksum + "\n";
    s += "min_posts=" + std::to_string(cfg.min_posts) + "\n";
    s += "min_tokens=" + std::to_string(cfg.min_tokens) + "\n";
    s += "stem=" + std::string(cfg.stem ? "true" : "false") + "\n";
    s += "min_df=" + std::to_string(cfg.min_df) + "\n";
    s += "max_df_ratio=" + format_double(cfg.max_df_ratio) + "\n";
    return s;
}

inline std::string train_canonical(const PipelineConfig& cfg, const std::string& corpus_hash) {
    const auto& l = cfg.lda;
    std::string s;
    s += "stage=train\n";
    s += "corpus_hash=" + corpus_hash + "\n";
    s += "topics=" + std::to_string(l.topics) + "\n";
    s += "alpha=" + format_double(l.alpha) + "\n";
    s += "beta=" + format_double(l.beta) + "\n";
    s += "iterations=" + std::to_string(l.iterations) + "\n";
    s += "burn_in=" + std::to_string(l.burn_in) + "\n";
    s += "seed=" + std::to_string(l.seed) + "\n";
    s += "average=" + std::string(l.average ? "true" : "false") + "\n";
    s += "average_every=" + std::to_string(l.average_every) + "\n";
    return s;
}

inline std::string evaluate_canonical(const PipelineConfig& cfg, const std::string& model_hash,
                                      std::uint64_t eval_seed) {
    std::string s;
    s += "stage=evaluate\n";
    s += "model_hash=" + model_hash + "\n";
    s += "feature_sets=" + join(cfg.feature_sets, ',') + "\n";
    std::vector<std::string> cls;
    for (auto k : cfg.classifiers) cls.push_back(classifier_name(k));
    s += "classifiers=" + join(cls, ',') + "\n";
    s += "folds=" + std::to_string(cfg.folds) + "\n";
    s += "eval_seed=" + std::to_string(eval_seed) + "\n";
    s += "protocol=" + std::string(protocol_name(cfg.protocol)) + "\n";
    s += "svm_lambda=" + format_double(cfg.train.svm_lambda) + "\n";
    s += "svm_epochs=" + std::to_string(cfg.train.svm_epochs) + "\n";
    s += "ada_rounds=" + std::to_string(cfg.train.ada_rounds) + "\n";
    s += "rf_trees=" + std::to_string(cfg.train.rf_trees) + "\n";
    s += "class_weighting=" + std::string(cfg.train.class_weighting ? "true" : "false") + "\n";
    return s;
}

inline std::string stage_hash(const std::string& canonical) {
    return hex64(fnv1a64(canonical));
}

inline std::vector<std::string> stopword_list_for(const PipelineConfig& cfg) {
    if (cfg.stopword_file.empty()) return builtin_stopwords();
    return load_stopword_file(cfg.stopword_file);
}

inline std::string stopword_checksum_for(const PipelineConfig& cfg) {
    if (cfg.stopword_file.empty()) return "builtin";
    return file_checksum(cfg.stopword_file);
}

// raw users aligned with model doc order; ConfigError when posts are absent
inline std::vector<RawUser> raw_users_for(const PipelineConfig& cfg,
                                          const std::vector<std::string>& doc_ids) {
    auto users = load_dataset(cfg.dataset, cfg.format);
    std::map<std::string, RawUser*> by_id;
    for (auto& u : users) by_id[u.user_id] = &u;
    std::vector<RawUser> out;
    out.reserve(doc_ids.size());
    for (const auto& id : doc_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw StaleArtifactError("user '" + id + "' from the model is not in the dataset");
        if (it->second->posts.empty())
            throw ConfigError("content features need raw post text but user '" + id +
                              "' has none (pretokenized-only dataset?)");
        out.push_back(*it->second);
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// stages: each reads the previous stage's artifact file and writes its own
// ---------------------------------------------------------------------------

inline void stage_synth(const SynthConfig& cfg, const std::filesystem::path& out_jsonl,
                        const std::filesystem::path& out_truth) {
    auto gen = generate(cfg);
    save_dataset_jsonl(gen.users, out_jsonl);
    if (!out_truth.empty()) save_truth_sidecar(gen.truth, out_truth);
}

inline CorpusArtifact stage_preprocess(const PipelineConfig& cfg,
                                       const std::filesystem::path& out_file) {
    const std::string dataset_checksum = file_checksum(cfg.dataset);
    const std::string stop_checksum = detail::stopword_checksum_for(cfg);

    auto users = load_dataset(cfg.dataset, cfg.format);
    PreprocessConfig pre;
    pre.language = cfg.language;
    pre.stopwords = detail::stopword_list_for(cfg);
    pre.min_posts = cfg.min_posts;
    pre.min_tokens = cfg.min_tokens;
    pre.stem = cfg.stem;
    Preprocessor preprocessor(pre);

    CorpusArtifact art;
    for (const auto& u : users) {
        auto doc = preprocessor(u);
        if (doc) art.docs.push_back(std::move(*doc));
        else art.filtered.push_back(u.user_id);
    }
    if (art.docs.empty())
        throw EmptyCorpusError("all users were filtered out by the post/token floors");
    art.vocabulary = build_vocabulary(art.docs, cfg.min_df, cfg.max_df_ratio);
    art.config_hash =
        detail::stage_hash(detail::preprocess_canonical(cfg, dataset_checksum, stop_checksum));
    save_corpus_artifact(art, out_file);
    return art;
}

inline ModelArtifact stage_train(const PipelineConfig& cfg,
                                 const std::filesystem::path& corpus_file,
                                 const std::filesystem::path& out_file) {
    auto corpus = load_corpus_artifact(corpus_file);
    auto encoded = encode_documents(corpus.docs, corpus.vocabulary);

    ModelArtifact art;
    art.model = fit(encoded, corpus.vocabulary, cfg.lda);
    art.corpus_hash = corpus.config_hash;
    art.config_hash = detail::stage_hash(detail::train_canonical(cfg, corpus.config_hash));
    for (const auto& d : corpus.docs) art.labels.push_back(d.label);
    art.goss_stats = goss_fit(art.model.theta);
    save_model_artifact(art, out_file);
    return art;
}

// one CSV per selected feature set, named features_<set>.csv
inline std::vector<std::filesystem::path> stage_extract(const PipelineConfig& cfg,
                                                        const std::filesystem::path& model_file,
                                                        const std::filesystem::path& corpus_file,
                                                        const std::filesystem::path& out_dir) {
    auto corpus = load_corpus_artifact(corpus_file);
    auto model = load_model_artifact(model_file);
    if (model.corpus_hash != corpus.config_hash)
        throw StaleArtifactError("model was trained on a different corpus artifact (hash " +
                                 model.corpus_hash + " vs " + corpus.config_hash + ")");

    const Matrix& X = model.model.theta;
    std::optional<std::vector<RawUser>> raw_users;

    std::vector<std::filesystem::path> written;
    for (const auto& set_name : cfg.feature_sets) {
        FeatureSpec spec = FeatureSpec::parse(set_name);
        std::vector<FeatureMatrix> parts;
        // serve-path contract: the global score uses the statistics frozen in
        // the model artifact, not statistics of whoever shows up at extract time
        if (spec.goss) parts.push_back(goss_apply(X, model.goss_stats));
        if (spec.loss) parts.push_back(loss(X));
        if (spec.raw) parts.push_back(raw_topics(X));
        if (spec.uc) {
            if (!raw_users) raw_users = detail::raw_users_for(cfg, model.model.doc_ids);
            parts.push_back(uc_features(*raw_users));
        }
        FeatureCsv fc;
        fc.features = concat(parts);
        fc.user_ids = model.model.doc_ids;
        fc.labels = model.labels;
        fc.config_hash = detail::stage_hash("stage=extract\nmodel_hash=" + model.config_hash +
                                            "\nfeature_set=" + spec.name() + "\n");
        auto path = out_dir / ("features_" + spec.name() + ".csv");
        export_features_csv(fc, path);
        written.push_back(path);
    }
    return written;
}

// full harness from the model artifact; writes report.json and report.txt
inline std::vector<EvalReport> stage_evaluate(const PipelineConfig& cfg,
                                              const std::filesystem::path& model_file,
                                              const std::filesystem::path& corpus_file,
                                              const std::filesystem::path& out_dir) {
    auto corpus = load_corpus_artifact(corpus_file);
    auto model = load_model_artifact(model_file);
    if (model.corpus_hash != corpus.config_hash)
        throw StaleArtifactError("model was trained on a different corpus artifact (hash " +
                                 model.corpus_hash + " vs " + corpus.config_hash + ")");

    const Matrix& X = model.model.theta;
    std::optional<std::vector<RawUser>> raw_users;
    // unset eval seed defaults off the seed of the model actually evaluated,
    // so a hand-chained evaluate matches what `run` did
    const std::uint64_t eval_seed =
        cfg.eval_seed ? *cfg.eval_seed : model.model.config.seed + 1;

    std::vector<EvalReport> rows;
    for (const auto& set_name : cfg.feature_sets) {
        FeatureSpec spec = FeatureSpec::parse(set_name);
        const std::vector<RawUser>* users_ptr = nullptr;
        if (spec.uc) {
            if (!raw_users) raw_users = detail::raw_users_for(cfg, model.model.doc_ids);
            users_ptr = &*raw_users;
        }
        for (auto kind : cfg.classifiers) {
            EvalReport rep = cross_validate(X, users_ptr, model.labels, spec, kind, cfg.train,
                                            cfg.folds, eval_seed, cfg.protocol);
            rep.model_seed = model.model.config.seed;
            rows.push_back(std::move(rep));
        }
    }
    const std::string eval_hash =
        detail::stage_hash(detail::evaluate_canonical(cfg, model.config_hash, eval_seed));
    write_text_file(out_dir / "report.json",
                    report_bundle_to_json(rows, eval_hash).dump(2) + "\n");
    write_text_file(out_dir / "report.txt", render_report_table(rows));
    return rows;
}

// evaluation decoupled from the topic model: features come from an exported
// CSV, so only the global protocol is possible
inline std::vector<EvalReport> stage_evaluate_csv(const PipelineConfig& cfg,
                                                  const std::vector<std::filesystem::path>& csvs,
                                                  const std::filesystem::path& out_dir) {
    if (cfg.protocol == FeatureProtocol::FoldFit)
        throw ConfigError("fold_fit protocol needs the model artifact; exported feature CSVs "
                          "only support --protocol global");
    std::vector<EvalReport> rows;
    std::string chain;
    for (const auto& path : csvs) {
        auto fc = import_features_csv(path);
        LabeledSet data;
        data.features = fc.features;
        data.labels = fc.labels;
        std::string set_name = path.stem().string();
        if (set_name.rfind("features_", 0) == 0) set_name = set_name.substr(9);
        for (auto kind : cfg.classifiers) {
            EvalReport rep =
                cross_validate(data, kind, cfg.train, cfg.folds, cfg.effective_eval_seed());
            rep.feature_set = set_name;
            rows.push_back(std::move(rep));
        }
        chain += fc.config_hash + "\n";
    }
    const std::string eval_hash = detail::stage_hash("stage=evaluate_csv\n" + chain);
    write_text_file(out_dir / "report.json",
                    report_bundle_to_json(rows, eval_hash).dump(2) + "\n");
    write_text_file(out_dir / "report.txt", render_report_table(rows));
    return rows;
}

// ---------------------------------------------------------------------------
// run: the whole pipeline through the same stage functions, plus a manifest
// ---------------------------------------------------------------------------

struct RunArtifacts {
    std::filesystem::path corpus_file;
    std::filesystem::path model_file;
    std::vector<std::filesystem::path> feature_csvs;
    std::filesystem::path report_json;
    std::filesystem::path report_txt;
    std::filesystem::path manifest_file;
    std::vector<EvalReport> rows;
};

inline RunArtifacts run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    RunArtifacts out;
    out.corpus_file = cfg.out_dir / "corpus.json";
    out.model_file = cfg.out_dir / "model.json";
    out.report_json = cfg.out_dir / "report.json";
    out.report_txt = cfg.out_dir / "report.txt";
    out.manifest_file = cfg.out_dir / "manifest.json";

    stage_preprocess(cfg, out.corpus_file);
    stage_train(cfg, out.corpus_file, out.model_file);
    out.feature_csvs = stage_extract(cfg, out.model_file, out.corpus_file, cfg.out_dir);
    out.rows = stage_evaluate(cfg, out.model_file, out.corpus_file, cfg.out_dir);

    // manifest: seeds, the full-config hash, and checksums of everything written
    const std::string dataset_checksum = file_checksum(cfg.dataset);
    const std::string stop_checksum = detail::stopword_checksum_for(cfg);
    std::string canonical =
        detail::preprocess_canonical(cfg, dataset_checksum, stop_checksum);
    canonical += detail::train_canonical(cfg, "-");
    canonical += detail::evaluate_canonical(cfg, "-", cfg.effective_eval_seed());
    json artifacts;
    for (const auto& p : {out.corpus_file, out.model_file, out.report_json, out.report_txt}) {
        artifacts[p.filename().string()] = file_checksum(p);
    }
    for (const auto& p : out.feature_csvs) artifacts[p.filename().string()] = file_checksum(p);
    json manifest{{"format_version", kArtifactFormatVersion},
                  {"kind", "run_manifest"},
                  {"config_hash", detail::stage_hash(canonical)},
                  {"model_seed", cfg.lda.seed},
                  {"eval_seed", cfg.effective_eval_seed()},
                  {"dataset_checksum", dataset_checksum},
                  {"artifacts", std::move(artifacts)}};
    write_text_file(out.manifest_file, manifest.dump(2) + "\n");
    return out;
}

} // namespace topicspam
