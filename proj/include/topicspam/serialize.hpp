#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "topicspam/classify.hpp"
#include "topicspam/corpus.hpp"
#include "topicspam/error.hpp"
#include "topicspam/eval.hpp"
#include "topicspam/features.hpp"
#include "topicspam/lda.hpp"
#include "topicspam/matrix.hpp"
#include "topicspam/synth.hpp"

namespace topicspam {

using nlohmann::json;

inline constexpr int kArtifactFormatVersion = 1;

// ---------------------------------------------------------------------------
// hashing and file primitives
// ---------------------------------------------------------------------------

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write file: " + path.string());
    out << content;
    if (!out)
        throw IoError("write failed: " + path.string());
}

inline std::string file_checksum(const std::filesystem::path& path) {
    return hex64(fnv1a64(read_text_file(path)));
}

// shortest round-trip decimal form
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// json helpers
// ---------------------------------------------------------------------------

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", std::move(rows)}};
}

inline Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& rows = j.at("data");
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            m.at(r, c) = rows.at(static_cast<std::size_t>(r))
                             .at(static_cast<std::size_t>(c))
                             .get<double>();
    return m;
}

inline void check_artifact_header(const json& j, const char* kind,
                                  const std::filesystem::path& path) {
    if (!j.is_object() || !j.contains("format_version") || !j.contains("kind"))
        throw FormatError(path.string() + ": missing artifact header");
    if (j.at("format_version").get<int>() != kArtifactFormatVersion)
        throw FormatError(path.string() + ": artifact format version " +
                          j.at("format_version").dump() + " not supported (expected " +
                          std::to_string(kArtifactFormatVersion) + ")");
    if (j.at("kind").get<std::string>() != kind)
        throw FormatError(path.string() + ": expected a '" + kind + "' artifact, found '" +
                          j.at("kind").get<std::string>() + "'");
}

inline json load_json_artifact(const std::filesystem::path& path, const char* kind) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": invalid JSON: " + e.what());
    }
    check_artifact_header(j, kind, path);
    return j;
}

} // namespace detail

// ---------------------------------------------------------------------------
// preprocessed corpus artifact
// ---------------------------------------------------------------------------

struct CorpusArtifact {
    std::string config_hash;
    std::vector<UserDocument> docs;
    std::vector<std::string> filtered; // user ids dropped by the post/token floors
    Vocabulary vocabulary;
};

inline void save_corpus_artifact(const CorpusArtifact& art, const std::filesystem::path& path) {
    json docs = json::array();
    for (const auto& d : art.docs)
        docs.push_back(json{{"user_id", d.user_id},
                            {"label", label_name(d.label)},
                            {"post_count", d.post_count},
                            {"tokens", d.tokens}});
    json j{{"format_version", kArtifactFormatVersion},
           {"kind", "corpus"},
           {"config_hash", art.config_hash},
           {"docs", std::move(docs)},
           {"filtered", art.filtered},
           {"vocabulary", art.vocabulary.tokens()}};
    write_text_file(path, j.dump(2) + "\n");
}

inline CorpusArtifact load_corpus_artifact(const std::filesystem::path& path) {
    json j = detail::load_json_artifact(path, "corpus");
    CorpusArtifact art;
    try {
        art.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& dj : j.at("docs")) {
            UserDocument d;
            d.user_id = dj.at("user_id").get<std::string>();
            d.label = parse_label(dj.at("label").get<std::string>());
            d.post_count = dj.at("post_count").get<int>();
            d.tokens = dj.at("tokens").get<std::vector<std::string>>();
            art.docs.push_back(std::move(d));
        }
        art.filtered = j.at("filtered").get<std::vector<std::string>>();
        art.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad corpus artifact: " + e.what());
    }
    return art;
}

// ---------------------------------------------------------------------------
// topic model artifact
// ---------------------------------------------------------------------------

struct ModelArtifact {
    std::string config_hash; // this stage's hash (chains the corpus hash)
    std::string corpus_hash; // config_hash of the corpus this model was trained on
    TopicModel model;
    GossStats goss_stats;      // population statistics over theta, for reuse on new users
    std::vector<Label> labels; // aligned with model.doc_ids
};

inline void save_model_artifact(const ModelArtifact& art, const std::filesystem::path& path) {
    const auto& cfg = art.model.config;
    json labels = json::array();
    for (Label l : art.labels) labels.push_back(label_name(l));
    json j{{"format_version", kArtifactFormatVersion},
           {"kind", "lda_model"},
           {"config_hash", art.config_hash},
           {"corpus_hash", art.corpus_hash},
           {"config",
            {{"topics", cfg.topics},
             {"alpha", cfg.alpha},
             {"beta", cfg.beta},
             {"iterations", cfg.iterations},
             {"burn_in", cfg.burn_in},
             {"seed", cfg.seed},
             {"average", cfg.average},
             {"average_every", cfg.average_every}}},
           {"vocabulary", art.model.vocabulary.tokens()},
           {"doc_ids", art.model.doc_ids},
           {"labels", std::move(labels)},
           {"psi", detail::matrix_to_json(art.model.psi)},
           {"theta", detail::matrix_to_json(art.model.theta)},
           {"goss_mu", art.goss_stats.mu},
           {"goss_denom", art.goss_stats.denom}};
    write_text_file(path, j.dump(2) + "\n");
}

inline ModelArtifact load_model_artifact(const std::filesystem::path& path) {
    json j = detail::load_json_artifact(path, "lda_model");
    ModelArtifact art;
    try {
        art.config_hash = j.at("config_hash").get<std::string>();
        art.corpus_hash = j.at("corpus_hash").get<std::string>();
        const auto& cj = j.at("config");
        LdaConfig cfg;
        cfg.topics = cj.at("topics").get<int>();
        cfg.alpha = cj.at("alpha").get<double>();
        cfg.beta = cj.at("beta").get<double>();
        cfg.iterations = cj.at("iterations").get<int>();
        cfg.burn_in = cj.at("burn_in").get<int>();
        cfg.seed = cj.at("seed").get<std::uint64_t>();
        cfg.average = cj.at("average").get<bool>();
        cfg.average_every = cj.at("average_every").get<int>();
        art.model.config = cfg;
        art.model.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
        art.model.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
        for (const auto& lj : j.at("labels"))
            art.labels.push_back(parse_label(lj.get<std::string>()));
        art.model.psi = detail::matrix_from_json(j.at("psi"));
        art.model.theta = detail::matrix_from_json(j.at("theta"));
        art.goss_stats.mu = j.at("goss_mu").get<std::vector<double>>();
        art.goss_stats.denom = j.at("goss_denom").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad model artifact: " + e.what());
    }
    return art;
}

// ---------------------------------------------------------------------------
// classifier artifact
// ---------------------------------------------------------------------------

inline json classifier_to_json(const Classifier& cl) {
    json j{{"format_version", kArtifactFormatVersion},
           {"kind", "classifier"},
           {"classifier", classifier_name(cl.kind)},
           {"seed", cl.seed},
           {"params",
            {{"svm_lambda", cl.params.svm_lambda},
             {"svm_epochs", cl.params.svm_epochs},
             {"ada_rounds", cl.params.ada_rounds},
             {"rf_trees", cl.params.rf_trees},
             {"class_weighting", cl.params.class_weighting}}},
           {"feat_mean", cl.feat_mean},
           {"feat_scale", cl.feat_scale}};
    switch (cl.kind) {
    case ClassifierKind::LinearSvm:
        j["weights"] = cl.weights;
        j["bias"] = cl.bias;
        break;
    case ClassifierKind::Adaboost: {
        json stumps = json::array();
        for (const auto& s : cl.stumps)
            stumps.push_back(json{{"feature", s.feature},
                                  {"threshold", s.threshold},
                                  {"polarity", s.polarity},
                                  {"weight", s.weight}});
        j["stumps"] = std::move(stumps);
        break;
    }
    case ClassifierKind::RandomForest: {
        json trees = json::array();
        for (const auto& t : cl.trees) {
            json nodes = json::array();
            for (const auto& nd : t.nodes)
                nodes.push_back(json{{"feature", nd.feature},
                                     {"threshold", nd.threshold},
                                     {"left", nd.left},
                                     {"right", nd.right},
                                     {"leaf_label", nd.leaf_label}});
            trees.push_back(std::move(nodes));
        }
        j["trees"] = std::move(trees);
        break;
    }
    }
    return j;
}

inline Classifier classifier_from_json(const json& j) {
    detail::check_artifact_header(j, "classifier", "<json>");
    Classifier cl;
    try {
        cl.kind = parse_classifier(j.at("classifier").get<std::string>());
        cl.seed = j.at("seed").get<std::uint64_t>();
        const auto& pj = j.at("params");
        cl.params.svm_lambda = pj.at("svm_lambda").get<double>();
        cl.params.svm_epochs = pj.at("svm_epochs").get<int>();
        cl.params.ada_rounds = pj.at("ada_rounds").get<int>();
        cl.params.rf_trees = pj.at("rf_trees").get<int>();
        cl.params.class_weighting = pj.at("class_weighting").get<bool>();
        cl.feat_mean = j.at("feat_mean").get<std::vector<double>>();
        cl.feat_scale = j.at("feat_scale").get<std::vector<double>>();
        switch (cl.kind) {
        case ClassifierKind::LinearSvm:
            cl.weights = j.at("weights").get<std::vector<double>>();
            cl.bias = j.at("bias").get<double>();
            break;
        case ClassifierKind::Adaboost:
            for (const auto& sj : j.at("stumps"))
                cl.stumps.push_back(Stump{sj.at("feature").get<int>(),
                                          sj.at("threshold").get<double>(),
                                          sj.at("polarity").get<int>(),
                                          sj.at("weight").get<double>()});
            break;
        case ClassifierKind::RandomForest:
            for (const auto& tj : j.at("trees")) {
                Tree t;
                for (const auto& nj : tj)
                    t.nodes.push_back(TreeNode{nj.at("feature").get<int>(),
                                               nj.at("threshold").get<double>(),
                                               nj.at("left").get<int>(),
                                               nj.at("right").get<int>(),
                                               nj.at("leaf_label").get<int>()});
                cl.trees.push_back(std::move(t));
            }
            break;
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad classifier artifact: ") + e.what());
    }
    return cl;
}

// ---------------------------------------------------------------------------
// feature CSV (header: user_id,label,<columns>; leading comment pins the
// config hash)
// ---------------------------------------------------------------------------

struct FeatureCsv {
    std::string config_hash;
    std::vector<std::string> user_ids;
    std::vector<Label> labels;
    FeatureMatrix features;
};

inline void export_features_csv(const FeatureCsv& fc, const std::filesystem::path& path) {
    if (fc.features.rows() != static_cast<int>(fc.user_ids.size()) ||
        fc.user_ids.size() != fc.labels.size())
        throw InternalError("feature csv: row/id/label count mismatch");
    std::string out = "# config_hash=" + fc.config_hash + "\n";
    out += "user_id,label";
    for (const auto& name : fc.features.column_names) out += "," + name;
    out += "\n";
    for (int r = 0; r < fc.features.rows(); ++r) {
        out += fc.user_ids[static_cast<std::size_t>(r)];
        out += ",";
        out += label_name(fc.labels[static_cast<std::size_t>(r)]);
        for (int c = 0; c < fc.features.cols(); ++c)
            out += "," + format_double(fc.features.values.at(r, c));
        out += "\n";
    }
    write_text_file(path, out);
}

inline FeatureCsv import_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open feature csv: " + path.string());
    FeatureCsv fc;
    std::string line;
    std::size_t lineno = 0;
    bool header_done = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("config_hash=");
            if (pos != std::string::npos) fc.config_hash = line.substr(pos + 12);
            continue;
        }
        auto fields = detail::split(line, ',');
        if (!header_done) {
            if (fields.size() < 3 || fields[0] != "user_id" || fields[1] != "label")
                throw FormatError(path.string() + ": line " + std::to_string(lineno) +
                                  ": header must start with user_id,label");
            fc.features.column_names.assign(fields.begin() + 2, fields.end());
            header_done = true;
            continue;
        }
        if (fields.size() != fc.features.column_names.size() + 2)
            throw FormatError(path.string() + ": line " + std::to_string(lineno) +
                              ": expected " + std::to_string(fc.features.column_names.size() + 2) +
                              " fields, got " + std::to_string(fields.size()));
        fc.user_ids.push_back(fields[0]);
        fc.labels.push_back(parse_label(fields[1]));
        std::vector<double> vals;
        for (std::size_t i = 2; i < fields.size(); ++i) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
            if (ec != std::errc() || p != fields[i].data() + fields[i].size())
                throw FormatError(path.string() + ": line " + std::to_string(lineno) +
                                  ": bad number '" + fields[i] + "'");
            vals.push_back(v);
        }
        rows.push_back(std::move(vals));
    }
    if (!header_done)
        throw FormatError(path.string() + ": missing header row");
    fc.features.values = Matrix(static_cast<int>(rows.size()),
                                static_cast<int>(fc.features.column_names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            fc.features.values.at(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    return fc;
}

// ---------------------------------------------------------------------------
// evaluation report
// ---------------------------------------------------------------------------

namespace detail {

inline json metrics_to_json(const MetricValues& m) {
    return json{{"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"accuracy", m.accuracy}};
}

inline json confusion_to_json(const ConfusionMatrix& cm) {
    return json{{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
}

} // namespace detail

inline json report_to_json(const EvalReport& rep) {
    json folds = json::array();
    for (const auto& f : rep.per_fold) {
        json fj = detail::confusion_to_json(f.cm);
        fj.update(detail::metrics_to_json(f.m));
        folds.push_back(std::move(fj));
    }
    return json{{"feature_set", rep.feature_set},
                {"classifier", rep.classifier},
                {"protocol", rep.protocol},
                {"model_seed", rep.model_seed},
                {"eval_seed", rep.eval_seed},
                {"fold_assignment_hash", rep.fold_hash},
                {"folds", std::move(folds)},
                {"pooled", detail::confusion_to_json(rep.pooled)},
                {"pooled_metrics", detail::metrics_to_json(rep.pooled_metrics)},
                {"fold_mean", detail::metrics_to_json(rep.fold_mean)},
                {"fold_std", detail::metrics_to_json(rep.fold_std)}};
}

inline json report_bundle_to_json(const std::vector<EvalReport>& rows,
                                  const std::string& config_hash) {
    json rj = json::array();
    for (const auto& r : rows) rj.push_back(report_to_json(r));
    return json{{"format_version", kArtifactFormatVersion},
                {"kind", "eval_report"},
                {"config_hash", config_hash},
                {"rows", std::move(rj)}};
}

// aligned text table: one row per feature-set x classifier
inline std::string render_report_table(const std::vector<EvalReport>& rows) {
    std::size_t fw = 11, cw = 10;
    for (const auto& r : rows) {
        fw = std::max(fw, r.feature_set.size());
        cw = std::max(cw, r.classifier.size());
    }
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %9s  %9s  %9s  %9s\n", static_cast<int>(fw),
                  "feature-set", static_cast<int>(cw), "classifier", "precision", "recall",
                  "f1-score", "accuracy");
    out += buf;
    out += std::string(fw + cw + 4 + 4 * 11, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %-*s  %9.3f  %9.3f  %9.3f  %9.3f\n",
                      static_cast<int>(fw), r.feature_set.c_str(), static_cast<int>(cw),
                      r.classifier.c_str(), r.pooled_metrics.precision, r.pooled_metrics.recall,
                      r.pooled_metrics.f1, r.pooled_metrics.accuracy);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic ground truth sidecar
// ---------------------------------------------------------------------------

inline void save_truth_sidecar(const std::vector<TrueUser>& truth,
                               const std::filesystem::path& path) {
    json users = json::array();
    for (const auto& t : truth)
        users.push_back(
            json{{"user_id", t.user_id}, {"subclass", t.subclass}, {"theta", t.theta}});
    json j{{"format_version", kArtifactFormatVersion},
           {"kind", "synth_truth"},
           {"users", std::move(users)}};
    write_text_file(path, j.dump(2) + "\n");
}

// the standard dataset JSONL emitted by the generator
inline void save_dataset_jsonl(const std::vector<RawUser>& users,
                               const std::filesystem::path& path) {
    std::string out;
    for (const auto& u : users) {
        json j{{"user_id", u.user_id}, {"label", label_name(u.label)}, {"posts", u.posts}};
        if (u.pretokenized) j["tokens"] = *u.pretokenized;
        out += j.dump() + "\n";
    }
    write_text_file(path, out);
}

} // namespace topicspam
