#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "topicspam/classify.hpp"
#include "topicspam/error.hpp"
#include "topicspam/features.hpp"
#include "topicspam/rng.hpp"

namespace topicspam {

struct ConfusionMatrix {
    long long tp = 0, fn = 0, fp = 0, tn = 0;

    long long total() const { return tp + fn + fp + tn; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
        tp += o.tp;
        fn += o.fn;
        fp += o.fp;
        tn += o.tn;
        return *this;
    }
};

struct MetricValues {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2pr/(p+r). Each value is
// a single integer division; f1 uses the algebraically equal rational form
// 2tp/(2tp+fp+fn). Any 0/0 is defined as 0.
inline MetricValues metrics(const ConfusionMatrix& cm) {
    auto ratio = [](long long num, long long den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    MetricValues m;
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    m.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    return m;
}

// Deterministic stratified partition: within each class, indices are
// shuffled by a class-keyed stream and dealt round-robin, so per-fold class
// counts differ by at most one from exact proportionality.
inline std::vector<int> stratified_kfold(const std::vector<Label>& labels, int k,
                                         std::uint64_t seed) {
    if (k < 2)
        throw InvalidConfigError("fold count must be at least 2");
    std::vector<int> pos_idx, neg_idx;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
        (labels[static_cast<std::size_t>(i)] == Label::Spammer ? pos_idx : neg_idx).push_back(i);
    if (static_cast<int>(pos_idx.size()) < k || static_cast<int>(neg_idx.size()) < k)
        throw TooFewPerClassError("every class needs at least k=" + std::to_string(k) +
                                  " members (have " + std::to_string(pos_idx.size()) +
                                  " spammers, " + std::to_string(neg_idx.size()) +
                                  " legitimate)");
    std::vector<int> fold(labels.size(), -1);
    int cls = 0;
    for (auto* idx : {&pos_idx, &neg_idx}) {
        Rng rng(mix64(seed, static_cast<std::uint64_t>(0xf01d + cls)));
        rng.shuffle(*idx);
        for (std::size_t p = 0; p < idx->size(); ++p)
            fold[static_cast<std::size_t>((*idx)[p])] = static_cast<int>(p % static_cast<std::size_t>(k));
        ++cls;
    }
    return fold;
}

enum class FeatureProtocol { FoldFit, Global };

inline const char* protocol_name(FeatureProtocol p) {
    return p == FeatureProtocol::FoldFit ? "fold_fit" : "global";
}

// One feature-set selection: any '+'-combination of the four atoms.
struct FeatureSpec {
    bool goss = false;
    bool loss = false;
    bool raw = false;
    bool uc = false;

    static FeatureSpec parse(const std::string& s) {
        FeatureSpec spec;
        std::size_t start = 0;
        while (start <= s.size()) {
            std::size_t pos = s.find('+', start);
            std::string atom =
                pos == std::string::npos ? s.substr(start) : s.substr(start, pos - start);
            if (atom == "goss") spec.goss = true;
            else if (atom == "loss") spec.loss = true;
            else if (atom == "raw") spec.raw = true;
            else if (atom == "uc") spec.uc = true;
            else
                throw ConfigError("unknown feature set atom '" + atom +
                                  "' (expected goss, loss, raw or uc)");
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return spec;
    }

    std::string name() const {
        std::string out;
        auto add = [&](const char* a) {
            if (!out.empty()) out += '+';
            out += a;
        };
        if (goss) add("goss");
        if (loss) add("loss");
        if (raw) add("raw");
        if (uc) add("uc");
        return out;
    }

    bool needs_topics() const { return goss || loss || raw; }
    bool empty() const { return !goss && !loss && !raw && !uc; }
};

struct FoldResult {
    ConfusionMatrix cm;
    MetricValues m;
};

struct EvalReport {
    std::string feature_set;
    std::string classifier;
    std::string protocol;
    std::uint64_t model_seed = 0;
    std::uint64_t eval_seed = 0;
    std::string fold_hash;
    std::vector<FoldResult> per_fold;
    ConfusionMatrix pooled;
    MetricValues pooled_metrics;
    MetricValues fold_mean;
    MetricValues fold_std;
};

namespace detail {

inline std::string fold_assignment_hash(const std::vector<int>& fold) {
    std::string bytes;
    bytes.reserve(fold.size());
    for (int f : fold) bytes.push_back(static_cast<char>(f));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline MetricValues fold_mean_of(const std::vector<FoldResult>& folds) {
    MetricValues m;
    for (const auto& f : folds) {
        m.precision += f.m.precision;
        m.recall += f.m.recall;
        m.f1 += f.m.f1;
        m.accuracy += f.m.accuracy;
    }
    const double k = static_cast<double>(folds.size());
    m.precision /= k;
    m.recall /= k;
    m.f1 /= k;
    m.accuracy /= k;
    return m;
}

inline MetricValues fold_std_of(const std::vector<FoldResult>& folds, const MetricValues& mean) {
    MetricValues v;
    for (const auto& f : folds) {
        v.precision += (f.m.precision - mean.precision) * (f.m.precision - mean.precision);
        v.recall += (f.m.recall - mean.recall) * (f.m.recall - mean.recall);
        v.f1 += (f.m.f1 - mean.f1) * (f.m.f1 - mean.f1);
        v.accuracy += (f.m.accuracy - mean.accuracy) * (f.m.accuracy - mean.accuracy);
    }
    const double k = static_cast<double>(folds.size());
    v.precision = std::sqrt(v.precision / k);
    v.recall = std::sqrt(v.recall / k);
    v.f1 = std::sqrt(v.f1 / k);
    v.accuracy = std::sqrt(v.accuracy / k);
    return v;
}

inline ConfusionMatrix confusion_of(const std::vector<Label>& truth,
                                    const std::vector<Label>& pred) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == Label::Spammer;
        const bool p = pred[i] == Label::Spammer;
        if (t && p) ++cm.tp;
        else if (t && !p) ++cm.fn;
        else if (!t && p) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

template <class FeaturesForFold>
EvalReport run_cv(const std::vector<Label>& labels, ClassifierKind kind,
                  const TrainParams& params, int k, std::uint64_t eval_seed,
                  FeaturesForFold&& features_for_fold) {
    EvalReport rep;
    rep.classifier = classifier_name(kind);
    rep.eval_seed = eval_seed;
    auto fold = stratified_kfold(labels, k, eval_seed);
    rep.fold_hash = fold_assignment_hash(fold);

    for (int f = 0; f < k; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < static_cast<int>(labels.size()); ++i)
            (fold[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);

        auto [train_feat, test_feat] = features_for_fold(train_rows, test_rows);
        LabeledSet train_set;
        train_set.features = std::move(train_feat);
        std::vector<Label> test_truth;
        for (int i : train_rows) train_set.labels.push_back(labels[static_cast<std::size_t>(i)]);
        for (int i : test_rows) test_truth.push_back(labels[static_cast<std::size_t>(i)]);

        const std::uint64_t fit_seed = mix64(eval_seed, static_cast<std::uint64_t>(1000 + f));
        Classifier cl = fit(kind, train_set, params, fit_seed);
        auto pred = predict(cl, test_feat);

        FoldResult fr;
        fr.cm = confusion_of(test_truth, pred);
        fr.m = metrics(fr.cm);
        rep.pooled += fr.cm;
        rep.per_fold.push_back(fr);
    }
    rep.pooled_metrics = metrics(rep.pooled);
    rep.fold_mean = fold_mean_of(rep.per_fold);
    rep.fold_std = fold_std_of(rep.per_fold, rep.fold_mean);
    return rep;
}

} // namespace detail

// Cross-validation over a precomputed feature matrix (the "global" protocol:
// any population statistics inside the features were taken over all users).
inline EvalReport cross_validate(const LabeledSet& data, ClassifierKind kind,
                                 const TrainParams& params, int k, std::uint64_t eval_seed) {
    if (data.features.rows() != static_cast<int>(data.labels.size()))
        throw DimensionMismatchError("feature rows and label count disagree");
    auto rep = detail::run_cv(
        data.labels, kind, params, k, eval_seed,
        [&](const std::vector<int>& train_rows, const std::vector<int>& test_rows) {
            FeatureMatrix train{data.features.values.select_rows(train_rows),
                                data.features.column_names};
            FeatureMatrix test{data.features.values.select_rows(test_rows),
                               data.features.column_names};
            return std::pair{std::move(train), std::move(test)};
        });
    rep.protocol = protocol_name(FeatureProtocol::Global);
    return rep;
}

// Full harness over the topic matrix. Under FoldFit the global-score
// population statistics come from the training split of each fold only;
// under Global they are taken once over all users, mirroring a single
// whole-dataset feature pass.
inline EvalReport cross_validate(const Matrix& X, const std::vector<RawUser>* users,
                                 const std::vector<Label>& labels, const FeatureSpec& spec,
                                 ClassifierKind kind, const TrainParams& params, int k,
                                 std::uint64_t eval_seed, FeatureProtocol protocol) {
    if (spec.empty())
        throw ConfigError("empty feature set selection");
    if (spec.needs_topics() && X.rows != static_cast<int>(labels.size()))
        throw DimensionMismatchError("topic matrix rows and label count disagree");
    if (spec.uc && users == nullptr)
        throw ConfigError("content features requested but no raw posts available");

    // population-independent pieces, computed once
    FeatureMatrix loss_all, raw_all, uc_all;
    if (spec.loss) loss_all = loss(X);
    if (spec.raw) raw_all = raw_topics(X);
    if (spec.uc) uc_all = uc_features(*users);
    GossStats goss_global;
    if (spec.goss && protocol == FeatureProtocol::Global) goss_global = goss_fit(X);

    auto assemble = [&](const std::vector<int>& rows,
                        const GossStats& gs) -> FeatureMatrix {
        std::vector<FeatureMatrix> parts;
        if (spec.goss) {
            auto g = goss_apply(X.select_rows(rows), gs);
            parts.push_back(std::move(g));
        }
        if (spec.loss)
            parts.push_back({loss_all.values.select_rows(rows), loss_all.column_names});
        if (spec.raw)
            parts.push_back({raw_all.values.select_rows(rows), raw_all.column_names});
        if (spec.uc)
            parts.push_back({uc_all.values.select_rows(rows), uc_all.column_names});
        return concat(parts);
    };

    auto rep = detail::run_cv(
        labels, kind, params, k, eval_seed,
        [&](const std::vector<int>& train_rows, const std::vector<int>& test_rows) {
            GossStats gs;
            if (spec.goss)
                gs = protocol == FeatureProtocol::FoldFit ? goss_fit_rows(X, train_rows)
                                                          : goss_global;
            return std::pair{assemble(train_rows, gs), assemble(test_rows, gs)};
        });
    rep.feature_set = spec.name();
    rep.protocol = protocol_name(protocol);
    return rep;
}

} // namespace topicspam
