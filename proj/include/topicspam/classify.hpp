#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "topicspam/corpus.hpp"
#include "topicspam/error.hpp"
#include "topicspam/features.hpp"
#include "topicspam/rng.hpp"

namespace topicspam {

enum class ClassifierKind { LinearSvm, Adaboost, RandomForest };

inline const char* classifier_name(ClassifierKind k) {
    switch (k) {
    case ClassifierKind::LinearSvm: return "svm";
    case ClassifierKind::Adaboost: return "adaboost";
    case ClassifierKind::RandomForest: return "rf";
    }
    return "?";
}

inline ClassifierKind parse_classifier(const std::string& s) {
    if (s == "svm") return ClassifierKind::LinearSvm;
    if (s == "adaboost") return ClassifierKind::Adaboost;
    if (s == "rf") return ClassifierKind::RandomForest;
    throw ConfigError("unknown classifier '" + s + "' (expected svm, adaboost or rf)");
}

struct LabeledSet {
    FeatureMatrix features;
    std::vector<Label> labels;
};

struct TrainParams {
    double svm_lambda = 1e-4;
    int svm_epochs = 100;
    int ada_rounds = 100;
    int rf_trees = 100;
    // optional per-class weights proportional to n / (2 * n_class); off to
    // mirror the plain protocol
    bool class_weighting = false;
};

// depth-1 weak learner: predicts polarity if x[feature] <= threshold, else
// -polarity (labels live in {+1 spammer, -1 legitimate})
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;
    double weight = 1.0; // boosting stage weight

    int raw_predict(std::span<const double> x) const {
        int side = x[static_cast<std::size_t>(feature)] <= threshold ? 1 : -1;
        return side * polarity;
    }
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_label = 1; // +1 / -1
};

struct Tree {
    std::vector<TreeNode> nodes;

    int predict(std::span<const double> x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(idx)];
            idx = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(idx)].leaf_label;
    }
};

// Learned model. The linear weights are stored in raw feature space: the
// margin was trained on standardized columns and the mean/scale then folded
// into weights and bias, so predict needs no extra transform and the score of
// the zero vector is exactly the bias. Stump and tree thresholds compare raw
// values directly.
struct Classifier {
    ClassifierKind kind = ClassifierKind::LinearSvm;
    TrainParams params;
    std::uint64_t seed = 0;

    // per-column standardization captured at fit time
    std::vector<double> feat_mean;
    std::vector<double> feat_scale;

    // LinearSvm
    std::vector<double> weights;
    double bias = 0.0;

    // Adaboost
    std::vector<Stump> stumps;

    // RandomForest
    std::vector<Tree> trees;

    int dims() const { return static_cast<int>(feat_mean.size()); }
};

namespace detail {

constexpr std::uint64_t kTreeStreamTag = 0x666f726573743a74ULL;
constexpr std::uint64_t kSvmStreamTag = 0x73766d3a73686666ULL;

inline std::vector<int> to_pm1(const std::vector<Label>& labels) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        y[i] = labels[i] == Label::Spammer ? 1 : -1;
    return y;
}

inline void validate_training_set(const LabeledSet& data) {
    if (data.features.rows() != static_cast<int>(data.labels.size()))
        throw DimensionMismatchError("feature rows and label count disagree");
    if (data.labels.empty())
        throw SingleClassError("empty training set");
    bool pos = false, neg = false;
    for (Label l : data.labels) (l == Label::Spammer ? pos : neg) = true;
    if (!pos || !neg)
        throw SingleClassError("training set must contain both classes");
    for (double v : data.features.values.data)
        if (!std::isfinite(v))
            throw NanFeatureError("training features contain NaN or Inf");
}

inline std::vector<double> sample_weights(const std::vector<int>& y, bool class_weighting) {
    const std::size_t n = y.size();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    if (!class_weighting) return w;
    std::size_t n_pos = 0;
    for (int v : y)
        if (v > 0) ++n_pos;
    const std::size_t n_neg = n - n_pos;
    const double wp = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    const double wn = static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = y[i] > 0 ? wp : wn;
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

struct Standardizer {
    std::vector<double> mean, scale;

    static Standardizer fit(const Matrix& X) {
        Standardizer s;
        s.mean.assign(static_cast<std::size_t>(X.cols), 0.0);
        s.scale.assign(static_cast<std::size_t>(X.cols), 1.0);
        if (X.rows == 0) return s;
        for (int r = 0; r < X.rows; ++r)
            for (int c = 0; c < X.cols; ++c) s.mean[static_cast<std::size_t>(c)] += X.at(r, c);
        for (auto& m : s.mean) m /= static_cast<double>(X.rows);
        std::vector<double> ss(static_cast<std::size_t>(X.cols), 0.0);
        for (int r = 0; r < X.rows; ++r)
            for (int c = 0; c < X.cols; ++c) {
                const double d = X.at(r, c) - s.mean[static_cast<std::size_t>(c)];
                ss[static_cast<std::size_t>(c)] += d * d;
            }
        for (int c = 0; c < X.cols; ++c) {
            const double sd = std::sqrt(ss[static_cast<std::size_t>(c)] / X.rows);
            s.scale[static_cast<std::size_t>(c)] = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& X) const {
        Matrix out(X.rows, X.cols);
        for (int r = 0; r < X.rows; ++r)
            for (int c = 0; c < X.cols; ++c)
                out.at(r, c) = (X.at(r, c) - mean[static_cast<std::size_t>(c)]) /
                               scale[static_cast<std::size_t>(c)];
        return out;
    }
};

// Weighted best stump over all features. Thresholds sit at midpoints between
// sorted distinct values; the ascending scan order makes ties resolve to the
// lowest feature index, then the lowest threshold, then polarity +1.
inline Stump best_stump(const Matrix& X, const std::vector<int>& y,
                        const std::vector<double>& w) {
    const int n = X.rows;
    const int d = X.cols;
    double total_pos = 0.0;
    for (int i = 0; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] > 0) total_pos += w[static_cast<std::size_t>(i)];
    double total = std::accumulate(w.begin(), w.end(), 0.0);

    Stump best;
    double best_err = std::numeric_limits<double>::infinity();
    bool found = false;

    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int f = 0; f < d; ++f) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return X.at(a, f) < X.at(b, f); });
        double pos_below = 0.0; // weight of positives with x <= threshold
        double neg_below = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            const int i = idx[static_cast<std::size_t>(p)];
            if (y[static_cast<std::size_t>(i)] > 0) pos_below += w[static_cast<std::size_t>(i)];
            else neg_below += w[static_cast<std::size_t>(i)];
            const double lo = X.at(i, f);
            const double hi = X.at(idx[static_cast<std::size_t>(p + 1)], f);
            if (lo == hi) continue;
            const double thr = lo + (hi - lo) / 2.0;
            // polarity +1 predicts positive at or below the threshold
            const double err_pos = neg_below + (total_pos - pos_below);
            const double err_neg = total - err_pos;
            if (err_pos < best_err) {
                best_err = err_pos;
                best = Stump{f, thr, 1, 1.0};
                found = true;
            }
            if (err_neg < best_err) {
                best_err = err_neg;
                best = Stump{f, thr, -1, 1.0};
                found = true;
            }
        }
    }
    if (!found) {
        // every feature is constant: constant classifier by majority weight
        double max0 = X.rows > 0 ? X.at(0, 0) : 0.0;
        for (int i = 1; i < n; ++i) max0 = std::max(max0, X.at(i, 0));
        best = Stump{0, max0, total_pos >= total - total_pos ? 1 : -1, 1.0};
    }
    return best;
}

inline void fit_adaboost(Classifier& cl, const Matrix& X, const std::vector<int>& y,
                         std::vector<double> w) {
    const int n = X.rows;
    for (int round = 0; round < cl.params.ada_rounds; ++round) {
        Stump st = best_stump(X, y, w);
        double eps = 0.0;
        for (int i = 0; i < n; ++i)
            if (st.raw_predict(X.row(i)) != y[static_cast<std::size_t>(i)])
                eps += w[static_cast<std::size_t>(i)];
        if (eps <= 0.0) {
            constexpr double eps_floor = 1e-12;
            st.weight = 0.5 * std::log((1.0 - eps_floor) / eps_floor);
            cl.stumps.push_back(st);
            break; // perfect weak learner, nothing left to reweight
        }
        if (eps >= 0.5) break; // no edge over chance, stop
        st.weight = 0.5 * std::log((1.0 - eps) / eps);
        cl.stumps.push_back(st);
        double z = 0.0;
        for (int i = 0; i < n; ++i) {
            w[static_cast<std::size_t>(i)] *= std::exp(
                -st.weight * y[static_cast<std::size_t>(i)] * st.raw_predict(X.row(i)));
            z += w[static_cast<std::size_t>(i)];
        }
        for (auto& v : w) v /= z;
    }
    if (cl.stumps.empty())
        cl.stumps.push_back(best_stump(X, y, w));
}

// Pegasos stochastic subgradient descent with the 1/(lambda t) step schedule
// and projection onto the 1/sqrt(lambda) ball. The bias rides along as an
// extra regularized coordinate against a constant-1 input.
inline void fit_svm(Classifier& cl, const Matrix& Xs, const std::vector<int>& y,
                    const std::vector<double>& w, std::uint64_t seed) {
    const int n = Xs.rows;
    const int d = Xs.cols;
    const double lambda = cl.params.svm_lambda;
    const double ball = 1.0 / std::sqrt(lambda);
    std::vector<double> wv(static_cast<std::size_t>(d) + 1, 0.0); // wv[d] is the bias
    // class weights act as relative factors on the per-sample loss; rescale
    // the normalized sample weights so they average 1
    std::vector<double> c(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) c[i] = w[i] * static_cast<double>(n);

    Rng rng(mix64(seed, kSvmStreamTag));
    std::vector<int> order(static_cast<std::size_t>(n));
    long long t = 0;
    for (int epoch = 0; epoch < cl.params.svm_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (int i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            auto x = Xs.row(i);
            double margin = wv[static_cast<std::size_t>(d)];
            for (int j = 0; j < d; ++j)
                margin += wv[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            margin *= y[static_cast<std::size_t>(i)];
            const double shrink = 1.0 - eta * lambda;
            for (auto& wj : wv) wj *= shrink;
            if (margin < 1.0) {
                const double step =
                    eta * c[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
                for (int j = 0; j < d; ++j)
                    wv[static_cast<std::size_t>(j)] += step * x[static_cast<std::size_t>(j)];
                wv[static_cast<std::size_t>(d)] += step;
            }
            double norm_sq = 0.0;
            for (double wj : wv) norm_sq += wj * wj;
            if (norm_sq > ball * ball) {
                const double scale = ball / std::sqrt(norm_sq);
                for (auto& wj : wv) wj *= scale;
            }
        }
    }
    cl.weights.assign(wv.begin(), wv.begin() + d);
    cl.bias = wv[static_cast<std::size_t>(d)];
}

// regularized hinge objective in the (standardized) training space; the bias
// is part of the regularized vector
inline double svm_objective(const std::vector<double>& weights, double bias, double lambda,
                            const Matrix& Xs, const std::vector<int>& y,
                            const std::vector<double>& sample_w) {
    double reg = bias * bias;
    for (double wj : weights) reg += wj * wj;
    reg *= lambda / 2.0;
    double hinge = 0.0;
    for (int i = 0; i < Xs.rows; ++i) {
        auto x = Xs.row(i);
        double m = bias;
        for (int j = 0; j < Xs.cols; ++j)
            m += weights[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
        m *= y[static_cast<std::size_t>(i)];
        hinge += sample_w[static_cast<std::size_t>(i)] * std::max(0.0, 1.0 - m);
    }
    return reg + hinge;
}

struct TreeBuilder {
    const Matrix& X;
    const std::vector<int>& y;
    const std::vector<double>& w;
    Rng& rng;
    Tree tree;

    int build(std::vector<int>& samples) {
        double pos_w = 0.0, total_w = 0.0;
        for (int i : samples) {
            total_w += w[static_cast<std::size_t>(i)];
            if (y[static_cast<std::size_t>(i)] > 0) pos_w += w[static_cast<std::size_t>(i)];
        }
        const int node_idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool pure = pos_w == 0.0 || pos_w == total_w;
        int best_f = -1;
        double best_thr = 0.0;
        double best_gini = std::numeric_limits<double>::infinity();
        if (!pure && samples.size() > 1) {
            for (int f : pick_candidates()) {
                std::stable_sort(samples.begin(), samples.end(), [&](int a, int b) {
                    return X.at(a, f) < X.at(b, f);
                });
                double pos_below = 0.0, w_below = 0.0;
                for (std::size_t p = 0; p + 1 < samples.size(); ++p) {
                    const int i = samples[p];
                    w_below += w[static_cast<std::size_t>(i)];
                    if (y[static_cast<std::size_t>(i)] > 0)
                        pos_below += w[static_cast<std::size_t>(i)];
                    const double lo = X.at(i, f);
                    const double hi = X.at(samples[p + 1], f);
                    if (lo == hi) continue;
                    const double thr = lo + (hi - lo) / 2.0;
                    const double wl = w_below, wr = total_w - w_below;
                    const double pl = pos_below, pr = pos_w - pos_below;
                    const double gl = 1.0 - (pl * pl + (wl - pl) * (wl - pl)) / (wl * wl);
                    const double gr = 1.0 - (pr * pr + (wr - pr) * (wr - pr)) / (wr * wr);
                    const double gini = (wl * gl + wr * gr) / total_w;
                    // candidates ascend and thresholds ascend, so a strict
                    // improvement keeps the lowest (feature, threshold) pair
                    if (gini < best_gini) {
                        best_gini = gini;
                        best_f = f;
                        best_thr = thr;
                    }
                }
            }
        }
        if (best_f < 0) {
            tree.nodes[static_cast<std::size_t>(node_idx)].feature = -1;
            tree.nodes[static_cast<std::size_t>(node_idx)].leaf_label =
                pos_w >= total_w - pos_w ? 1 : -1;
            return node_idx;
        }
        std::vector<int> left_s, right_s;
        for (int i : samples)
            (X.at(i, best_f) <= best_thr ? left_s : right_s).push_back(i);
        const int left = build(left_s);
        const int right = build(right_s);
        auto& nd = tree.nodes[static_cast<std::size_t>(node_idx)];
        nd.feature = best_f;
        nd.threshold = best_thr;
        nd.left = left;
        nd.right = right;
        return node_idx;
    }

    // random subset of ceil(sqrt(d)) distinct features, sorted for a
    // deterministic scan order
    std::vector<int> pick_candidates() {
        const int d = X.cols;
        std::vector<int> all(static_cast<std::size_t>(d));
        std::iota(all.begin(), all.end(), 0);
        const int m = std::min(d, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));
        for (int i = 0; i < m; ++i) {
            int j = i + rng.uniform_int(d - i);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        }
        all.resize(static_cast<std::size_t>(m));
        std::sort(all.begin(), all.end());
        return all;
    }
};

// one RNG stream per tree, derived from (seed, tree index): tree b is the
// same whether the forest has B or B' > B trees
inline void fit_forest(Classifier& cl, const Matrix& X, const std::vector<int>& y,
                       const std::vector<double>& w, std::uint64_t seed) {
    const int n = X.rows;
    cl.trees.reserve(static_cast<std::size_t>(cl.params.rf_trees));
    for (int b = 0; b < cl.params.rf_trees; ++b) {
        Rng rng(mix64(mix64(seed, kTreeStreamTag), static_cast<std::uint64_t>(b)));
        std::vector<int> boot(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) boot[static_cast<std::size_t>(i)] = rng.uniform_int(n);
        TreeBuilder builder{X, y, w, rng, {}};
        builder.build(boot);
        cl.trees.push_back(std::move(builder.tree));
    }
}

} // namespace detail

inline Classifier fit(ClassifierKind kind, const LabeledSet& data, const TrainParams& params,
                      std::uint64_t seed) {
    detail::validate_training_set(data);
    Classifier cl;
    cl.kind = kind;
    cl.params = params;
    cl.seed = seed;

    auto stdz = detail::Standardizer::fit(data.features.values);
    cl.feat_mean = stdz.mean;
    cl.feat_scale = stdz.scale;
    Matrix Xs = stdz.apply(data.features.values);
    auto y = detail::to_pm1(data.labels);
    auto w = detail::sample_weights(y, params.class_weighting);

    switch (kind) {
    case ClassifierKind::LinearSvm: {
        detail::fit_svm(cl, Xs, y, w, seed);
        // fold the standardization into raw-space weights and bias:
        //   w.x_std + b = sum_j (w_j/s_j) x_j + (b - sum_j w_j m_j / s_j)
        for (int j = 0; j < Xs.cols; ++j) {
            const double s = cl.feat_scale[static_cast<std::size_t>(j)];
            const double m = cl.feat_mean[static_cast<std::size_t>(j)];
            const double wj = cl.weights[static_cast<std::size_t>(j)];
            cl.weights[static_cast<std::size_t>(j)] = wj / s;
            cl.bias -= wj * m / s;
        }
        break;
    }
    case ClassifierKind::Adaboost:
        detail::fit_adaboost(cl, data.features.values, y, w);
        break;
    case ClassifierKind::RandomForest:
        detail::fit_forest(cl, data.features.values, y, w, seed);
        break;
    }
    return cl;
}

// LinearSvm: signed margin. Adaboost: weighted stump sum. RandomForest:
// positive-vote fraction minus one half. Zero scores count as positive.
inline std::vector<double> decision_scores(const Classifier& cl, const FeatureMatrix& features) {
    if (features.cols() != cl.dims())
        throw DimensionMismatchError("classifier expects " + std::to_string(cl.dims()) +
                                     " features, got " + std::to_string(features.cols()));
    const Matrix& X = features.values;
    std::vector<double> scores(static_cast<std::size_t>(X.rows), 0.0);
    switch (cl.kind) {
    case ClassifierKind::LinearSvm:
        for (int i = 0; i < X.rows; ++i) {
            auto x = X.row(i);
            double m = cl.bias;
            for (int j = 0; j < X.cols; ++j)
                m += cl.weights[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            scores[static_cast<std::size_t>(i)] = m;
        }
        break;
    case ClassifierKind::Adaboost:
        for (int i = 0; i < X.rows; ++i) {
            double sum = 0.0;
            for (const auto& stump : cl.stumps) sum += stump.weight * stump.raw_predict(X.row(i));
            scores[static_cast<std::size_t>(i)] = sum;
        }
        break;
    case ClassifierKind::RandomForest:
        for (int i = 0; i < X.rows; ++i) {
            int pos = 0;
            for (const auto& tr : cl.trees)
                if (tr.predict(X.row(i)) > 0) ++pos;
            scores[static_cast<std::size_t>(i)] =
                static_cast<double>(pos) / static_cast<double>(cl.trees.size()) - 0.5;
        }
        break;
    }
    return scores;
}

inline std::vector<Label> predict(const Classifier& cl, const FeatureMatrix& features) {
    auto scores = decision_scores(cl, features);
    std::vector<Label> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        out[i] = scores[i] >= 0.0 ? Label::Spammer : Label::Legitimate;
    return out;
}

} // namespace topicspam
