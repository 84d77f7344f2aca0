#pragma once

#include <cmath>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "topicspam/corpus.hpp"
#include "topicspam/error.hpp"
#include "topicspam/matrix.hpp"

namespace topicspam {

struct FeatureMatrix {
    Matrix values;
    std::vector<std::string> column_names;

    int rows() const { return values.rows; }
    int cols() const { return values.cols; }
};

namespace detail {

inline void check_finite(const FeatureMatrix& f, const char* what) {
    for (double v : f.values.data)
        if (!std::isfinite(v))
            throw NanFeatureError(std::string(what) + " produced a non-finite value");
    if (static_cast<int>(f.column_names.size()) != f.values.cols)
        throw InternalError(std::string(what) + ": column name count mismatch");
}

} // namespace detail

// Per-topic population statistics for the global standard score: the column
// mean and the root of the summed squared deviations. Captured from a
// training population and reusable on unseen users, which keeps fold
// evaluation leakage-free.
struct GossStats {
    std::vector<double> mu;
    std::vector<double> denom; // 0 marks a constant column; scores become 0
};

inline GossStats goss_fit_rows(const Matrix& X, std::span<const int> rows) {
    if (rows.size() < 2)
        throw TooFewUsersError("global standard score needs at least 2 users, got " +
                               std::to_string(rows.size()));
    const int K = X.cols;
    GossStats st;
    st.mu.assign(static_cast<std::size_t>(K), 0.0);
    st.denom.assign(static_cast<std::size_t>(K), 0.0);
    for (int r : rows)
        for (int k = 0; k < K; ++k) st.mu[static_cast<std::size_t>(k)] += X.at(r, k);
    for (int k = 0; k < K; ++k) st.mu[static_cast<std::size_t>(k)] /= static_cast<double>(rows.size());
    for (int r : rows)
        for (int k = 0; k < K; ++k) {
            const double d = X.at(r, k) - st.mu[static_cast<std::size_t>(k)];
            st.denom[static_cast<std::size_t>(k)] += d * d;
        }
    for (int k = 0; k < K; ++k)
        st.denom[static_cast<std::size_t>(k)] = std::sqrt(st.denom[static_cast<std::size_t>(k)]);
    return st;
}

inline GossStats goss_fit(const Matrix& X) {
    std::vector<int> all(static_cast<std::size_t>(X.rows));
    for (int i = 0; i < X.rows; ++i) all[static_cast<std::size_t>(i)] = i;
    return goss_fit_rows(X, all);
}

// GOSS(x_ik) = (x_ik - mu(x_k)) / sqrt(sum_i (x_ik - mu(x_k))^2)
// The denominator is the root of the plain sum of squared deviations, no 1/n
// factor. A constant column would divide by zero; its scores are defined 0.
inline FeatureMatrix goss_apply(const Matrix& X, const GossStats& st) {
    if (static_cast<int>(st.mu.size()) != X.cols)
        throw DimensionMismatchError("goss statistics were fitted for a different topic count");
    FeatureMatrix out;
    out.values = Matrix(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i)
        for (int k = 0; k < X.cols; ++k) {
            const double d = st.denom[static_cast<std::size_t>(k)];
            out.values.at(i, k) =
                d == 0.0 ? 0.0 : (X.at(i, k) - st.mu[static_cast<std::size_t>(k)]) / d;
        }
    for (int k = 0; k < X.cols; ++k) out.column_names.push_back("goss_" + std::to_string(k));
    detail::check_finite(out, "goss");
    return out;
}

inline FeatureMatrix goss(const Matrix& X) { return goss_apply(X, goss_fit(X)); }

// LOSS(x_ik) = (x_ik - mu(x_i)) / sqrt(sum_k (x_ik - mu(x_i))^2)
// Same form as GOSS but standardized along each user's own row.
inline FeatureMatrix loss(const Matrix& X) {
    if (X.cols < 2)
        throw TooFewTopicsError("local standard score needs at least 2 topics, got " +
                                std::to_string(X.cols));
    FeatureMatrix out;
    out.values = Matrix(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i) {
        double mu = 0.0;
        for (int k = 0; k < X.cols; ++k) mu += X.at(i, k);
        mu /= static_cast<double>(X.cols);
        double ss = 0.0;
        for (int k = 0; k < X.cols; ++k) {
            const double d = X.at(i, k) - mu;
            ss += d * d;
        }
        const double denom = std::sqrt(ss);
        for (int k = 0; k < X.cols; ++k)
            out.values.at(i, k) = denom == 0.0 ? 0.0 : (X.at(i, k) - mu) / denom;
    }
    for (int k = 0; k < X.cols; ++k) out.column_names.push_back("loss_" + std::to_string(k));
    detail::check_finite(out, "loss");
    return out;
}

// the unscaled topic probabilities themselves, as a baseline feature set
inline FeatureMatrix raw_topics(const Matrix& X) {
    FeatureMatrix out;
    out.values = X;
    for (int k = 0; k < X.cols; ++k) out.column_names.push_back("raw_" + std::to_string(k));
    detail::check_finite(out, "raw");
    return out;
}

inline FeatureMatrix concat(const std::vector<FeatureMatrix>& mats) {
    if (mats.empty())
        throw ShapeMismatchError("concat of zero feature matrices");
    const int n = mats.front().rows();
    int d = 0;
    std::unordered_set<std::string> seen;
    for (const auto& m : mats) {
        if (m.rows() != n)
            throw ShapeMismatchError("feature matrices disagree on row count: " +
                                     std::to_string(m.rows()) + " vs " + std::to_string(n));
        for (const auto& name : m.column_names)
            if (!seen.insert(name).second)
                throw DuplicateColumnError("duplicate feature column '" + name + "'");
        d += m.cols();
    }
    FeatureMatrix out;
    out.values = Matrix(n, d);
    out.column_names.reserve(static_cast<std::size_t>(d));
    int col = 0;
    for (const auto& m : mats) {
        for (int c = 0; c < m.cols(); ++c) {
            for (int r = 0; r < n; ++r) out.values.at(r, col) = m.values.at(r, c);
            out.column_names.push_back(m.column_names[static_cast<std::size_t>(c)]);
            ++col;
        }
    }
    return out;
}

// Content counts over the raw posts: links per tweet, mentions per tweet and
// their unique variants. Whitespace tokens; a link is a token with an
// http(s):// prefix, a mention starts with '@'. Uniqueness is exact string
// match.
inline FeatureMatrix uc_features(const std::vector<RawUser>& users) {
    FeatureMatrix out;
    out.values = Matrix(static_cast<int>(users.size()), 4);
    out.column_names = {"uc_links_per_tweet", "uc_mentions_per_tweet",
                        "uc_unique_mentions_per_tweet", "uc_unique_links_per_tweet"};
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto& u = users[i];
        if (u.posts.empty())
            throw ZeroPostsError("user '" + u.user_id + "' has no posts; content features "
                                 "need raw post text");
        long long links = 0, mentions = 0;
        std::set<std::string> uniq_links, uniq_mentions;
        for (const auto& post : u.posts) {
            std::istringstream ss(post);
            std::string tok;
            while (ss >> tok) {
                if (tok.rfind("http://", 0) == 0 || tok.rfind("https://", 0) == 0) {
                    ++links;
                    uniq_links.insert(tok);
                } else if (tok.size() > 1 && tok[0] == '@') {
                    ++mentions;
                    uniq_mentions.insert(tok);
                }
            }
        }
        const double n_posts = static_cast<double>(u.posts.size());
        out.values.at(static_cast<int>(i), 0) = static_cast<double>(links) / n_posts;
        out.values.at(static_cast<int>(i), 1) = static_cast<double>(mentions) / n_posts;
        out.values.at(static_cast<int>(i), 2) =
            static_cast<double>(uniq_mentions.size()) / n_posts;
        out.values.at(static_cast<int>(i), 3) = static_cast<double>(uniq_links.size()) / n_posts;
    }
    detail::check_finite(out, "uc");
    return out;
}

} // namespace topicspam
