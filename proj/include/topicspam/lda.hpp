#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "topicspam/corpus.hpp"
#include "topicspam/error.hpp"
#include "topicspam/matrix.hpp"
#include "topicspam/rng.hpp"

namespace topicspam {

struct LdaConfig {
    int topics = 15;
    double alpha = 0.3;
    double beta = 0.01;
    int iterations = 1000;
    int burn_in = 200;
    std::uint64_t seed = 1;
    // off: theta/psi from the final sweep; on: averaged over post-burn-in
    // sweeps taken every average_every sweeps
    bool average = false;
    int average_every = 10;
};

// Raw collapsed-sampler tallies. Exposed so the count-consistency audit can
// run against a finished fit.
struct SamplerState {
    std::vector<std::vector<int>> z; // z[d][j]: topic of token j of doc d
    std::vector<std::vector<int>> doc_topic;  // n_dk, n x K
    std::vector<std::vector<int>> topic_word; // n_kw, K x V
    std::vector<long long> topic_total;       // n_k, K
};

struct TopicModel {
    LdaConfig config;
    Vocabulary vocabulary;
    std::vector<std::string> doc_ids; // theta row order == fit input order
    Matrix psi;                       // K x V, rows sum to 1
    Matrix theta;                     // n x K, rows sum to 1
};

namespace detail {

// Stream seed for one document in one sweep. Keyed by user id, not position,
// so the trajectory of a document is independent of corpus order.
inline std::uint64_t doc_stream_seed(std::uint64_t seed, const std::string& user_id,
                                     int sweep) {
    return mix64(mix64(seed, fnv1a64(user_id)), static_cast<std::uint64_t>(sweep));
}

inline void validate_lda_config(const LdaConfig& cfg) {
    if (cfg.topics < 2)
        throw InvalidConfigError("topic count must be at least 2, got " +
                                 std::to_string(cfg.topics));
    if (cfg.alpha <= 0.0 || cfg.beta <= 0.0)
        throw InvalidConfigError("alpha and beta must be positive");
    if (cfg.iterations < 1)
        throw InvalidConfigError("iterations must be positive");
    if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
        throw InvalidConfigError("burn_in must be in [0, iterations)");
    if (cfg.average && cfg.average_every < 1)
        throw InvalidConfigError("average_every must be positive");
}

} // namespace detail

// checks that the count matrices are exactly the tallies of z
inline void audit_counts(const SamplerState& s, const std::vector<EncodedDoc>& docs, int K,
                         int V) {
    const int n = static_cast<int>(docs.size());
    std::vector<std::vector<int>> dk(n, std::vector<int>(K, 0));
    std::vector<std::vector<int>> kw(K, std::vector<int>(V, 0));
    std::vector<long long> kt(K, 0);
    for (int d = 0; d < n; ++d) {
        if (s.z[d].size() != docs[d].tokens.size())
            throw InternalError("sampler audit: z length mismatch for doc " + std::to_string(d));
        for (std::size_t j = 0; j < s.z[d].size(); ++j) {
            int k = s.z[d][j];
            if (k < 0 || k >= K)
                throw InternalError("sampler audit: topic assignment out of range");
            ++dk[d][k];
            ++kw[k][docs[d].tokens[j]];
            ++kt[k];
        }
    }
    if (dk != s.doc_topic || kw != s.topic_word || kt != s.topic_total)
        throw InternalError("sampler audit: counts do not equal the histogram of z");
}

struct FitResult {
    TopicModel model;
    SamplerState state;
};

// Collapsed Gibbs sampling. Per sweep every token's topic is resampled from
//   p(z = k | rest) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)
// with the token's current assignment removed from the counts. Documents are
// swept in lexicographic user_id order with per-(document, sweep) RNG
// streams, so the fitted model is invariant to input order up to the
// matching row permutation of theta.
inline FitResult fit_with_state(const std::vector<EncodedDoc>& docs, const Vocabulary& vocab,
                                const LdaConfig& cfg) {
    detail::validate_lda_config(cfg);
    if (docs.empty())
        throw EmptyCorpusError("cannot fit a topic model on zero documents");
    const int n = static_cast<int>(docs.size());
    const int K = cfg.topics;
    const int V = vocab.size();
    for (const auto& d : docs)
        for (int w : d.tokens)
            if (w < 0 || w >= V)
                throw InternalError("token index out of vocabulary range in doc '" + d.user_id +
                                    "'");

    // canonical sweep order, independent of input order
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return docs[a].user_id < docs[b].user_id; });

    SamplerState s;
    s.z.resize(static_cast<std::size_t>(n));
    s.doc_topic.assign(static_cast<std::size_t>(n), std::vector<int>(K, 0));
    s.topic_word.assign(static_cast<std::size_t>(K), std::vector<int>(V, 0));
    s.topic_total.assign(static_cast<std::size_t>(K), 0);

    // init: uniform random assignment, per-document stream
    for (int d : order) {
        const auto& toks = docs[d].tokens;
        Rng rng(detail::doc_stream_seed(cfg.seed, docs[d].user_id, 0));
        auto& zd = s.z[d];
        zd.resize(toks.size());
        for (std::size_t j = 0; j < toks.size(); ++j) {
            int k = rng.uniform_int(K);
            zd[j] = k;
            ++s.doc_topic[d][k];
            ++s.topic_word[k][toks[j]];
            ++s.topic_total[k];
        }
    }

    const double vbeta = static_cast<double>(V) * cfg.beta;
    std::vector<double> cumulative(static_cast<std::size_t>(K));

    Matrix theta_acc(n, K);
    Matrix psi_acc(K, V);
    int acc_count = 0;

    auto estimate_theta = [&](Matrix& theta) {
        for (int d = 0; d < n; ++d) {
            const double len = static_cast<double>(docs[d].tokens.size());
            const double denom = len + static_cast<double>(K) * cfg.alpha;
            for (int k = 0; k < K; ++k)
                theta.at(d, k) = (static_cast<double>(s.doc_topic[d][k]) + cfg.alpha) / denom;
        }
    };
    auto estimate_psi = [&](Matrix& psi) {
        for (int k = 0; k < K; ++k) {
            const double denom = static_cast<double>(s.topic_total[k]) + vbeta;
            for (int w = 0; w < V; ++w)
                psi.at(k, w) = (static_cast<double>(s.topic_word[k][w]) + cfg.beta) / denom;
        }
    };

    for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
        for (int d : order) {
            const auto& toks = docs[d].tokens;
            if (toks.empty()) continue;
            Rng rng(detail::doc_stream_seed(cfg.seed, docs[d].user_id, sweep));
            auto& zd = s.z[d];
            auto& ndk = s.doc_topic[d];
            for (std::size_t j = 0; j < toks.size(); ++j) {
                const int w = toks[j];
                const int old_k = zd[j];
                --ndk[old_k];
                --s.topic_word[old_k][w];
                --s.topic_total[old_k];

                double total = 0.0;
                for (int k = 0; k < K; ++k) {
                    total += (static_cast<double>(ndk[k]) + cfg.alpha) *
                             (static_cast<double>(s.topic_word[k][w]) + cfg.beta) /
                             (static_cast<double>(s.topic_total[k]) + vbeta);
                    cumulative[static_cast<std::size_t>(k)] = total;
                }
                const double u = rng.next_double() * total;
                int new_k = 0;
                while (new_k < K - 1 && u >= cumulative[static_cast<std::size_t>(new_k)])
                    ++new_k;

                zd[j] = new_k;
                ++ndk[new_k];
                ++s.topic_word[new_k][w];
                ++s.topic_total[new_k];
            }
        }
        if (cfg.average && sweep > cfg.burn_in &&
            (sweep - cfg.burn_in - 1) % cfg.average_every == 0) {
            Matrix th(n, K), ps(K, V);
            estimate_theta(th);
            estimate_psi(ps);
            for (std::size_t i = 0; i < th.data.size(); ++i) theta_acc.data[i] += th.data[i];
            for (std::size_t i = 0; i < ps.data.size(); ++i) psi_acc.data[i] += ps.data[i];
            ++acc_count;
        }
    }

    TopicModel model;
    model.config = cfg;
    model.vocabulary = vocab;
    model.doc_ids.reserve(static_cast<std::size_t>(n));
    for (const auto& d : docs) model.doc_ids.push_back(d.user_id);
    model.theta = Matrix(n, K);
    model.psi = Matrix(K, V);
    if (cfg.average && acc_count > 0) {
        for (std::size_t i = 0; i < theta_acc.data.size(); ++i)
            model.theta.data[i] = theta_acc.data[i] / acc_count;
        for (std::size_t i = 0; i < psi_acc.data.size(); ++i)
            model.psi.data[i] = psi_acc.data[i] / acc_count;
    } else {
        estimate_theta(model.theta);
        estimate_psi(model.psi);
    }
    return {std::move(model), std::move(s)};
}

inline TopicModel fit(const std::vector<EncodedDoc>& docs, const Vocabulary& vocab,
                      const LdaConfig& cfg) {
    return fit_with_state(docs, vocab, cfg).model;
}

// X[i] = theta_i
inline Matrix topic_matrix(const TopicModel& model) { return model.theta; }

// Gibbs over a single held-out document with the topic-word side frozen at
// the trained counts (psi is used directly; it is the smoothed normalized
// count table). The returned vector averages the smoothed topic proportions
// over the last half of the sweeps.
inline std::vector<double> infer_held_out(const TopicModel& model, const std::vector<int>& doc,
                                          int sweeps, std::uint64_t seed) {
    if (doc.empty())
        throw EmptyDocumentError("held-out document has no in-vocabulary tokens");
    if (sweeps < 1)
        throw InvalidConfigError("held-out inference needs at least one sweep");
    const int K = model.config.topics;
    const double alpha = model.config.alpha;
    for (int w : doc)
        if (w < 0 || w >= model.vocabulary.size())
            throw InternalError("held-out token index out of range");

    Rng rng(mix64(seed, 0x9d5ce1ad3e2bb1c7ULL));
    std::vector<int> z(doc.size());
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (std::size_t j = 0; j < doc.size(); ++j) {
        z[j] = rng.uniform_int(K);
        ++counts[static_cast<std::size_t>(z[j])];
    }

    std::vector<double> cumulative(static_cast<std::size_t>(K));
    std::vector<double> acc(static_cast<std::size_t>(K), 0.0);
    int acc_n = 0;
    const int collect_from = sweeps - sweeps / 2 + 1; // last half of sweeps
    const double denom = static_cast<double>(doc.size()) + K * alpha;

    for (int sweep = 1; sweep <= sweeps; ++sweep) {
        for (std::size_t j = 0; j < doc.size(); ++j) {
            const int w = doc[j];
            --counts[static_cast<std::size_t>(z[j])];
            double total = 0.0;
            for (int k = 0; k < K; ++k) {
                total += (static_cast<double>(counts[static_cast<std::size_t>(k)]) + alpha) *
                         model.psi.at(k, w);
                cumulative[static_cast<std::size_t>(k)] = total;
            }
            const double u = rng.next_double() * total;
            int new_k = 0;
            while (new_k < K - 1 && u >= cumulative[static_cast<std::size_t>(new_k)]) ++new_k;
            z[j] = new_k;
            ++counts[static_cast<std::size_t>(new_k)];
        }
        if (sweep >= collect_from) {
            for (int k = 0; k < K; ++k)
                acc[static_cast<std::size_t>(k)] +=
                    (static_cast<double>(counts[static_cast<std::size_t>(k)]) + alpha) / denom;
            ++acc_n;
        }
    }
    for (auto& v : acc) v /= static_cast<double>(acc_n);
    return acc;
}

// sum over tokens of log sum_k theta_dk * psi_kw; docs must be the training
// corpus in fit order (theta rows align by position)
inline double log_likelihood(const TopicModel& model, const std::vector<EncodedDoc>& docs) {
    if (static_cast<int>(docs.size()) != model.theta.rows)
        throw DimensionMismatchError("log_likelihood: document count does not match theta rows");
    const int K = model.config.topics;
    double ll = 0.0;
    for (int d = 0; d < static_cast<int>(docs.size()); ++d) {
        for (int w : docs[static_cast<std::size_t>(d)].tokens) {
            double p = 0.0;
            for (int k = 0; k < K; ++k) p += model.theta.at(d, k) * model.psi.at(k, w);
            ll += std::log(p);
        }
    }
    return ll;
}

} // namespace topicspam
