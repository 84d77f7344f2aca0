#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicspam/corpus.hpp"
#include "topicspam/error.hpp"
#include "topicspam/rng.hpp"

namespace topicspam {

// Labeled synthetic corpus with planted topics. Three user sub-classes with
// distinct topic-profile shapes: legitimate users spread over a few topics,
// polluters sit almost entirely on one, fakes are near-uniform. Topic word
// supports are disjoint, so every vocabulary word names its true topic and
// recovery can be scored without ambiguity.
struct SynthConfig {
    int n_legit = 100;
    int n_polluter = 50;
    int n_fake = 50;
    int topics_true = 5;
    int vocab_per_topic = 40;
    int doc_len = 300;       // tokens per user
    int tokens_per_post = 15;
    int legit_supports_min = 2;
    int legit_supports_max = 3;
    double legit_main = 3.0;
    double legit_rest = 0.05;
    double polluter_main = 10.0;
    double polluter_rest = 0.05;
    double fake_conc = 20.0;
    double url_rate = 0.0;     // expected injected links per post
    double mention_rate = 0.0; // expected injected mentions per post
    std::uint64_t seed = 1;
};

struct TrueUser {
    std::string user_id;
    std::string subclass; // legit | polluter | fake
    std::vector<double> theta;
};

struct SynthOutput {
    std::vector<RawUser> users;
    std::vector<TrueUser> truth;
};

namespace detail {

inline void validate_synth_config(const SynthConfig& c) {
    if (c.n_legit < 0 || c.n_polluter < 0 || c.n_fake < 0)
        throw InvalidConfigError("user counts must be nonnegative");
    if (c.n_legit + c.n_polluter + c.n_fake <= 0)
        throw InvalidConfigError("at least one user required");
    if (c.topics_true < 2)
        throw InvalidConfigError("need at least 2 planted topics");
    if (c.vocab_per_topic < 1 || c.doc_len < 1 || c.tokens_per_post < 1)
        throw InvalidConfigError("vocab_per_topic, doc_len and tokens_per_post must be positive");
    if (c.legit_supports_min < 1 || c.legit_supports_max < c.legit_supports_min ||
        c.legit_supports_max > c.topics_true)
        throw InvalidConfigError("legit support range must satisfy 1 <= min <= max <= topics");
    if (c.legit_main <= 0 || c.legit_rest <= 0 || c.polluter_main <= 0 || c.polluter_rest <= 0 ||
        c.fake_conc <= 0)
        throw InvalidConfigError("Dirichlet concentrations must be positive");
    if (c.url_rate < 0 || c.mention_rate < 0)
        throw InvalidConfigError("injection rates must be nonnegative");
}

} // namespace detail

// word j of topic k; supports are disjoint by construction
inline std::string planted_word(int topic, int j) {
    return "t" + std::to_string(topic) + "w" + std::to_string(j);
}

// inverse of planted_word, -1 for tokens outside the planted vocabulary
inline int true_topic_of_word(const std::string& word) {
    if (word.size() < 4 || word[0] != 't') return -1;
    std::size_t w_pos = word.find('w', 1);
    if (w_pos == std::string::npos || w_pos == 1) return -1;
    int topic = 0;
    for (std::size_t i = 1; i < w_pos; ++i) {
        if (word[i] < '0' || word[i] > '9') return -1;
        topic = topic * 10 + (word[i] - '0');
    }
    return topic;
}

inline SynthOutput generate(const SynthConfig& cfg) {
    detail::validate_synth_config(cfg);
    const int K = cfg.topics_true;

    struct ClassPlan {
        const char* subclass;
        int count;
        Label label;
    };
    const ClassPlan plans[] = {
        {"legit", cfg.n_legit, Label::Legitimate},
        {"polluter", cfg.n_polluter, Label::Spammer},
        {"fake", cfg.n_fake, Label::Spammer},
    };

    SynthOutput out;
    for (const auto& plan : plans) {
        for (int u = 0; u < plan.count; ++u) {
            char idbuf[32];
            std::snprintf(idbuf, sizeof idbuf, "%s_%04d", plan.subclass, u);
            std::string user_id = idbuf;
            // per-user stream keyed by id, so generation order never matters
            Rng rng(mix64(cfg.seed, fnv1a64(user_id)));

            std::vector<double> alpha(static_cast<std::size_t>(K));
            if (plan.subclass == std::string("legit")) {
                for (auto& a : alpha) a = cfg.legit_rest;
                const int span = cfg.legit_supports_max - cfg.legit_supports_min + 1;
                const int s = cfg.legit_supports_min + rng.uniform_int(span);
                std::vector<int> topics(static_cast<std::size_t>(K));
                for (int k = 0; k < K; ++k) topics[static_cast<std::size_t>(k)] = k;
                rng.shuffle(topics);
                for (int i = 0; i < s; ++i)
                    alpha[static_cast<std::size_t>(topics[static_cast<std::size_t>(i)])] =
                        cfg.legit_main;
            } else if (plan.subclass == std::string("polluter")) {
                for (auto& a : alpha) a = cfg.polluter_rest;
                alpha[static_cast<std::size_t>(rng.uniform_int(K))] = cfg.polluter_main;
            } else {
                for (auto& a : alpha) a = cfg.fake_conc;
            }
            std::vector<double> theta = rng.dirichlet(alpha);

            RawUser user;
            user.user_id = user_id;
            user.label = plan.label;
            std::string post;
            int in_post = 0;
            for (int t = 0; t < cfg.doc_len; ++t) {
                // z ~ Cat(theta), then a word uniform over the topic support
                const double r = rng.next_double();
                int z = 0;
                double acc = theta[0];
                while (z < K - 1 && r >= acc) acc += theta[static_cast<std::size_t>(++z)];
                std::string word = planted_word(z, rng.uniform_int(cfg.vocab_per_topic));
                if (in_post > 0) post += ' ';
                post += word;
                ++in_post;
                if (in_post == cfg.tokens_per_post || t == cfg.doc_len - 1) {
                    if (cfg.url_rate > 0 && rng.next_double() < cfg.url_rate)
                        post += " http://example.com/" + std::to_string(rng.uniform_int(1000));
                    if (cfg.mention_rate > 0 && rng.next_double() < cfg.mention_rate)
                        post += " @user" + std::to_string(rng.uniform_int(1000));
                    user.posts.push_back(post);
                    post.clear();
                    in_post = 0;
                }
            }
            out.users.push_back(std::move(user));
            out.truth.push_back(TrueUser{user_id, plan.subclass, std::move(theta)});
        }
    }
    return out;
}

} // namespace topicspam
