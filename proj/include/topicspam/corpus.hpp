#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "topicspam/error.hpp"
#include "topicspam/stemmer.hpp"

namespace topicspam {

enum class Label { Legitimate = 0, Spammer = 1 };

inline const char* label_name(Label l) {
    return l == Label::Spammer ? "spammer" : "legitimate";
}

inline Label parse_label(const std::string& s) {
    if (s == "spammer") return Label::Spammer;
    if (s == "legitimate") return Label::Legitimate;
    throw FormatError("unknown label '" + s + "' (expected 'spammer' or 'legitimate')");
}

struct RawUser {
    std::string user_id;
    Label label = Label::Legitimate;
    std::vector<std::string> posts;
    // supplied instead of raw text for pre-segmented corpora; one inner list per post
    std::optional<std::vector<std::vector<std::string>>> pretokenized;
};

struct UserDocument {
    std::string user_id;
    Label label = Label::Legitimate;
    std::vector<std::string> tokens;
    int post_count = 0;
};

// token <-> dense index bijection, lexicographic index order
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> sorted_tokens)
        : tokens_(std::move(sorted_tokens)) {
        for (std::size_t i = 0; i < tokens_.size(); ++i)
            index_[tokens_[i]] = static_cast<int>(i);
    }

    int size() const { return static_cast<int>(tokens_.size()); }

    int index_of(const std::string& tok) const {
        auto it = index_.find(tok);
        return it == index_.end() ? -1 : it->second;
    }

    const std::string& token(int idx) const { return tokens_[static_cast<std::size_t>(idx)]; }

    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct EncodedDoc {
    std::string user_id;
    Label label = Label::Legitimate;
    std::vector<int> tokens;
};

enum class DatasetFormat { Jsonl, Tsv };

// ---------------------------------------------------------------------------
// dataset loading
// ---------------------------------------------------------------------------

namespace detail {

inline RawUser parse_jsonl_record(const std::string& line, std::size_t lineno) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    RawUser u;
    try {
        if (!j.is_object() || !j.contains("user_id") || !j.contains("label") || !j.contains("posts"))
            throw FormatError("line " + std::to_string(lineno) +
                              ": record must have user_id, label and posts fields");
        u.user_id = j.at("user_id").get<std::string>();
        u.label = parse_label(j.at("label").get<std::string>());
        u.posts = j.at("posts").get<std::vector<std::string>>();
        if (j.contains("tokens"))
            u.pretokenized = j.at("tokens").get<std::vector<std::vector<std::string>>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("line " + std::to_string(lineno) + ": bad field type: " + e.what());
    } catch (const FormatError& e) {
        throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (u.user_id.empty())
        throw FormatError("line " + std::to_string(lineno) + ": empty user_id");
    return u;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline RawUser parse_tsv_record(const std::string& line, std::size_t lineno) {
    auto fields = split(line, '\t');
    if (fields.size() < 2)
        throw FormatError("line " + std::to_string(lineno) +
                          ": expected at least user_id<TAB>label");
    RawUser u;
    u.user_id = fields[0];
    if (u.user_id.empty())
        throw FormatError("line " + std::to_string(lineno) + ": empty user_id");
    try {
        u.label = parse_label(fields[1]);
    } catch (const FormatError& e) {
        throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    u.posts.assign(fields.begin() + 2, fields.end());
    return u;
}

} // namespace detail

inline std::vector<RawUser> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open dataset file: " + path.string());
    std::vector<RawUser> users;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        RawUser u = format == DatasetFormat::Jsonl ? detail::parse_jsonl_record(line, lineno)
                                                   : detail::parse_tsv_record(line, lineno);
        if (!seen.insert(u.user_id).second)
            throw DuplicateUserError("duplicate user_id '" + u.user_id + "' at line " +
                                     std::to_string(lineno));
        users.push_back(std::move(u));
    }
    return users;
}

// ---------------------------------------------------------------------------
// stopwords
// ---------------------------------------------------------------------------

// Fixed English stopword list, shipped as data/stopwords_en.txt as well; the
// two must stay identical (there is a test pinning that).
inline const std::vector<std::string>& builtin_stopwords() {
    static const std::vector<std::string> words = {
        "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
        "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers",
        "herself", "it", "its", "itself", "they", "them", "their", "theirs", "themselves",
        "what", "which", "who", "whom", "this", "that", "these", "those", "am", "is", "are",
        "was", "were", "be", "been", "being", "have", "has", "had", "having", "do", "does",
        "did", "doing", "would", "should", "could", "ought", "i'm", "you're", "he's", "she's",
        "it's", "we're", "they're", "i've", "you've", "we've", "they've", "i'd", "you'd",
        "he'd", "she'd", "we'd", "they'd", "i'll", "you'll", "he'll", "she'll", "we'll",
        "they'll", "isn't", "aren't", "wasn't", "weren't", "hasn't", "haven't", "hadn't",
        "doesn't", "don't", "didn't", "won't", "wouldn't", "shan't", "shouldn't", "can't",
        "cannot", "couldn't", "mustn't", "let's", "that's", "who's", "what's", "here's",
        "there's", "when's", "where's", "why's", "how's", "a", "an", "the", "and", "but",
        "if", "or", "because", "as", "until", "while", "of", "at", "by", "for", "with",
        "about", "against", "between", "into", "through", "during", "before", "after",
        "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
        "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
        "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such",
        "no", "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t",
        "can", "will", "just", "don", "now",
    };
    return words;
}

// one token per line, UTF-8, '#' starts a comment line
inline std::vector<std::string> load_stopword_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open stopword file: " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t");
        std::string tok = line.substr(first, last - first + 1);
        if (tok.empty() || tok[0] == '#') continue;
        words.push_back(tok);
    }
    return words;
}

// ---------------------------------------------------------------------------
// preprocessing
// ---------------------------------------------------------------------------

enum class LanguageMode { English, Pretokenized };

struct PreprocessConfig {
    LanguageMode language = LanguageMode::English;
    std::vector<std::string> stopwords = builtin_stopwords();
    int min_posts = 20;
    int min_tokens = 50;
    bool stem = true;
};

namespace detail {

inline bool is_ascii(const std::string& tok) {
    for (unsigned char c : tok)
        if (c >= 0x80) return false;
    return true;
}

// URLs and @mentions ride through normalization untouched; they carry signal
// for the content features and stripping punctuation would destroy them.
inline bool is_url_or_mention(const std::string& tok) {
    if (tok.rfind("http://", 0) == 0 || tok.rfind("https://", 0) == 0) return true;
    return tok.size() > 1 && tok[0] == '@';
}

inline std::string normalize_token(const std::string& tok) {
    std::string out;
    out.reserve(tok.size());
    for (char ch : tok) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::ispunct(c)) continue;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

} // namespace detail

// Applies the fixed text pipeline per user: whitespace tokenization,
// lowercasing, punctuation and non-ASCII removal, stopword removal, stemming.
// Pretokenized mode trusts the supplied segmentation and removes stopwords
// only. Returns nullopt ("filtered") for users below the post/token floors.
class Preprocessor {
public:
    explicit Preprocessor(PreprocessConfig config) : config_(std::move(config)) {
        for (const auto& w : config_.stopwords) {
            raw_stop_.insert(w);
            norm_stop_.insert(detail::normalize_token(w));
        }
        norm_stop_.erase("");
    }

    const PreprocessConfig& config() const { return config_; }

    std::optional<UserDocument> operator()(const RawUser& user) const {
        if (config_.language == LanguageMode::Pretokenized) {
            if (!user.pretokenized)
                throw ConfigError("pretokenized mode but user '" + user.user_id +
                                  "' has no token lists");
            return run_pretokenized(user);
        }
        if (user.posts.empty() && user.pretokenized)
            throw ConfigError("english mode but user '" + user.user_id +
                              "' has only pretokenized input");
        return run_english(user);
    }

private:
    std::optional<UserDocument> run_english(const RawUser& user) const {
        int post_count = static_cast<int>(user.posts.size());
        // the post-count floor is decided before any token is looked at
        if (post_count < config_.min_posts) return std::nullopt;

        UserDocument doc;
        doc.user_id = user.user_id;
        doc.label = user.label;
        doc.post_count = post_count;
        for (const auto& post : user.posts) {
            std::istringstream ss(post);
            std::string tok;
            while (ss >> tok) {
                if (!detail::is_ascii(tok)) continue;
                if (detail::is_url_or_mention(tok)) {
                    doc.tokens.push_back(tok);
                    continue;
                }
                std::string norm = detail::normalize_token(tok);
                if (norm.empty()) continue;
                if (norm_stop_.count(norm)) continue;
                doc.tokens.push_back(config_.stem ? PorterStemmer::stem(norm) : norm);
            }
        }
        if (static_cast<int>(doc.tokens.size()) < config_.min_tokens) return std::nullopt;
        return doc;
    }

    std::optional<UserDocument> run_pretokenized(const RawUser& user) const {
        int post_count = static_cast<int>(user.pretokenized->size());
        if (post_count < config_.min_posts) return std::nullopt;

        UserDocument doc;
        doc.user_id = user.user_id;
        doc.label = user.label;
        doc.post_count = post_count;
        for (const auto& post : *user.pretokenized) {
            for (const auto& tok : post) {
                if (tok.empty()) continue;
                if (raw_stop_.count(tok)) continue;
                doc.tokens.push_back(tok);
            }
        }
        if (static_cast<int>(doc.tokens.size()) < config_.min_tokens) return std::nullopt;
        return doc;
    }

    PreprocessConfig config_;
    std::unordered_set<std::string> raw_stop_;
    std::unordered_set<std::string> norm_stop_;
};

inline std::optional<UserDocument> preprocess(const RawUser& user, const PreprocessConfig& config) {
    return Preprocessor(config)(user);
}

// ---------------------------------------------------------------------------
// vocabulary
// ---------------------------------------------------------------------------

inline Vocabulary build_vocabulary(const std::vector<UserDocument>& docs, int min_df = 5,
                                   double max_df_ratio = 0.5) {
    if (docs.empty())
        throw EmptyCorpusError("cannot build a vocabulary from zero documents");
    std::map<std::string, int> df; // ordered: gives the lexicographic index order
    for (const auto& doc : docs) {
        std::set<std::string> uniq(doc.tokens.begin(), doc.tokens.end());
        for (const auto& tok : uniq) ++df[tok];
    }
    const double max_df = max_df_ratio * static_cast<double>(docs.size());
    std::vector<std::string> kept;
    for (const auto& [tok, count] : df)
        if (count >= min_df && static_cast<double>(count) <= max_df) kept.push_back(tok);
    if (kept.empty())
        throw EmptyVocabularyError("vocabulary pruning (min_df=" + std::to_string(min_df) +
                                   ", max_df_ratio=" + std::to_string(max_df_ratio) +
                                   ") removed every token");
    return Vocabulary(std::move(kept));
}

// out-of-vocabulary tokens are dropped here, never during preprocessing
inline std::vector<EncodedDoc> encode_documents(const std::vector<UserDocument>& docs,
                                                const Vocabulary& vocab) {
    std::vector<EncodedDoc> out;
    out.reserve(docs.size());
    for (const auto& doc : docs) {
        EncodedDoc e;
        e.user_id = doc.user_id;
        e.label = doc.label;
        e.tokens.reserve(doc.tokens.size());
        for (const auto& tok : doc.tokens) {
            int idx = vocab.index_of(tok);
            if (idx >= 0) e.tokens.push_back(idx);
        }
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace topicspam
