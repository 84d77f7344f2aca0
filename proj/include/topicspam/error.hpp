#pragma once

#include <stdexcept>
#include <string>

namespace topicspam {

// Error categories map 1:1 onto CLI exit codes: io/config -> 2,
// data -> 3, internal -> 4.
enum class ErrorCategory { Io, Config, Data, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}

    ErrorCategory category() const { return cat_; }

    const char* category_name() const {
        switch (cat_) {
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Internal: return "internal";
        }
        return "internal";
    }

private:
    ErrorCategory cat_;
};

#define TOPICSPAM_ERROR(Name, Cat)                              \
    class Name : public Error {                                 \
    public:                                                     \
        explicit Name(const std::string& msg)                   \
            : Error(ErrorCategory::Cat, msg) {}                 \
    }

TOPICSPAM_ERROR(IoError, Io);
TOPICSPAM_ERROR(ConfigError, Config);
TOPICSPAM_ERROR(InvalidConfigError, Config);

TOPICSPAM_ERROR(FormatError, Data);
TOPICSPAM_ERROR(DuplicateUserError, Data);
TOPICSPAM_ERROR(EmptyVocabularyError, Data);
TOPICSPAM_ERROR(EmptyCorpusError, Data);
TOPICSPAM_ERROR(EmptyDocumentError, Data);
TOPICSPAM_ERROR(TooFewUsersError, Data);
TOPICSPAM_ERROR(TooFewTopicsError, Data);
TOPICSPAM_ERROR(ShapeMismatchError, Data);
TOPICSPAM_ERROR(DuplicateColumnError, Data);
TOPICSPAM_ERROR(ZeroPostsError, Data);
TOPICSPAM_ERROR(SingleClassError, Data);
TOPICSPAM_ERROR(NanFeatureError, Data);
TOPICSPAM_ERROR(DimensionMismatchError, Data);
TOPICSPAM_ERROR(TooFewPerClassError, Data);
TOPICSPAM_ERROR(StaleArtifactError, Data);

TOPICSPAM_ERROR(InternalError, Internal);

#undef TOPICSPAM_ERROR

} // namespace topicspam
