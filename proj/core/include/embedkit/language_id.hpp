#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace embedkit::filters {

struct LanguageGuess {
    std::string language;  // ISO 639-1 code, "und" when undecidable
    double confidence = 0.0;
};

class LanguageClassifier {
public:
    virtual ~LanguageClassifier() = default;
    virtual LanguageGuess classify(std::string_view text) const = 0;
    virtual std::size_t profile_count() const = 0;
};

// Character 3-gram rank profiles compared with the out-of-place (rank-order)
// distance. Confidence is the normalized margin between the best and
// second-best profile distance. Profiles are built from bundled text
// snippets with the same trigram extraction applied to classified documents.
class TrigramLanguageClassifier final : public LanguageClassifier {
public:
    // Bundled profiles: en, de, fr, es, it.
    TrigramLanguageClassifier();
    // Custom profiles from (language code, sample text) pairs.
    explicit TrigramLanguageClassifier(
        const std::vector<std::pair<std::string, std::string>>& samples);

    LanguageGuess classify(std::string_view text) const override;
    std::size_t profile_count() const override { return profiles_.size(); }

private:
    struct Profile {
        std::string language;
        std::vector<std::pair<std::string, std::size_t>> rank;  // gram -> rank
    };
    std::vector<Profile> profiles_;
};

}  // namespace embedkit::filters
