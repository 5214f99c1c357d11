#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "avdn/dataset.hpp"

namespace avdn {

inline constexpr int kInstructionMarker = 0;  // [INS]
inline constexpr int kQuestionMarker = 1;     // [QUE]
inline constexpr int kUnknownToken = 2;       // [OOV]

// Closed vocabulary; ids are positions. Ids 0/1/2 are always [INS]/[QUE]/[OOV].
class Vocabulary {
public:
    // Throws ValidationError if the reserved tokens are not at ids 0, 1, 2 or a token repeats.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    int id(std::string_view word) const;  // kUnknownToken when absent
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::span<const std::string> tokens() const { return tokens_; }

    // One token per line, id = line index.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

// Phrase-bank vocabulary shared by the generator and all policies.
const Vocabulary& default_vocabulary();

struct TokenSequence {
    std::vector<int> tokens;
    std::vector<std::size_t> instruction_markers;  // positions of [INS]
    std::vector<std::size_t> question_markers;     // positions of [QUE]

    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Lowercased whitespace tokens (surrounding punctuation stripped); each
// question is prefixed by [QUE] and each instruction by [INS].
TokenSequence tokenize_dialog(std::span<const DialogRound> dialog, const Vocabulary& vocab = default_vocabulary());

}  // namespace avdn
