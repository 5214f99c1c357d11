#include "avdn/vocabulary.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "avdn/errors.hpp"

namespace avdn {

namespace {

std::vector<std::string> phrase_bank_tokens() {
    std::vector<std::string> tokens{"[INS]", "[QUE]", "[OOV]"};
    const char* words[] = {
        // movement
        "go", "forward", "turn", "slightly", "sharply", "left", "right", "around", "head", "for", "meters", "and",
        "stop", "here", "hold", "this", "position",
        // compass
        "east", "northeast", "north", "northwest", "west", "southwest", "south", "southeast",
        // goal descriptors
        "the", "destination", "is", "a", "bright", "dark", "gray", "area",
        // follower questions
        "which", "way", "should", "i", "where", "keep", "going", "how", "far", "it",
        // common commander words
        "ahead", "back", "fly", "move", "to", "toward", "then", "continue", "straight", "you", "near", "building",
        "road", "field", "tree", "river", "house", "there", "now",
    };
    for (const char* w : words) tokens.emplace_back(w);
    for (int n = 5; n <= 100; n += 5) tokens.push_back(std::to_string(n));
    return tokens;
}

std::string normalize_word(std::string_view raw) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(raw[b])) && raw[b] != '[') ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1])) && raw[e - 1] != ']') --e;
    std::string out(raw.substr(b, e - b));
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void append_text(TokenSequence& seq, std::string_view text, const Vocabulary& vocab) {
    std::istringstream in{std::string(text)};
    std::string raw;
    while (in >> raw) {
        const std::string word = normalize_word(raw);
        if (!word.empty()) seq.tokens.push_back(vocab.id(word));
    }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 3 || tokens_[0] != "[INS]" || tokens_[1] != "[QUE]" || tokens_[2] != "[OOV]") {
        throw ValidationError("vocabulary: ids 0/1/2 must be [INS]/[QUE]/[OOV]");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw ValidationError("vocabulary: duplicate token '" + tokens_[i] + "'");
        }
    }
}

int Vocabulary::id(std::string_view word) const {
    const auto it = ids_.find(std::string(word));
    return it == ids_.end() ? kUnknownToken : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
}

const Vocabulary& default_vocabulary() {
    static const Vocabulary vocab(phrase_bank_tokens());
    return vocab;
}

TokenSequence tokenize_dialog(std::span<const DialogRound> dialog, const Vocabulary& vocab) {
    TokenSequence seq;
    for (const DialogRound& round : dialog) {
        if (round.question) {
            seq.question_markers.push_back(seq.tokens.size());
            seq.tokens.push_back(kQuestionMarker);
            append_text(seq, *round.question, vocab);
        }
        seq.instruction_markers.push_back(seq.tokens.size());
        seq.tokens.push_back(kInstructionMarker);
        append_text(seq, round.instruction, vocab);
    }
    return seq;
}

}  // namespace avdn
