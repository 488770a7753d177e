#pragma once

#include <string>
#include <vector>

#include "seqforge/error.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

enum class TextUnitMode { kWord, kLine, kParagraph };

const char* to_string(TextUnitMode mode);
TextUnitMode text_unit_mode_from_string(const std::string& s);

// Text source split into all three granularities up front:
// words = whitespace-split tokens, lines = newline-split, paragraphs =
// blank-line-split (paragraphs keep their internal newlines).
class Corpus {
public:
    static Corpus from_file(const std::string& path);
    static Corpus from_string(const std::string& text);

    // Draws uniformly from units of the requested granularity.
    const std::string& sample(TextUnitMode mode, RngStream& rng) const;

    size_t unit_count(TextUnitMode mode) const;
    bool empty() const { return words_.empty(); }

private:
    const std::vector<std::string>& units(TextUnitMode mode) const;

    std::vector<std::string> words_, lines_, paragraphs_;
};

}  // namespace seqforge
