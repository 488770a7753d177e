#include "seqforge/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace seqforge {

namespace {

bool is_blank(const std::string& s) {
    for (unsigned char c : s)
        if (!std::isspace(c)) return false;
    return true;
}

std::string rstrip(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

}  // namespace

const char* to_string(TextUnitMode mode) {
    switch (mode) {
        case TextUnitMode::kWord: return "word";
        case TextUnitMode::kLine: return "line";
        case TextUnitMode::kParagraph: return "paragraph";
    }
    return "word";
}

TextUnitMode text_unit_mode_from_string(const std::string& s) {
    if (s == "word") return TextUnitMode::kWord;
    if (s == "line") return TextUnitMode::kLine;
    if (s == "paragraph") return TextUnitMode::kParagraph;
    throw ConfigError("unknown text unit mode '" + s + "' (expected word|line|paragraph)");
}

Corpus Corpus::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("corpus: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

Corpus Corpus::from_string(const std::string& text) {
    Corpus c;
    {
        std::istringstream ss(text);
        std::string w;
        while (ss >> w) c.words_.push_back(w);
    }
    {
        std::istringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) {
            line = rstrip(line);
            if (!is_blank(line)) c.lines_.push_back(line);
        }
    }
    {
        std::istringstream ss(text);
        std::string line, para;
        auto flush = [&] {
            para = rstrip(para);
            if (!is_blank(para)) c.paragraphs_.push_back(para);
            para.clear();
        };
        while (std::getline(ss, line)) {
            if (is_blank(line)) {
                flush();
            } else {
                if (!para.empty()) para += '\n';
                para += rstrip(line);
            }
        }
        flush();
    }
    if (c.words_.empty()) throw ConfigError("corpus: no text units (empty corpus)");
    return c;
}

const std::vector<std::string>& Corpus::units(TextUnitMode mode) const {
    switch (mode) {
        case TextUnitMode::kWord: return words_;
        case TextUnitMode::kLine: return lines_;
        case TextUnitMode::kParagraph: return paragraphs_;
    }
    return words_;
}

size_t Corpus::unit_count(TextUnitMode mode) const { return units(mode).size(); }

const std::string& Corpus::sample(TextUnitMode mode, RngStream& rng) const {
    const auto& u = units(mode);
    if (u.empty())
        throw ConfigError(std::string("corpus: no units of mode '") + to_string(mode) + "'");
    return u[rng.uniform_int(int(u.size()))];
}

}  // namespace seqforge
