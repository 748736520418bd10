#pragma once

#include <array>
#include <set>
#include <string>
#include <string_view>

namespace taskspec {

// Default English stopword list used by text preprocessing and the prompt
// router. data/stopwords.txt ships the same list for external tools; a test
// keeps the two in sync.
inline constexpr std::array<std::string_view, 150> kDefaultStopwords = {
    "a",        "about",    "above",     "across",   "after",      "again",
    "against",  "all",      "along",     "also",     "am",         "among",
    "an",       "and",      "any",       "are",      "around",     "as",
    "at",       "be",       "because",   "been",     "before",     "behind",
    "being",    "below",    "beside",    "between",  "beyond",     "both",
    "but",      "by",       "can",       "cannot",   "could",      "did",
    "do",       "does",     "doing",     "down",     "during",     "each",
    "few",      "for",      "from",      "further",  "give",       "had",
    "has",      "have",     "having",    "he",       "her",        "here",
    "hers",     "herself",  "him",       "himself",  "his",        "how",
    "i",        "if",       "in",        "into",     "is",         "it",
    "its",      "itself",   "just",      "let",      "may",        "me",
    "might",    "more",     "most",      "must",     "my",         "myself",
    "no",       "nor",      "not",       "now",      "of",         "off",
    "on",       "once",     "only",      "onto",     "or",         "other",
    "ought",    "our",      "ours",      "ourselves","out",        "over",
    "own",      "per",      "please",    "same",     "shall",      "she",
    "should",   "show",     "so",        "some",     "such",       "tell",
    "than",     "that",     "the",       "their",    "theirs",     "them",
    "themselves","then",    "there",     "these",    "they",       "this",
    "those",    "through",  "to",        "too",      "under",      "until",
    "up",       "upon",     "us",        "very",     "via",        "was",
    "we",       "were",     "what",      "when",     "where",      "which",
    "while",    "who",      "whom",      "why",      "will",       "with",
    "within",   "without",  "would",     "you",      "your",       "yours",
};

inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words(kDefaultStopwords.begin(),
                                           kDefaultStopwords.end());
  return words;
}

}  // namespace taskspec
