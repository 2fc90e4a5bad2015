#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace mda {

/// Strips URLs; for tweets also drops @handles and emoji codepoints.
/// Everything else, including the whitespace around removed spans, is kept.
std::string sanitize_text(std::string_view raw, bool is_tweet);

/// Lowercased word tokens with punctuation removed. Stopwords, pure numbers
/// and tokens mixing letters with digits are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Embedded English stopword list (179 entries, one per line).
std::string_view stopword_resource();
const std::unordered_set<std::string>& stopwords();

/// SHA-256 of the embedded stopword resource bytes. Recorded in model files so
/// producer and consumer can confirm they tokenize identically.
const std::string& stopword_hash();

}  // namespace mda
