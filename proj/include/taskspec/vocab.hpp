#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace taskspec {

using TokenId = std::int32_t;

// Token alphabet shared by target, draft and adapted-draft models.
// Ids are dense 0..size()-1 with BOS/EOS/UNK reserved at fixed positions.
class Vocab {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;

  Vocab() {
    add("<s>");
    add("</s>");
    add("<unk>");
  }

  // Returns the id of `token`, inserting it if absent.
  TokenId add(std::string_view token) {
    auto it = ids_.find(std::string(token));
    if (it != ids_.end()) return it->second;
    TokenId id = static_cast<TokenId>(tokens_.size());
    tokens_.emplace_back(token);
    ids_.emplace(tokens_.back(), id);
    return id;
  }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id_or_unk(std::string_view token) const {
    auto id = find(token);
    return id ? *id : kUnk;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw std::out_of_range("token id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const { return tokens_.size(); }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

  nlohmann::json to_json() const { return nlohmann::json(tokens_); }

  static Vocab from_json(const nlohmann::json& j) {
    Vocab v;
    const auto toks = j.get<std::vector<std::string>>();
    if (toks.size() < 3 || toks[0] != "<s>" || toks[1] != "</s>" || toks[2] != "<unk>") {
      throw std::runtime_error("vocab json missing reserved tokens");
    }
    for (std::size_t i = 3; i < toks.size(); ++i) v.add(toks[i]);
    if (v.size() != toks.size()) throw std::runtime_error("vocab json has duplicate tokens");
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

namespace detail {

// Decodes one UTF-8 code point starting at `i`; advances `i`. Malformed
// sequences are consumed one byte at a time and reported as U+FFFD.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const unsigned char bk = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U'\t':
    case U'\n':
    case U'\v':
    case U'\f':
    case U'\r':
    case U' ':
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace detail

// Lowercases (ASCII) and splits on Unicode whitespace. Vocabulary-building
// mode: returns the token strings themselves.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = detail::decode_utf8(text, i);
    if (detail::is_unicode_space(cp)) {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
      continue;
    }
    for (std::size_t k = start; k < i; ++k) {
      char c = text[k];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Tokenizes against a fixed vocabulary; unknown tokens map to UNK.
inline std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab) {
  std::vector<TokenId> out;
  for (const auto& tok : tokenize(text)) out.push_back(vocab.id_or_unk(tok));
  return out;
}

inline Vocab build_vocab(const std::vector<std::string>& docs) {
  Vocab v;
  for (const auto& doc : docs) {
    for (const auto& tok : tokenize(doc)) v.add(tok);
  }
  return v;
}

inline std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

}  // namespace taskspec
