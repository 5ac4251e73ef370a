#include "serml/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace serml::corpus {

Vocabulary::Vocabulary(std::vector<std::string> tokens, TextCaps caps) : caps_(caps) {
  if (caps.max_sentences < 1 || caps.max_words < 1) {
    throw std::invalid_argument("text caps must be >= 1");
  }
  id_to_token_.reserve(tokens.size() + 2);
  id_to_token_.emplace_back("<pad>");
  id_to_token_.emplace_back("<unk>");
  for (auto& t : tokens) {
    const auto id = static_cast<std::int32_t>(id_to_token_.size());
    if (!token_to_id_.emplace(t, id).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + t + "'");
    }
    id_to_token_.push_back(std::move(t));
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> reviews, int min_freq, TextCaps caps) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& review : reviews) {
    for (const auto& sentence : segment(review)) {
      for (const auto& word : sentence) {
        ++counts[word];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [word, n] : counts) {
    if (n >= static_cast<std::size_t>(std::max(min_freq, 1))) {
      kept.emplace_back(word, n);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [word, n] : kept) {
    tokens.push_back(std::move(word));
  }
  return Vocabulary(std::move(tokens), caps);
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::out_of_range("token id out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

int TokenizedDoc::sentence_length(std::size_t i) const {
  const auto& row = sentences.at(i);
  auto pad = std::find(row.begin(), row.end(), Vocabulary::kPad);
  return static_cast<int>(pad - row.begin());
}

int TokenizedDoc::num_sentences() const {
  int n = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentence_length(i) > 0) {
      ++n;
    }
  }
  return n;
}

std::vector<int> TokenizedDoc::sentence_lengths() const {
  std::vector<int> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out.push_back(sentence_length(i));
  }
  return out;
}

std::vector<std::vector<std::string>> segment(std::string_view review) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> sentence;
  std::string word;
  auto end_word = [&] {
    while (!word.empty() && word.back() == '\'') {
      word.pop_back();
    }
    if (!word.empty()) {
      sentence.push_back(std::move(word));
    }
    word.clear();
  };
  auto end_sentence = [&] {
    end_word();
    if (!sentence.empty()) {
      out.push_back(std::move(sentence));
    }
    sentence.clear();
  };
  for (char ch : review) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !word.empty()) {
      word.push_back('\'');
    } else if (c == '.' || c == '!' || c == '?') {
      end_sentence();
    } else {
      end_word();
    }
  }
  end_sentence();
  return out;
}

TokenizedDoc tokenize(std::string_view review, const Vocabulary& vocab) {
  TokenizedDoc doc;
  const auto& caps = vocab.caps();
  for (const auto& sentence : segment(review)) {
    if (static_cast<int>(doc.sentences.size()) >= caps.max_sentences) {
      break;
    }
    std::vector<std::int32_t> ids;
    const auto n = std::min<std::size_t>(sentence.size(), static_cast<std::size_t>(caps.max_words));
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back(vocab.id(sentence[i]));
    }
    doc.sentences.push_back(std::move(ids));
  }
  return doc;
}

}  // namespace serml::corpus
