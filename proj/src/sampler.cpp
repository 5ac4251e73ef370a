#include "serml/corpus.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace serml::corpus {

NegativeSampler::NegativeSampler(std::size_t n_items, std::vector<std::vector<std::int32_t>> excluded)
    : n_items_(n_items), excluded_(std::move(excluded)) {
  for (auto& items : excluded_) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    if (!items.empty() && (items.front() < 0 || static_cast<std::size_t>(items.back()) >= n_items_)) {
      throw std::out_of_range("excluded item outside catalog");
    }
  }
}

const std::vector<std::int32_t>& NegativeSampler::excluded(std::int32_t user) const {
  if (user < 0 || static_cast<std::size_t>(user) >= excluded_.size()) {
    throw std::out_of_range("unknown user index " + std::to_string(user));
  }
  return excluded_[static_cast<std::size_t>(user)];
}

std::size_t NegativeSampler::pool_size(std::int32_t user) const {
  return n_items_ - excluded(user).size();
}

bool NegativeSampler::is_excluded(std::int32_t user, std::int32_t item) const {
  const auto& ex = excluded(user);
  return std::binary_search(ex.begin(), ex.end(), item);
}

std::vector<std::int32_t> NegativeSampler::sample(std::int32_t user, std::size_t n, Rng& rng) const {
  const auto& ex = excluded(user);
  const std::size_t pool = n_items_ - ex.size();
  std::vector<std::int32_t> out;
  if (n == 0 || pool == 0) {
    return out;
  }
  auto allowed = [&](std::int32_t item) { return !std::binary_search(ex.begin(), ex.end(), item); };

  if (n >= pool) {
    out.reserve(pool);
    for (std::size_t i = 0; i < n_items_; ++i) {
      if (allowed(static_cast<std::int32_t>(i))) {
        out.push_back(static_cast<std::int32_t>(i));
      }
    }
    return out;
  }

  out.reserve(n);
  if (4 * n <= pool) {
    // Sparse draw: rejection against exclusions and earlier picks.
    std::unordered_set<std::int32_t> seen;
    while (out.size() < n) {
      const auto item = static_cast<std::int32_t>(uniform_index(rng, n_items_));
      if (allowed(item) && seen.insert(item).second) {
        out.push_back(item);
      }
    }
    return out;
  }

  // Dense draw: partial Fisher-Yates over the explicit pool.
  std::vector<std::int32_t> candidates;
  candidates.reserve(pool);
  for (std::size_t i = 0; i < n_items_; ++i) {
    if (allowed(static_cast<std::int32_t>(i))) {
      candidates.push_back(static_cast<std::int32_t>(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    out.push_back(candidates[i]);
  }
  return out;
}

}  // namespace serml::corpus
