#include "kusuri/matcher.hpp"

#include <deque>

namespace kusuri {

PhraseMatcher::PhraseMatcher(const std::vector<Phrase>& phrases) : phrases_(phrases) {
  nodes_.emplace_back();
  for (std::size_t p = 0; p < phrases_.size(); ++p) {
    int state = 0;
    for (const auto& tok : phrases_[p]) {
      auto [it, inserted] = vocab_.try_emplace(tok, static_cast<int>(vocab_.size()));
      const int id = it->second;
      auto nx = nodes_[state].next.find(id);
      if (nx == nodes_[state].next.end()) {
        nodes_.emplace_back();
        const int fresh = static_cast<int>(nodes_.size()) - 1;
        nodes_[state].next.emplace(id, fresh);
        state = fresh;
      } else {
        state = nx->second;
      }
    }
    if (!phrases_[p].empty() && nodes_[state].phrase < 0) nodes_[state].phrase = static_cast<int>(p);
  }

  std::deque<int> queue;
  for (const auto& [id, child] : nodes_[0].next) {
    nodes_[child].fail = 0;
    queue.push_back(child);
  }
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    for (const auto& [id, child] : nodes_[s].next) {
      int f = nodes_[s].fail;
      while (f != 0 && !nodes_[f].next.count(id)) f = nodes_[f].fail;
      auto it = nodes_[f].next.find(id);
      const int target = (it != nodes_[f].next.end() && it->second != child) ? it->second : 0;
      nodes_[child].fail = target;
      nodes_[child].output_link =
          nodes_[target].phrase >= 0 ? target : nodes_[target].output_link;
      queue.push_back(child);
    }
  }
}

int PhraseMatcher::token_id(std::string_view token) const {
  auto it = vocab_.find(token);
  return it == vocab_.end() ? -1 : it->second;
}

bool PhraseMatcher::knows_token(std::string_view token) const { return token_id(token) >= 0; }

template <class OnMatch>
void PhraseMatcher::scan(const std::vector<std::string_view>& tokens, OnMatch&& on_match) const {
  int state = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = token_id(tokens[i]);
    if (id < 0) {
      state = 0;
      continue;
    }
    while (state != 0 && !nodes_[state].next.count(id)) state = nodes_[state].fail;
    auto it = nodes_[state].next.find(id);
    state = it == nodes_[state].next.end() ? 0 : it->second;
    for (int s = nodes_[state].phrase >= 0 ? state : nodes_[state].output_link; s >= 0;
         s = nodes_[s].output_link) {
      if (!on_match(i, nodes_[s].phrase)) return;
    }
  }
}

std::vector<MatchSpan> PhraseMatcher::find_all(const std::vector<std::string_view>& tokens) const {
  std::vector<MatchSpan> out;
  scan(tokens, [&](std::size_t end, int phrase) {
    const Phrase& p = phrases_[static_cast<std::size_t>(phrase)];
    out.push_back({end + 1 - p.size(), end, p});
    return true;
  });
  return out;
}

bool PhraseMatcher::contains_any(const std::vector<std::string_view>& tokens) const {
  bool hit = false;
  scan(tokens, [&](std::size_t, int) {
    hit = true;
    return false;
  });
  return hit;
}

}  // namespace kusuri
