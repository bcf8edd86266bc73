#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "kusuri/models.hpp"
#include "kusuri/random.hpp"

namespace fixture {

inline kusuri::ModelDims tiny_dims() {
  kusuri::ModelDims d;
  d.char_embedding = 3;
  d.char_hidden = 4;
  d.char_attention = 3;
  d.morphology = 4;
  d.word_embedding = 5;
  d.word_hidden = 6;
  d.word_attention = 4;
  d.weak_hidden = 6;
  d.weak_attention = 4;
  return d;
}

inline kusuri::EmbeddingTable random_table(const std::set<std::string>& words, int dim, std::uint64_t seed) {
  kusuri::Rng rng(seed);
  kusuri::EmbeddingTable t;
  t.dim = dim;
  kusuri::nn::Vec sum = kusuri::nn::Vec::Zero(dim);
  for (const auto& w : words) {
    kusuri::nn::Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-1, 1);
    sum += v;
    t.entries.emplace(w, v);
  }
  t.unk = sum / static_cast<double>(std::max<std::size_t>(words.size(), 1));
  return t;
}

inline std::vector<kusuri::LabeledTweet> separable() {
  const char* pos[] = {"took xanax tonight", "my advil works", "need more tylenol", "xanax and advil",
                       "tylenol helps me", "advil for pain", "took tylenol again", "xanax kicked in",
                       "more advil please", "tylenol and xanax"};
  const char* neg[] = {"great game today", "love this song", "the weather is nice", "game night with friends",
                       "nice song tonight", "this weather though", "friends are great", "song of the day",
                       "nice day outside", "love the game"};
  std::vector<kusuri::LabeledTweet> out;
  for (int i = 0; i < 10; ++i) {
    out.push_back({kusuri::Tweet::make("p" + std::to_string(i), pos[i]), 1});
    out.push_back({kusuri::Tweet::make("n" + std::to_string(i), neg[i]), 0});
  }
  return out;
}

inline kusuri::EmbeddingTable table_for(const std::vector<kusuri::LabeledTweet>& data, int dim, std::uint64_t seed) {
  std::set<std::string> words;
  for (const auto& ex : data)
    for (const auto& t : ex.tweet.tokens) words.insert(t.text);
  return random_table(words, dim, seed);
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("kusuri-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixture
