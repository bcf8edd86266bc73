#include "kusuri/regex.hpp"

#include <memory>
#include <utility>

namespace kusuri {
namespace {

bool is_word_byte(int c) {
  if (c < 0) return false;
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c >= 0x80;
}

std::bitset<256> word_set() {
  std::bitset<256> s;
  for (int c = 0; c < 256; ++c) s[c] = is_word_byte(c);
  return s;
}

std::bitset<256> space_set() {
  std::bitset<256> s;
  for (char c : {' ', '\t', '\n', '\r', '\f', '\v'}) s[static_cast<unsigned char>(c)] = true;
  return s;
}

void fold_case(std::bitset<256>& s) {
  for (int c = 'a'; c <= 'z'; ++c) {
    const bool any = s[c] || s[c - 32];
    s[c] = any;
    s[c - 32] = any;
  }
}

bool is_escapable_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && !((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) &&
         c != ' ';
}

struct Node {
  enum class Type { kEmpty, kBytes, kBoundary, kConcat, kAlt, kRepeat };
  Type type = Type::kEmpty;
  std::bitset<256> bytes;
  std::vector<std::unique_ptr<Node>> kids;
  int min = 0;
  int max = 0;  // -1 = unbounded
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make_node(Node::Type t) {
  auto n = std::make_unique<Node>();
  n->type = t;
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view p) : p_(p) {}

  NodePtr parse() {
    NodePtr root = parse_alt();
    if (pos_ < p_.size()) fail("unmatched ')'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw RegexError(pos_, what); }

  bool at_end() const { return pos_ >= p_.size(); }
  char peek() const { return p_[pos_]; }

  NodePtr parse_alt() {
    NodePtr first = parse_concat();
    if (at_end() || peek() != '|') return first;
    NodePtr alt = make_node(Node::Type::kAlt);
    alt->kids.push_back(std::move(first));
    while (!at_end() && peek() == '|') {
      ++pos_;
      alt->kids.push_back(parse_concat());
    }
    return alt;
  }

  NodePtr parse_concat() {
    NodePtr cat = make_node(Node::Type::kConcat);
    while (!at_end() && peek() != '|' && peek() != ')') cat->kids.push_back(parse_repeat());
    if (cat->kids.empty()) return make_node(Node::Type::kEmpty);
    if (cat->kids.size() == 1) return std::move(cat->kids.front());
    return cat;
  }

  static bool is_quantifier(char c) { return c == '*' || c == '+' || c == '?' || c == '{'; }

  NodePtr parse_repeat() {
    NodePtr atom = parse_atom();
    if (at_end() || !is_quantifier(peek())) return atom;
    if (atom->type == Node::Type::kBoundary) fail("quantifier applied to '\\b'");
    NodePtr rep = make_node(Node::Type::kRepeat);
    const char q = peek();
    ++pos_;
    switch (q) {
      case '*': rep->min = 0; rep->max = -1; break;
      case '+': rep->min = 1; rep->max = -1; break;
      case '?': rep->min = 0; rep->max = 1; break;
      default: parse_braces(*rep); break;
    }
    if (!at_end() && is_quantifier(peek())) fail("stacked or lazy quantifier '" + std::string(1, peek()) + "'");
    rep->kids.push_back(std::move(atom));
    return rep;
  }

  int parse_int() {
    const std::size_t begin = pos_;
    int v = 0;
    while (!at_end() && peek() >= '0' && peek() <= '9') {
      v = v * 10 + (peek() - '0');
      if (v > Regex::kMaxRepeat) fail("repetition bound exceeds " + std::to_string(Regex::kMaxRepeat));
      ++pos_;
    }
    if (pos_ == begin) fail("malformed repetition '{'");
    return v;
  }

  void parse_braces(Node& rep) {
    rep.min = parse_int();
    rep.max = rep.min;
    if (!at_end() && peek() == ',') {
      ++pos_;
      rep.max = (!at_end() && peek() == '}') ? -1 : parse_int();
    }
    if (at_end() || peek() != '}') fail("malformed repetition '{'");
    ++pos_;
    if (rep.max != -1 && rep.max < rep.min) fail("repetition {m,n} with n < m");
  }

  NodePtr bytes_node(std::bitset<256> s) {
    NodePtr n = make_node(Node::Type::kBytes);
    n->bytes = s;
    return n;
  }

  NodePtr parse_atom() {
    const char c = peek();
    switch (c) {
      case '(': {
        ++pos_;
        if (!at_end() && peek() == '?') fail("group modifier or lookaround '(?'");
        NodePtr inner = parse_alt();
        if (at_end() || peek() != ')') fail("unterminated group");
        ++pos_;
        return inner;
      }
      case '[':
        return parse_class();
      case '.': {
        ++pos_;
        std::bitset<256> s;
        s.set();
        s['\n'] = false;
        return bytes_node(s);
      }
      case '^':
      case '$':
        fail(std::string("anchor '") + c + "'");
      case '*':
      case '+':
      case '?':
      case '{':
        fail(std::string("quantifier '") + c + "' without operand");
      case '\\':
        return parse_escape();
      default: {
        ++pos_;
        std::bitset<256> s;
        s[static_cast<unsigned char>(c)] = true;
        fold_case(s);
        return bytes_node(s);
      }
    }
  }

  NodePtr parse_escape() {
    ++pos_;
    if (at_end()) fail("trailing backslash");
    const char e = peek();
    ++pos_;
    if (e == 'b') return make_node(Node::Type::kBoundary);
    if (e == 'w') return bytes_node(word_set());
    if (e == 's') return bytes_node(space_set());
    if (e >= '1' && e <= '9') {
      --pos_;
      fail(std::string("backreference '\\") + e + "'");
    }
    if (!is_escapable_punct(e)) {
      --pos_;
      fail(std::string("unsupported escape '\\") + e + "'");
    }
    std::bitset<256> s;
    s[static_cast<unsigned char>(e)] = true;
    return bytes_node(s);
  }

  // Reads one class member (a byte, or \w / \s); returns false for a set.
  bool class_member(std::bitset<256>& set, unsigned char& byte) {
    if (peek() == '\\') {
      ++pos_;
      if (at_end()) fail("unterminated character class");
      const char e = peek();
      ++pos_;
      if (e == 'w') {
        set |= word_set();
        return false;
      }
      if (e == 's') {
        set |= space_set();
        return false;
      }
      if (!is_escapable_punct(e)) {
        --pos_;
        fail(std::string("unsupported escape '\\") + e + "' in character class");
      }
      byte = static_cast<unsigned char>(e);
      return true;
    }
    byte = static_cast<unsigned char>(peek());
    ++pos_;
    return true;
  }

  NodePtr parse_class() {
    const std::size_t open = pos_;
    ++pos_;
    bool negate = false;
    if (!at_end() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    std::bitset<256> set;
    bool first = true;
    while (true) {
      if (at_end()) {
        pos_ = open;
        fail("unterminated character class");
      }
      if (peek() == ']' && !first) break;
      first = false;
      unsigned char lo = 0;
      if (!class_member(set, lo)) continue;
      if (pos_ + 1 < p_.size() && peek() == '-' && p_[pos_ + 1] != ']') {
        ++pos_;
        unsigned char hi = 0;
        std::bitset<256> ignored;
        if (!class_member(ignored, hi)) fail("class shorthand used as range endpoint");
        if (hi < lo) fail("inverted range in character class");
        for (int b = lo; b <= hi; ++b) set[b] = true;
      } else {
        set[lo] = true;
      }
    }
    ++pos_;
    fold_case(set);
    if (negate) set.flip();
    if (set.none()) fail("empty character class");
    return bytes_node(set);
  }

  std::string_view p_;
  std::size_t pos_ = 0;
};

}  // namespace

// Thompson construction over the parse tree.
class RegexCompiler {
 public:
  explicit RegexCompiler(std::vector<Regex::State>& states) : states_(states) {}

  struct Hole {
    int state;
    bool second;
  };
  struct Frag {
    int start;
    std::vector<Hole> holes;
  };

  int add(Regex::Kind kind) {
    Regex::State s;
    s.kind = kind;
    states_.push_back(s);
    return static_cast<int>(states_.size()) - 1;
  }

  void patch(const std::vector<Hole>& holes, int target) {
    for (const Hole& h : holes) (h.second ? states_[h.state].out1 : states_[h.state].out) = target;
  }

  Frag empty() {
    int s = add(Regex::Kind::kSplit);
    return {s, {{s, false}, {s, true}}};
  }

  Frag concat(Frag a, Frag b) {
    patch(a.holes, b.start);
    return {a.start, std::move(b.holes)};
  }

  Frag optional(Frag f) {
    int s = add(Regex::Kind::kSplit);
    states_[s].out = f.start;
    f.holes.push_back({s, true});
    return {s, std::move(f.holes)};
  }

  Frag star(Frag f) {
    int s = add(Regex::Kind::kSplit);
    states_[s].out = f.start;
    patch(f.holes, s);
    return {s, {{s, true}}};
  }

  Frag emit(const Node& n) {
    switch (n.type) {
      case Node::Type::kEmpty:
        return empty();
      case Node::Type::kBytes: {
        int s = add(Regex::Kind::kByte);
        states_[s].bytes = n.bytes;
        return {s, {{s, false}}};
      }
      case Node::Type::kBoundary: {
        int s = add(Regex::Kind::kWordBoundary);
        return {s, {{s, false}}};
      }
      case Node::Type::kConcat: {
        Frag f = emit(*n.kids.front());
        for (std::size_t i = 1; i < n.kids.size(); ++i) f = concat(std::move(f), emit(*n.kids[i]));
        return f;
      }
      case Node::Type::kAlt: {
        Frag f = emit(*n.kids.back());
        for (std::size_t i = n.kids.size() - 1; i-- > 0;) {
          Frag left = emit(*n.kids[i]);
          int s = add(Regex::Kind::kSplit);
          states_[s].out = left.start;
          states_[s].out1 = f.start;
          left.holes.insert(left.holes.end(), f.holes.begin(), f.holes.end());
          f = {s, std::move(left.holes)};
        }
        return f;
      }
      case Node::Type::kRepeat: {
        const Node& child = *n.kids.front();
        Frag f = empty();
        for (int i = 0; i < n.min; ++i) f = concat(std::move(f), emit(child));
        if (n.max == -1) {
          f = concat(std::move(f), star(emit(child)));
        } else {
          for (int i = n.min; i < n.max; ++i) f = concat(std::move(f), optional(emit(child)));
        }
        return f;
      }
    }
    return empty();
  }

 private:
  std::vector<Regex::State>& states_;
};

Regex Regex::compile(std::string_view pattern) {
  Regex re;
  re.source_ = std::string(pattern);
  NodePtr root = Parser(pattern).parse();
  RegexCompiler c(re.states_);
  auto frag = c.emit(*root);
  int match = c.add(Kind::kMatch);
  c.patch(frag.holes, match);
  re.start_ = frag.start;
  return re;
}

void Regex::add_to_set(std::vector<int>& set, std::vector<std::size_t>& mark, std::size_t gen,
                       int state, int prev, int next, std::vector<int>& stack) const {
  stack.clear();
  stack.push_back(state);
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    if (s < 0 || mark[s] == gen) continue;
    mark[s] = gen;
    const State& st = states_[s];
    switch (st.kind) {
      case Kind::kSplit:
        stack.push_back(st.out1);
        stack.push_back(st.out);
        break;
      case Kind::kWordBoundary:
        if (is_word_byte(prev) != is_word_byte(next)) stack.push_back(st.out);
        break;
      case Kind::kByte:
      case Kind::kMatch:
        set.push_back(s);
        break;
    }
  }
}

bool Regex::search(std::string_view text) const {
  const std::size_t n = text.size();
  std::vector<int> current, next_set, stack;
  std::vector<std::size_t> mark(states_.size(), 0);
  std::size_t gen = 0;
  auto byte_at = [&](std::size_t i) -> int {
    return i < n ? static_cast<unsigned char>(text[i]) : -1;
  };
  auto has_match = [&](const std::vector<int>& set) {
    for (int s : set) {
      if (states_[s].kind == Kind::kMatch) return true;
    }
    return false;
  };

  ++gen;
  add_to_set(current, mark, gen, start_, -1, byte_at(0), stack);
  for (std::size_t i = 0;; ++i) {
    if (has_match(current)) return true;
    if (i == n) return false;
    const int c = byte_at(i);
    const int prev = c;
    const int next = byte_at(i + 1);
    ++gen;
    next_set.clear();
    for (int s : current) {
      const State& st = states_[s];
      if (st.kind == Kind::kByte && st.bytes[static_cast<std::size_t>(c)])
        add_to_set(next_set, mark, gen, st.out, prev, next, stack);
    }
    // Unanchored search: a new attempt may begin at every position.
    add_to_set(next_set, mark, gen, start_, prev, next, stack);
    std::swap(current, next_set);
  }
}

}  // namespace kusuri
