#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "stv/error.hpp"

namespace stv {

// A trace over action names only.
using Word = std::vector<std::string>;

using Alphabet = std::set<std::string>;

// The observables of both languages.
inline const Alphabet& default_alphabet() {
  static const Alphabet a{"display", "send"};
  return a;
}

struct HistExpr;
using Hist = std::shared_ptr<const HistExpr>;

namespace hist {
struct Eps {};
struct Act { std::string name; };
struct Seq { Hist first; Hist second; };
struct Choice { Hist left; Hist right; };
struct Star { Hist body; };
// Unification variable of the effect inference. Never part of a result.
struct Var { std::size_t id; };
} // namespace hist

struct HistExpr {
  using Node = std::variant<hist::Eps, hist::Act, hist::Seq, hist::Choice, hist::Star, hist::Var>;
  Node node;

  template <class T> const T* as() const { return std::get_if<T>(&node); }
  template <class T> bool is() const { return std::holds_alternative<T>(node); }
};

namespace hist {
inline Hist make(HistExpr::Node n) { return std::make_shared<const HistExpr>(HistExpr{std::move(n)}); }
inline Hist eps() {
  static const Hist e = make(Eps{});
  return e;
}
inline Hist act(std::string a) { return make(Act{std::move(a)}); }
inline Hist seq(Hist a, Hist b) { return make(Seq{std::move(a), std::move(b)}); }
inline Hist choice(Hist a, Hist b) { return make(Choice{std::move(a), std::move(b)}); }
inline Hist star(Hist h) { return make(Star{std::move(h)}); }
inline Hist var(std::size_t id) { return make(Var{id}); }

// Right-nested sequence of the given parts; eps when empty.
inline Hist seq_of(const std::vector<Hist>& parts) {
  if (parts.empty()) return eps();
  Hist h = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) h = seq(*it, h);
  return h;
}
} // namespace hist

inline bool equal(const Hist& a, const Hist& b) {
  if (a == b) return true;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, hist::Act>) return x.name == y.name;
        else if constexpr (std::is_same_v<T, hist::Seq>) return equal(x.first, y.first) && equal(x.second, y.second);
        else if constexpr (std::is_same_v<T, hist::Choice>) return equal(x.left, y.left) && equal(x.right, y.right);
        else if constexpr (std::is_same_v<T, hist::Star>) return equal(x.body, y.body);
        else if constexpr (std::is_same_v<T, hist::Var>) return x.id == y.id;
        else return true;
      },
      a->node);
}

inline void collect_actions(const Hist& h, Alphabet& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, hist::Act>) out.insert(n.name);
        else if constexpr (std::is_same_v<T, hist::Seq>) { collect_actions(n.first, out); collect_actions(n.second, out); }
        else if constexpr (std::is_same_v<T, hist::Choice>) { collect_actions(n.left, out); collect_actions(n.right, out); }
        else if constexpr (std::is_same_v<T, hist::Star>) collect_actions(n.body, out);
      },
      h->node);
}

inline Alphabet actions(const Hist& h) {
  Alphabet out;
  collect_actions(h, out);
  return out;
}

inline bool has_variables(const Hist& h) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, hist::Var>) return true;
        else if constexpr (std::is_same_v<T, hist::Seq>) return has_variables(n.first) || has_variables(n.second);
        else if constexpr (std::is_same_v<T, hist::Choice>) return has_variables(n.left) || has_variables(n.right);
        else if constexpr (std::is_same_v<T, hist::Star>) return has_variables(n.body);
        else return false;
      },
      h->node);
}

// ---------------------------------------------------------------------------
// Text form: `eps`, action names, `.` sequencing, `+` choice, postfix `*`.

namespace detail {

inline bool is_atomic(const Hist& h) { return h->is<hist::Eps>() || h->is<hist::Act>() || h->is<hist::Var>(); }

inline void print_hist(std::ostream& os, const Hist& h);

inline void print_wrapped(std::ostream& os, const Hist& h, bool wrap) {
  if (wrap) os << '(';
  print_hist(os, h);
  if (wrap) os << ')';
}

inline void print_hist(std::ostream& os, const Hist& h) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, hist::Eps>) os << "eps";
        else if constexpr (std::is_same_v<T, hist::Act>) os << n.name;
        else if constexpr (std::is_same_v<T, hist::Var>) os << '?' << n.id;
        else if constexpr (std::is_same_v<T, hist::Star>) {
          print_wrapped(os, n.body, !is_atomic(n.body));
          os << '*';
        } else if constexpr (std::is_same_v<T, hist::Seq>) {
          print_wrapped(os, n.first, n.first->template is<hist::Seq>() || n.first->template is<hist::Choice>());
          os << " . ";
          print_wrapped(os, n.second, n.second->template is<hist::Choice>());
        } else if constexpr (std::is_same_v<T, hist::Choice>) {
          print_wrapped(os, n.left, n.left->template is<hist::Seq>() || n.left->template is<hist::Choice>());
          os << " + ";
          print_wrapped(os, n.right, n.right->template is<hist::Seq>());
        }
      },
      h->node);
}

class HistParser {
public:
  explicit HistParser(std::string_view text) : src_(text) {}

  Hist parse() {
    Hist h = choice();
    skip_ws();
    if (pos_ < src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return h;
  }

private:
  std::string_view src_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
      if (src_[i] == '\n') { ++line; col = 1; }
      else ++col;
    }
    throw SyntaxError(msg, line, col);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Hist choice() {
    Hist left = sequence();
    if (eat('+')) return hist::choice(left, choice());
    return left;
  }

  Hist sequence() {
    Hist left = postfix();
    if (eat('.')) return hist::seq(left, sequence());
    return left;
  }

  Hist postfix() {
    Hist h = atom();
    while (eat('*')) h = hist::star(h);
    return h;
  }

  Hist atom() {
    skip_ws();
    if (eat('(')) {
      Hist h = choice();
      if (!eat(')')) fail("expected ')'");
      return h;
    }
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    if (start == pos_) fail(pos_ < src_.size() ? std::string("unexpected '") + src_[pos_] + "'" : "unexpected end of input");
    std::string name(src_.substr(start, pos_ - start));
    if (name == "eps") return hist::eps();
    return hist::act(std::move(name));
  }
};

} // namespace detail

inline std::string to_string(const Hist& h) {
  std::ostringstream os;
  detail::print_hist(os, h);
  return os.str();
}

inline Hist parse_history(std::string_view text) { return detail::HistParser(text).parse(); }

// ---------------------------------------------------------------------------
// Normal form

namespace detail {
inline void flatten_seq(const Hist& h, std::vector<Hist>& out) {
  if (auto s = h->as<hist::Seq>()) {
    flatten_seq(s->first, out);
    flatten_seq(s->second, out);
  } else if (!h->is<hist::Eps>()) {
    out.push_back(h);
  }
}

inline void flatten_choice(const Hist& h, std::vector<Hist>& out) {
  if (auto c = h->as<hist::Choice>()) {
    flatten_choice(c->left, out);
    flatten_choice(c->right, out);
  } else {
    out.push_back(h);
  }
}
} // namespace detail

// Unit laws for eps, associativity, sorted and deduplicated choices.
// Language-preserving; idempotent.
inline Hist normalize(const Hist& h) {
  return std::visit(
      [&](const auto& n) -> Hist {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, hist::Seq>) {
          std::vector<Hist> parts;
          detail::flatten_seq(normalize(n.first), parts);
          detail::flatten_seq(normalize(n.second), parts);
          return hist::seq_of(parts);
        } else if constexpr (std::is_same_v<T, hist::Choice>) {
          std::vector<Hist> alts;
          detail::flatten_choice(normalize(n.left), alts);
          detail::flatten_choice(normalize(n.right), alts);
          std::vector<std::pair<std::string, Hist>> keyed;
          for (auto& a : alts) keyed.emplace_back(to_string(a), a);
          std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
          keyed.erase(std::unique(keyed.begin(), keyed.end(),
                                  [](const auto& x, const auto& y) { return x.first == y.first; }),
                      keyed.end());
          Hist out = keyed.back().second;
          for (auto it = keyed.rbegin() + 1; it != keyed.rend(); ++it) out = hist::choice(it->second, out);
          return out;
        } else if constexpr (std::is_same_v<T, hist::Star>) {
          Hist body = normalize(n.body);
          if (body->is<hist::Eps>() || body->is<hist::Star>()) return body;
          return hist::star(body);
        } else {
          return h;
        }
      },
      h->node);
}

// ---------------------------------------------------------------------------
// Automata

using State = std::size_t;

// Nondeterministic automaton without epsilon moves. Symbols index `alphabet`
// in sorted order.
struct TraceAutomaton {
  std::vector<std::string> alphabet;
  State initial = 0;
  std::vector<bool> accepting;
  std::vector<std::vector<std::pair<std::size_t, State>>> transitions; // per state: (symbol, target)

  std::size_t num_states() const { return accepting.size(); }

  std::size_t symbol(const std::string& action) const {
    auto it = std::lower_bound(alphabet.begin(), alphabet.end(), action);
    if (it == alphabet.end() || *it != action) throw AlphabetError("action '" + action + "' is not in the alphabet");
    return static_cast<std::size_t>(it - alphabet.begin());
  }
};

namespace detail {

// Thompson construction with epsilon edges (symbol npos).
struct ThompsonBuilder {
  static constexpr std::size_t epsilon = static_cast<std::size_t>(-1);
  const std::vector<std::string>& alphabet;
  std::vector<std::vector<std::pair<std::size_t, State>>> edges;

  State fresh() {
    edges.emplace_back();
    return edges.size() - 1;
  }

  std::pair<State, State> build(const Hist& h) {
    State s = fresh();
    State t = fresh();
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, hist::Eps>) {
            edges[s].push_back({epsilon, t});
          } else if constexpr (std::is_same_v<T, hist::Act>) {
            auto it = std::lower_bound(alphabet.begin(), alphabet.end(), n.name);
            if (it == alphabet.end() || *it != n.name)
              throw AlphabetError("action '" + n.name + "' is not in the alphabet");
            edges[s].push_back({static_cast<std::size_t>(it - alphabet.begin()), t});
          } else if constexpr (std::is_same_v<T, hist::Seq>) {
            auto [a0, a1] = build(n.first);
            auto [b0, b1] = build(n.second);
            edges[s].push_back({epsilon, a0});
            edges[a1].push_back({epsilon, b0});
            edges[b1].push_back({epsilon, t});
          } else if constexpr (std::is_same_v<T, hist::Choice>) {
            auto [a0, a1] = build(n.left);
            auto [b0, b1] = build(n.right);
            edges[s].push_back({epsilon, a0});
            edges[s].push_back({epsilon, b0});
            edges[a1].push_back({epsilon, t});
            edges[b1].push_back({epsilon, t});
          } else if constexpr (std::is_same_v<T, hist::Star>) {
            auto [a0, a1] = build(n.body);
            edges[s].push_back({epsilon, t});
            edges[s].push_back({epsilon, a0});
            edges[a1].push_back({epsilon, a0});
            edges[a1].push_back({epsilon, t});
          } else {
            throw Error("history expression contains an unresolved effect variable");
          }
        },
        h->node);
    return {s, t};
  }
};

inline std::vector<State> epsilon_closure(const std::vector<std::vector<std::pair<std::size_t, State>>>& edges,
                                          State from) {
  std::vector<bool> seen(edges.size(), false);
  std::vector<State> stack{from}, out;
  seen[from] = true;
  while (!stack.empty()) {
    State q = stack.back();
    stack.pop_back();
    out.push_back(q);
    for (auto [sym, r] : edges[q]) {
      if (sym == ThompsonBuilder::epsilon && !seen[r]) {
        seen[r] = true;
        stack.push_back(r);
      }
    }
  }
  return out;
}

// Keeps the states reachable from the initial one, renumbered in BFS order.
inline TraceAutomaton trim_reachable(const TraceAutomaton& a) {
  std::vector<State> order{a.initial};
  std::map<State, State> index{{a.initial, 0}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (auto [sym, r] : a.transitions[order[i]]) {
      if (index.emplace(r, order.size()).second) order.push_back(r);
    }
  }
  TraceAutomaton out;
  out.alphabet = a.alphabet;
  out.initial = 0;
  out.accepting.resize(order.size());
  out.transitions.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.accepting[i] = a.accepting[order[i]];
    for (auto [sym, r] : a.transitions[order[i]]) out.transitions[i].push_back({sym, index.at(r)});
    auto& ts = out.transitions[i];
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  return out;
}

} // namespace detail

// Automaton accepting exactly the traces of `h`. Throws AlphabetError when
// `h` mentions an action outside `alphabet`.
inline TraceAutomaton to_automaton(const Hist& h, const Alphabet& alphabet = default_alphabet()) {
  std::vector<std::string> sigma(alphabet.begin(), alphabet.end());
  detail::ThompsonBuilder b{sigma, {}};
  auto [start, end] = b.build(h);

  TraceAutomaton nfa;
  nfa.alphabet = sigma;
  nfa.initial = start;
  nfa.accepting.assign(b.edges.size(), false);
  nfa.transitions.resize(b.edges.size());
  for (State q = 0; q < b.edges.size(); ++q) {
    for (State p : detail::epsilon_closure(b.edges, q)) {
      if (p == end) nfa.accepting[q] = true;
      for (auto [sym, r] : b.edges[p])
        if (sym != detail::ThompsonBuilder::epsilon) nfa.transitions[q].push_back({sym, r});
    }
  }
  return detail::trim_reachable(nfa);
}

// Every state from which an accepting state is reachable becomes accepting.
inline TraceAutomaton prefix_close(const TraceAutomaton& a) {
  std::vector<std::vector<State>> reverse(a.num_states());
  for (State q = 0; q < a.num_states(); ++q)
    for (auto [sym, r] : a.transitions[q]) reverse[r].push_back(q);

  TraceAutomaton out = a;
  std::vector<State> stack;
  for (State q = 0; q < a.num_states(); ++q)
    if (a.accepting[q]) stack.push_back(q);
  while (!stack.empty()) {
    State q = stack.back();
    stack.pop_back();
    for (State p : reverse[q]) {
      if (!out.accepting[p]) {
        out.accepting[p] = true;
        stack.push_back(p);
      }
    }
  }
  return out;
}

namespace detail {
inline std::vector<State> successors(const TraceAutomaton& a, const std::vector<State>& from, std::size_t sym) {
  std::vector<State> out;
  for (State q : from)
    for (auto [s, r] : a.transitions[q])
      if (s == sym) out.push_back(r);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool any_accepting(const TraceAutomaton& a, const std::vector<State>& states) {
  return std::any_of(states.begin(), states.end(), [&](State q) { return a.accepting[q]; });
}
} // namespace detail

// Subset simulation. Throws AlphabetError for a foreign action, which is a
// configuration problem rather than a negative answer.
inline bool member(const Word& m, const TraceAutomaton& a) {
  std::vector<State> current{a.initial};
  for (const auto& action : m) {
    std::size_t sym = a.symbol(action);
    current = detail::successors(a, current, sym);
  }
  return detail::any_accepting(a, current);
}

struct InclusionResult {
  bool holds;
  std::optional<Word> counterexample; // shortest word of the smaller side missing from the larger
};

// Decides language(smaller) ⊆ language(larger) by breadth-first search over
// the product of `smaller` with the subset construction of `larger`.
inline InclusionResult includes(const TraceAutomaton& larger, const TraceAutomaton& smaller) {
  if (larger.alphabet != smaller.alphabet) throw AlphabetError("inclusion check over different alphabets");

  using Node = std::pair<State, std::vector<State>>;
  std::map<Node, std::size_t> seen;
  std::vector<Node> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> parent; // (node, symbol)
  std::deque<std::size_t> queue;

  auto visit = [&](Node n, std::size_t from, std::size_t sym) {
    auto [it, inserted] = seen.emplace(n, nodes.size());
    if (!inserted) return;
    nodes.push_back(std::move(n));
    parent.push_back({from, sym});
    queue.push_back(nodes.size() - 1);
  };

  const std::size_t none = static_cast<std::size_t>(-1);
  visit({smaller.initial, {larger.initial}}, none, none);
  while (!queue.empty()) {
    std::size_t i = queue.front();
    queue.pop_front();
    auto [q, subset] = nodes[i];
    if (smaller.accepting[q] && !detail::any_accepting(larger, subset)) {
      Word w;
      for (std::size_t k = i; parent[k].first != none; k = parent[k].first) w.push_back(smaller.alphabet[parent[k].second]);
      std::reverse(w.begin(), w.end());
      return {false, std::move(w)};
    }
    for (std::size_t sym = 0; sym < smaller.alphabet.size(); ++sym) {
      std::vector<State> next_subset;
      bool computed = false;
      for (auto [s, r] : smaller.transitions[q]) {
        if (s != sym) continue;
        if (!computed) {
          next_subset = detail::successors(larger, subset, sym);
          computed = true;
        }
        visit({r, next_subset}, i, sym);
      }
    }
  }
  return {true, std::nullopt};
}

// Shortest accepted word that contains at least one action of `required`
// (any accepted word when `required` is empty).
inline std::optional<Word> shortest_word_containing(const TraceAutomaton& a, const Alphabet& required = {}) {
  std::vector<bool> wanted(a.alphabet.size(), false);
  for (std::size_t s = 0; s < a.alphabet.size(); ++s) wanted[s] = required.count(a.alphabet[s]) > 0;
  bool need = !required.empty();

  // Node = state * 2 + (required action seen)
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::size_t>> parent(a.num_states() * 2, {none, none});
  std::vector<bool> seen(a.num_states() * 2, false);
  std::deque<std::size_t> queue;
  std::size_t start = a.initial * 2 + (need ? 0 : 1);
  seen[start] = true;
  queue.push_back(start);
  while (!queue.empty()) {
    std::size_t n = queue.front();
    queue.pop_front();
    State q = n / 2;
    bool flag = n % 2;
    if (flag && a.accepting[q]) {
      Word w;
      for (std::size_t k = n; k != start; k = parent[k].first) w.push_back(a.alphabet[parent[k].second]);
      std::reverse(w.begin(), w.end());
      return w;
    }
    for (auto [sym, r] : a.transitions[q]) {
      std::size_t m = r * 2 + ((flag || wanted[sym]) ? 1 : 0);
      if (!seen[m]) {
        seen[m] = true;
        parent[m] = {n, sym};
        queue.push_back(m);
      }
    }
  }
  return std::nullopt;
}

struct EquivalenceResult {
  bool equivalent;
  std::optional<Word> witness;   // in exactly one of the two languages
  bool witness_in_first = false; // which side accepts the witness
};

inline EquivalenceResult compare_languages(const Hist& h1, const Hist& h2, const Alphabet& alphabet) {
  TraceAutomaton a1 = to_automaton(h1, alphabet);
  TraceAutomaton a2 = to_automaton(h2, alphabet);
  auto fwd = includes(a2, a1);
  auto bwd = includes(a1, a2);
  if (fwd.holds && bwd.holds) return {true, std::nullopt, false};
  // Report the shorter of the two witnesses.
  if (!fwd.holds && (bwd.holds || fwd.counterexample->size() <= bwd.counterexample->size()))
    return {false, fwd.counterexample, true};
  return {false, bwd.counterexample, false};
}

// Language equality over `alphabet`.
inline bool equiv(const Hist& h1, const Hist& h2, const Alphabet& alphabet) {
  return compare_languages(h1, h2, alphabet).equivalent;
}

// Language equality over the default alphabet extended with every action
// either side mentions.
inline bool equiv(const Hist& h1, const Hist& h2) {
  Alphabet sigma = default_alphabet();
  collect_actions(h1, sigma);
  collect_actions(h2, sigma);
  return equiv(h1, h2, sigma);
}

} // namespace stv
