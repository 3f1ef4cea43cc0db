#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

// Hash-consed DAG of single-bit expressions over nonce bits, key bits and
// round-constant bits, with operators XOR (n-ary), AND, OR and the literals
// 0/1. Construction canonicalizes aggressively (constant folding, XOR
// flattening, pair cancellation, operand ordering), so two structurally equal
// expressions always share one node id.
namespace gimli_sifa {

enum class BitSource : uint8_t { nonce, key, constant };

struct BitRef {
  BitSource source = BitSource::nonce;
  uint8_t word = 0;  // nonce word 0..3 or key word 0..7; unused for constants
  uint8_t bit = 0;   // 0..31

  auto operator<=>(const BitRef&) const = default;

  std::string name() const {
    switch (source) {
      case BitSource::nonce: return "n" + std::to_string(word) + "." + std::to_string(bit);
      case BitSource::key: return "k" + std::to_string(word) + "." + std::to_string(bit);
      case BitSource::constant: return "c" + std::to_string(bit);
    }
    return "?";
  }
};

inline BitRef nonce_bit(int word, int bit) {
  return {BitSource::nonce, static_cast<uint8_t>(word), static_cast<uint8_t>(bit)};
}
inline BitRef key_bit(int word, int bit) {
  return {BitSource::key, static_cast<uint8_t>(word), static_cast<uint8_t>(bit)};
}
inline BitRef constant_bit(int bit) {
  return {BitSource::constant, 0, static_cast<uint8_t>(bit)};
}

class ExprArena {
 public:
  using NodeId = uint32_t;
  enum class Op : uint8_t { lit, leaf, band, bor, bxor };

  struct Node {
    Op op = Op::lit;
    bool has_nonce = false;
    bool has_key = false;
    BitRef ref{};                 // leaf
    NodeId lhs = 0, rhs = 0;      // band / bor
    std::vector<NodeId> xops;     // bxor operands, sorted ascending
  };

  static constexpr NodeId id_zero = 0;
  static constexpr NodeId id_one = 1;

  ExprArena() {
    Node zero;
    zero.op = Op::lit;
    nodes_.push_back(zero);  // 0
    nodes_.push_back(zero);  // 1
  }

  const Node& node(NodeId id) const { return nodes_[id]; }
  size_t size() const { return nodes_.size(); }

  bool is_literal(NodeId id) const { return id <= id_one; }
  bool has_nonce(NodeId id) const { return nodes_[id].has_nonce; }
  bool has_key(NodeId id) const { return nodes_[id].has_key; }
  bool key_only(NodeId id) const { return nodes_[id].has_key && !nodes_[id].has_nonce; }

  NodeId literal(bool v) { return v ? id_one : id_zero; }

  NodeId leaf(BitRef ref) {
    uint32_t k = leaf_key(ref);
    auto it = leaves_.find(k);
    if (it != leaves_.end()) return it->second;
    Node n;
    n.op = Op::leaf;
    n.ref = ref;
    n.has_nonce = ref.source == BitSource::nonce;
    n.has_key = ref.source == BitSource::key;
    NodeId id = push(std::move(n));
    leaves_.emplace(k, id);
    return id;
  }

  NodeId band(NodeId a, NodeId b) {
    if (a == id_zero || b == id_zero) return id_zero;
    if (a == id_one) return b;
    if (b == id_one) return a;
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    return intern_binary(Op::band, a, b);
  }

  NodeId bor(NodeId a, NodeId b) {
    if (a == id_one || b == id_one) return id_one;
    if (a == id_zero) return b;
    if (b == id_zero) return a;
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    return intern_binary(Op::bor, a, b);
  }

  NodeId bxor(NodeId a, NodeId b) {
    NodeId ops[2] = {a, b};
    return bxor(std::vector<NodeId>(ops, ops + 2));
  }

  NodeId bxor(std::vector<NodeId> ops) {
    // Flatten nested XORs one level (children are already canonical), fold
    // literals into a parity bit, sort, and cancel equal pairs.
    std::vector<NodeId> flat;
    bool parity = false;
    for (NodeId id : ops) {
      if (id == id_zero) continue;
      if (id == id_one) {
        parity = !parity;
        continue;
      }
      if (nodes_[id].op == Op::bxor) {
        for (NodeId sub : nodes_[id].xops) {
          if (sub == id_one) parity = !parity;
          else flat.push_back(sub);
        }
      } else {
        flat.push_back(id);
      }
    }
    std::sort(flat.begin(), flat.end());
    std::vector<NodeId> kept;
    kept.reserve(flat.size());
    for (size_t i = 0; i < flat.size();) {
      if (i + 1 < flat.size() && flat[i] == flat[i + 1]) {
        i += 2;  // x ^ x = 0
      } else {
        kept.push_back(flat[i]);
        ++i;
      }
    }
    if (kept.empty()) return literal(parity);
    if (kept.size() == 1 && !parity) return kept[0];
    if (parity) kept.insert(kept.begin(), id_one);
    return intern_xor(std::move(kept));
  }

  // Total evaluation; `leaf_value` resolves every BitRef to 0/1.
  bool evaluate(NodeId root, const std::function<bool(BitRef)>& leaf_value) const {
    std::vector<int8_t> memo(nodes_.size(), -1);
    return eval_rec(root, leaf_value, memo);
  }

  // Distinct BitRef leaves below `root`, in canonical BitRef order.
  std::set<BitRef> leaf_set(NodeId root) const {
    std::set<BitRef> out;
    std::vector<uint8_t> seen(nodes_.size(), 0);
    collect_leaves(root, out, seen);
    return out;
  }

  // Occurrences of leaves from `source` in the fully expanded expression
  // tree: a shared subexpression counts once per path from the root, the way
  // it would appear in a written-out equation system.
  long expanded_leaf_slots(NodeId root, BitSource source) const {
    std::unordered_map<NodeId, long> memo;
    auto rec = [&](auto&& self, NodeId id) -> long {
      if (is_literal(id)) return 0;
      auto it = memo.find(id);
      if (it != memo.end()) return it->second;
      const Node& n = nodes_[id];
      long r = 0;
      switch (n.op) {
        case Op::leaf: r = n.ref.source == source ? 1 : 0; break;
        case Op::band:
        case Op::bor: r = self(self, n.lhs) + self(self, n.rhs); break;
        case Op::bxor:
          for (NodeId sub : n.xops) r += self(self, sub);
          break;
        case Op::lit: break;
      }
      memo.emplace(id, r);
      return r;
    };
    return rec(rec, root);
  }

  // Prefix-notation rendering, e.g. "(xor k0.21 n0.6 (or n0.5 k4.29))".
  std::string render(NodeId id) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::lit: return id == id_one ? "1" : "0";
      case Op::leaf: return n.ref.name();
      case Op::band: return "(and " + render(n.lhs) + " " + render(n.rhs) + ")";
      case Op::bor: return "(or " + render(n.lhs) + " " + render(n.rhs) + ")";
      case Op::bxor: {
        std::string s = "(xor";
        for (NodeId sub : n.xops) s += " " + render(sub);
        return s + ")";
      }
    }
    return "?";
  }

 private:
  static uint32_t leaf_key(BitRef r) {
    return (static_cast<uint32_t>(r.source) << 16) | (static_cast<uint32_t>(r.word) << 8) | r.bit;
  }

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId intern_binary(Op op, NodeId a, NodeId b) {
    uint64_t k = (static_cast<uint64_t>(op) << 60) ^ (static_cast<uint64_t>(a) << 30) ^ b;
    auto it = binary_.find(k);
    if (it != binary_.end()) return it->second;
    Node n;
    n.op = op;
    n.lhs = a;
    n.rhs = b;
    n.has_nonce = nodes_[a].has_nonce || nodes_[b].has_nonce;
    n.has_key = nodes_[a].has_key || nodes_[b].has_key;
    NodeId id = push(std::move(n));
    binary_.emplace(k, id);
    return id;
  }

  NodeId intern_xor(std::vector<NodeId> ops) {
    auto it = xor_.find(ops);
    if (it != xor_.end()) return it->second;
    Node n;
    n.op = Op::bxor;
    for (NodeId sub : ops) {
      n.has_nonce = n.has_nonce || nodes_[sub].has_nonce;
      n.has_key = n.has_key || nodes_[sub].has_key;
    }
    n.xops = ops;
    NodeId id = push(std::move(n));
    xor_.emplace(std::move(ops), id);
    return id;
  }

  bool eval_rec(NodeId id, const std::function<bool(BitRef)>& leaf_value,
                std::vector<int8_t>& memo) const {
    if (id == id_zero) return false;
    if (id == id_one) return true;
    if (memo[id] >= 0) return memo[id] != 0;
    const Node& n = nodes_[id];
    bool v = false;
    switch (n.op) {
      case Op::leaf: v = leaf_value(n.ref); break;
      case Op::band: v = eval_rec(n.lhs, leaf_value, memo) && eval_rec(n.rhs, leaf_value, memo); break;
      case Op::bor: v = eval_rec(n.lhs, leaf_value, memo) || eval_rec(n.rhs, leaf_value, memo); break;
      case Op::bxor:
        for (NodeId sub : n.xops) v ^= eval_rec(sub, leaf_value, memo);
        break;
      case Op::lit: break;
    }
    memo[id] = v ? 1 : 0;
    return v;
  }

  void collect_leaves(NodeId id, std::set<BitRef>& out, std::vector<uint8_t>& seen) const {
    if (seen[id]) return;
    seen[id] = 1;
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::leaf: out.insert(n.ref); break;
      case Op::band:
      case Op::bor:
        collect_leaves(n.lhs, out, seen);
        collect_leaves(n.rhs, out, seen);
        break;
      case Op::bxor:
        for (NodeId sub : n.xops) collect_leaves(sub, out, seen);
        break;
      case Op::lit: break;
    }
  }

  struct VecHash {
    size_t operator()(const std::vector<NodeId>& v) const {
      uint64_t h = 0x9e3779b97f4a7c15ull;
      for (NodeId x : v) h = (h ^ x) * 0x100000001b3ull;
      return static_cast<size_t>(h);
    }
  };

  std::vector<Node> nodes_;
  std::unordered_map<uint32_t, NodeId> leaves_;
  std::unordered_map<uint64_t, NodeId> binary_;
  std::unordered_map<std::vector<NodeId>, NodeId, VecHash> xor_;
};

using NodeId = ExprArena::NodeId;

}  // namespace gimli_sifa
