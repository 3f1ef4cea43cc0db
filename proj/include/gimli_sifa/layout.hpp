#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bitexpr.hpp"
#include "tracer.hpp"

// Reduction of a traced bit expression to its independently testable
// parameters. Key bits that mix with nonce bits under AND/OR can be recovered
// individually; maximal key-only operands of an XOR can only ever be
// recovered as their combined sum, so each such operand set collapses into a
// single group parameter. The reduction iterates: once enough bits are
// individually recoverable, a key-only operand whose leaves are all covered
// stops hiding the remaining bare leaf of its XOR, which is then promoted.
namespace gimli_sifa {

struct HypothesisLayout {
  struct Group {
    std::vector<NodeId> operands;  // key-only XOR operands, canonical order
    std::vector<BitRef> leaves;    // distinct key bits inside this group
  };

  NodeId root = 0;
  std::vector<BitRef> unique_bits;  // sorted by (word, bit)
  std::vector<Group> groups;        // discovery order
  // XOR nodes whose key-only operands were replaced by a group parameter.
  std::unordered_map<NodeId, uint32_t> group_of_xor_node;
  std::set<BitRef> distinct_key_bits;

  int parameter_count() const {
    return static_cast<int>(unique_bits.size() + groups.size());
  }

  // Involved key bits counted per parameter: every unique bit once plus every
  // group's leaves. A bit living in two groups (or in a group and the unique
  // list) counts each time; this is the count the attack literature quotes.
  int n_keybits() const {
    size_t n = unique_bits.size();
    for (const Group& g : groups) n += g.leaves.size();
    return static_cast<int>(n);
  }

  int unique_index(const BitRef& r) const {
    auto it = std::lower_bound(unique_bits.begin(), unique_bits.end(), r);
    if (it == unique_bits.end() || !(*it == r))
      throw std::logic_error("key bit " + r.name() + " is not a unique parameter");
    return static_cast<int>(it - unique_bits.begin());
  }
};

namespace detail {

struct LayoutBuilder {
  const ExprArena& arena;
  NodeId root;
  std::set<BitRef> unique;
  std::vector<NodeId> xor_nodes, andor_nodes;  // preorder, evaluation context only
  std::unordered_map<NodeId, std::vector<BitRef>> key_leaves_memo;

  explicit LayoutBuilder(const ExprArena& a, NodeId r) : arena(a), root(r) {}

  const std::vector<BitRef>& key_leaves(NodeId id) {
    auto it = key_leaves_memo.find(id);
    if (it != key_leaves_memo.end()) return it->second;
    std::vector<BitRef> out;
    for (const BitRef& l : arena.leaf_set(id))
      if (l.source == BitSource::key) out.push_back(l);
    return key_leaves_memo.emplace(id, std::move(out)).first->second;
  }

  bool determined(NodeId id) {
    for (const BitRef& l : key_leaves(id))
      if (!unique.count(l)) return false;
    return true;
  }

  bool is_key_leaf(NodeId id) const {
    const auto& n = arena.node(id);
    return n.op == ExprArena::Op::leaf && n.ref.source == BitSource::key;
  }

  // Walk the evaluation context: descend only into nonce-involving subtrees.
  // Key-only operands are atoms here; their interior is never parameterized
  // on its own.
  void walk() {
    xor_nodes.clear();
    andor_nodes.clear();
    std::set<NodeId> visited;
    descend(root, visited);
  }

  void descend(NodeId id, std::set<NodeId>& visited) {
    if (arena.is_literal(id)) return;
    if (!visited.insert(id).second) return;
    const auto& n = arena.node(id);
    switch (n.op) {
      case ExprArena::Op::leaf:
        return;
      case ExprArena::Op::bxor:
        xor_nodes.push_back(id);
        for (NodeId op : n.xops)
          if (!arena.is_literal(op) && !arena.key_only(op)) descend(op, visited);
        return;
      case ExprArena::Op::band:
      case ExprArena::Op::bor:
        andor_nodes.push_back(id);
        for (NodeId child : {n.lhs, n.rhs})
          if (!arena.key_only(child)) descend(child, visited);
        return;
      case ExprArena::Op::lit:
        return;
    }
  }

  void run_fixpoint() {
    // Key leaves sitting directly under a nonce-involving AND/OR context are
    // individually recoverable. Key-only compounds in that position expose
    // all of their leaves.
    for (NodeId id : andor_nodes) {
      const auto& n = arena.node(id);
      for (NodeId child : {n.lhs, n.rhs}) {
        if (is_key_leaf(child)) unique.insert(arena.node(child).ref);
        else if (arena.key_only(child))
          for (const BitRef& l : key_leaves(child)) unique.insert(l);
      }
    }
    // Promote a bare key leaf whenever it is the only undetermined key-only
    // operand left in its XOR node.
    bool changed = true;
    while (changed) {
      changed = false;
      for (NodeId id : xor_nodes) {
        const auto& n = arena.node(id);
        NodeId lone = 0;
        int undetermined = 0;
        for (NodeId op : n.xops) {
          if (!arena.key_only(op) || determined(op)) continue;
          ++undetermined;
          lone = op;
        }
        if (undetermined == 1 && is_key_leaf(lone) && !unique.count(arena.node(lone).ref)) {
          unique.insert(arena.node(lone).ref);
          changed = true;
        }
      }
    }
  }

  HypothesisLayout finish() {
    HypothesisLayout out;
    out.root = root;
    out.unique_bits.assign(unique.begin(), unique.end());
    std::map<std::vector<NodeId>, uint32_t> group_index;
    for (NodeId id : xor_nodes) {
      const auto& n = arena.node(id);
      std::vector<NodeId> ops;
      for (NodeId op : n.xops)
        if (arena.key_only(op) && !determined(op)) ops.push_back(op);
      if (ops.empty()) continue;
      auto [it, fresh] = group_index.try_emplace(ops, static_cast<uint32_t>(out.groups.size()));
      if (fresh) {
        HypothesisLayout::Group g;
        g.operands = ops;
        std::set<BitRef> ls;
        for (NodeId op : ops)
          for (const BitRef& l : key_leaves(op)) ls.insert(l);
        g.leaves.assign(ls.begin(), ls.end());
        out.groups.push_back(std::move(g));
      }
      out.group_of_xor_node.emplace(id, it->second);
    }
    for (const BitRef& l : arena.leaf_set(root))
      if (l.source == BitSource::key) out.distinct_key_bits.insert(l);
    return out;
  }
};

}  // namespace detail

inline HypothesisLayout reduce_layout(const ExprArena& arena, NodeId root) {
  // A target bit that depends on no nonce bit cannot be attacked bit by bit;
  // none of the traced targets produce one, so treat it as a usage error.
  if (arena.key_only(root))
    throw std::invalid_argument("expression is key-only; no per-nonce prediction exists");
  detail::LayoutBuilder b(arena, root);
  b.walk();
  b.run_fixpoint();
  return b.finish();
}

// Hypothesis = one bit per parameter, unique bits first (sorted order), then
// groups (discovery order), packed little-endian into an integer index.
using Hypothesis = uint64_t;

inline Hypothesis induced_hypothesis(const ExprArena& arena, const HypothesisLayout& layout,
                                     const Key& key) {
  if (layout.parameter_count() > 63) throw std::invalid_argument("too many parameters");
  Hypothesis h = 0;
  int t = 0;
  for (const BitRef& r : layout.unique_bits) {
    if (key.bit(r.word, r.bit)) h |= Hypothesis{1} << t;
    ++t;
  }
  Nonce zero{};
  for (const auto& g : layout.groups) {
    bool v = false;
    for (NodeId op : g.operands) v ^= evaluate_full(arena, op, key, zero);
    if (v) h |= Hypothesis{1} << t;
    ++t;
  }
  return h;
}

// Reference evaluation of the reduced expression under a hypothesis: group
// operands evaluate to their parameter bit, unique key leaves to theirs,
// nonce and constant leaves to their actual values.
inline bool evaluate_hypothesis(const ExprArena& arena, const HypothesisLayout& layout,
                                Hypothesis h, const Nonce& nonce) {
  struct Eval {
    const ExprArena& arena;
    const HypothesisLayout& layout;
    Hypothesis h;
    const Nonce& nonce;

    bool param(int t) const { return (h >> t) & 1; }

    bool run(NodeId id) const {
      if (id == ExprArena::id_zero) return false;
      if (id == ExprArena::id_one) return true;
      const auto& n = arena.node(id);
      switch (n.op) {
        case ExprArena::Op::leaf:
          if (n.ref.source == BitSource::key) return param(layout.unique_index(n.ref));
          return resolve_leaf(n.ref, Key{}, nonce);
        case ExprArena::Op::band:
          return run(n.lhs) && run(n.rhs);
        case ExprArena::Op::bor:
          return run(n.lhs) || run(n.rhs);
        case ExprArena::Op::bxor: {
          bool v = false;
          auto git = layout.group_of_xor_node.find(id);
          const std::vector<NodeId>* gops = nullptr;
          if (git != layout.group_of_xor_node.end()) {
            gops = &layout.groups[git->second].operands;
            v = param(static_cast<int>(layout.unique_bits.size()) + git->second);
          }
          for (NodeId op : n.xops) {
            if (gops && std::binary_search(gops->begin(), gops->end(), op)) continue;
            v ^= run(op);
          }
          return v;
        }
        case ExprArena::Op::lit:
          return false;
      }
      return false;
    }
  };
  return Eval{arena, layout, h, nonce}.run(layout.root);
}

// --- bit-packed evaluation ---------------------------------------------------
//
// The attack evaluates one expression for every hypothesis over every
// collected nonce. The tape below runs 64 nonces per step: nonce leaves are
// packed into lanes once per trace set, parameter leaves broadcast to all
// lanes, and each tape instruction is a single 64-bit bitwise operation.

struct EvalTape {
  enum : uint8_t { op_and, op_or, op_xor, op_nonce, op_param, op_one, op_zero };
  struct Instr {
    uint8_t op;
    uint32_t a = 0, b = 0;
  };

  std::vector<Instr> code;          // SSA order; result of instr i in slot i
  std::vector<BitRef> nonce_slots;  // distinct nonce leaves, first-use order
  uint32_t param_count = 0;

  size_t scratch_size() const { return code.size(); }

  // nonce_lanes: one word per nonce slot for this block of 64 nonces.
  uint64_t eval_block(const uint64_t* nonce_lanes, Hypothesis h, uint64_t* scratch) const {
    uint64_t out = 0;
    for (size_t i = 0; i < code.size(); ++i) {
      const Instr& in = code[i];
      switch (in.op) {
        case op_and: out = scratch[in.a] & scratch[in.b]; break;
        case op_or: out = scratch[in.a] | scratch[in.b]; break;
        case op_xor: out = scratch[in.a] ^ scratch[in.b]; break;
        case op_nonce: out = nonce_lanes[in.a]; break;
        case op_param: out = ((h >> in.a) & 1) ? ~uint64_t{0} : 0; break;
        case op_one: out = ~uint64_t{0}; break;
        case op_zero: out = 0; break;
      }
      scratch[i] = out;
    }
    return out;
  }
};

inline EvalTape compile_tape(const ExprArena& arena, const HypothesisLayout& layout) {
  EvalTape tape;
  tape.param_count = static_cast<uint32_t>(layout.parameter_count());
  std::unordered_map<NodeId, uint32_t> memo;
  std::unordered_map<uint32_t, uint32_t> nonce_slot;  // (word<<8|bit) -> slot

  auto emit = [&](EvalTape::Instr in) {
    tape.code.push_back(in);
    return static_cast<uint32_t>(tape.code.size() - 1);
  };
  auto emit_param = [&](int t) {
    return emit({EvalTape::op_param, static_cast<uint32_t>(t), 0});
  };

  auto compile = [&](auto&& self, NodeId id) -> uint32_t {
    auto it = memo.find(id);
    if (it != memo.end()) return it->second;
    const auto& n = arena.node(id);
    uint32_t idx = 0;
    switch (n.op) {
      case ExprArena::Op::lit:
        // Literal zero never survives canonicalization below a reachable
        // operator; only the parity literal 1 does.
        idx = emit({EvalTape::op_one, 0, 0});
        break;
      case ExprArena::Op::leaf:
        if (n.ref.source == BitSource::key) {
          idx = emit_param(layout.unique_index(n.ref));
        } else if (n.ref.source == BitSource::constant) {
          if ((round_constant(gimli_rounds) >> n.ref.bit) & 1) idx = emit({EvalTape::op_one, 0, 0});
          else idx = emit({EvalTape::op_zero, 0, 0});
        } else {
          uint32_t k = (static_cast<uint32_t>(n.ref.word) << 8) | n.ref.bit;
          auto slot = nonce_slot.find(k);
          uint32_t s;
          if (slot == nonce_slot.end()) {
            s = static_cast<uint32_t>(tape.nonce_slots.size());
            tape.nonce_slots.push_back(n.ref);
            nonce_slot.emplace(k, s);
          } else {
            s = slot->second;
          }
          idx = emit({EvalTape::op_nonce, s, 0});
        }
        break;
      case ExprArena::Op::band:
      case ExprArena::Op::bor: {
        uint32_t l = self(self, n.lhs);
        uint32_t r = self(self, n.rhs);
        idx = emit({n.op == ExprArena::Op::band ? EvalTape::op_and : EvalTape::op_or, l, r});
        break;
      }
      case ExprArena::Op::bxor: {
        auto git = layout.group_of_xor_node.find(id);
        const std::vector<NodeId>* gops = nullptr;
        uint32_t acc = 0;
        bool have = false;
        if (git != layout.group_of_xor_node.end()) {
          gops = &layout.groups[git->second].operands;
          acc = emit_param(static_cast<int>(layout.unique_bits.size() + git->second));
          have = true;
        }
        for (NodeId op : n.xops) {
          if (gops && std::binary_search(gops->begin(), gops->end(), op)) continue;
          uint32_t v = self(self, op);
          if (!have) {
            acc = v;
            have = true;
          } else {
            acc = emit({EvalTape::op_xor, acc, v});
          }
        }
        idx = acc;
        break;
      }
    }
    memo.emplace(id, idx);
    return idx;
  };

  if (arena.is_literal(layout.root)) {
    if (layout.root == ExprArena::id_one) emit({EvalTape::op_one, 0, 0});
    else emit({EvalTape::op_zero, 0, 0});
  } else {
    compile(compile, layout.root);
  }
  return tape;
}

// Nonce leaves packed 64 nonces per lane word, block-major so one block's
// slots are contiguous.
struct NonceLanes {
  size_t n_nonces = 0;
  size_t n_slots = 0;
  size_t n_blocks = 0;
  std::vector<uint64_t> data;  // [block][slot]

  const uint64_t* block(size_t b) const { return data.data() + b * n_slots; }

  uint64_t block_mask(size_t b, size_t prefix) const {
    size_t lo = b * 64;
    if (prefix <= lo) return 0;
    size_t n = prefix - lo;
    return n >= 64 ? ~uint64_t{0} : ((uint64_t{1} << n) - 1);
  }
};

inline NonceLanes pack_nonce_lanes(const EvalTape& tape, std::span<const Nonce> nonces) {
  NonceLanes lanes;
  lanes.n_nonces = nonces.size();
  lanes.n_slots = tape.nonce_slots.size();
  lanes.n_blocks = (nonces.size() + 63) / 64;
  lanes.data.assign(lanes.n_blocks * std::max<size_t>(lanes.n_slots, 1), 0);
  for (size_t i = 0; i < nonces.size(); ++i) {
    size_t b = i / 64;
    uint64_t bit = uint64_t{1} << (i % 64);
    for (size_t s = 0; s < lanes.n_slots; ++s) {
      const BitRef& r = tape.nonce_slots[s];
      if (nonces[i].bit(r.word, r.bit)) lanes.data[b * lanes.n_slots + s] |= bit;
    }
  }
  return lanes;
}

// Everything the attack needs for one bit of the faulted window.
struct WindowBit {
  TraceTarget target;
  NodeId expr = 0;
  HypothesisLayout layout;
  EvalTape tape;
};

// Traces bits offset .. offset+width-1 of the target word; each bit keeps its
// own layout (parameter sets differ between bit positions).
inline std::vector<WindowBit> target_window(ExprArena& arena, const TraceTarget& base,
                                            unsigned width,
                                            SpBoxVariant v = SpBoxVariant::official) {
  validate_target(base);
  if (width < 1 || base.bit + static_cast<int>(width) > 32)
    throw std::invalid_argument("window must stay inside one 32-bit word");
  SymbolicPermutation sym(arena, v);
  const auto& state = sym.before_round(base.round);
  std::vector<WindowBit> out;
  out.reserve(width);
  for (unsigned i = 0; i < width; ++i) {
    WindowBit wb;
    wb.target = base;
    wb.target.bit = base.bit + static_cast<int>(i);
    wb.expr = state.word(base.row, base.col)[wb.target.bit];
    wb.layout = reduce_layout(arena, wb.expr);
    wb.tape = compile_tape(arena, wb.layout);
    out.push_back(std::move(wb));
  }
  return out;
}

}  // namespace gimli_sifa
