#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/orbits.hpp"

#include <nlohmann/json.hpp>

namespace orbitree {

// A tree node is identified by its level and the orbit's least member.
struct NodeId {
  int level = 0;
  StateWord rep;

  friend bool operator==(const NodeId& a, const NodeId& b) {
    return a.level == b.level && a.rep == b.rep;
  }
  friend bool operator<(const NodeId& a, const NodeId& b) {
    if (a.level != b.level) return a.level < b.level;
    return a.rep < b.rep;
  }
};

struct NodeIdHash {
  std::size_t operator()(const NodeId& n) const noexcept {
    return WordHash{}(n.rep) * 31 + static_cast<std::size_t>(n.level);
  }
};

// `level` is the level of the parent (initial) vertex.
struct TreeEdge {
  NodeId parent;
  NodeId child;
  int label = 0;
  int level = 0;

  friend bool operator==(const TreeEdge& a, const TreeEdge& b) {
    return a.parent == b.parent && a.child == b.child && a.label == b.label;
  }
};

struct ReductionEdge {
  enum class Kind { Edge, AllSplit, NotApplicable };
  Kind kind = Kind::NotApplicable;
  std::optional<TreeEdge> edge;  // present iff kind == Edge
  int degree = -1;               // connection degree when computed
  std::string reason;            // set when NotApplicable
};

struct HeavyBranch {
  bool present = false;
  std::vector<int> labels;       // labels of the explored label-1-free path
  std::vector<NodeId> nodes;     // path nodes including the root
};

// Per-branch label structure of the explored tree.
struct BlockProfile {
  int depth = 0;
  std::vector<std::vector<int>> branch_labels;  // root-to-leaf sequences
  std::array<int, 4> max_block{};               // max_block[j], j in 1..3
  std::vector<int> heavy_prefix;                // maximal prefix 3^a 2^b
};

// Lazily expanded orbit tree of the dual action.  Nodes hold their members
// so liftability checks and child expansion stay cheap; the member budget
// bounds the total retained size.
class OrbitTree {
 public:
  explicit OrbitTree(MealyAutomaton a, Budgets budgets = Budgets{})
      : a_(std::move(a)), budgets_(budgets) {
    Component root;
    root.level = 0;
    root.size = 1;
    root.rep = {};
    root.members = std::vector<StateWord>{{}};
    nodes_.emplace(NodeId{0, {}}, std::move(root));
  }

  const MealyAutomaton& automaton() const { return a_; }
  const Budgets& budgets() const { return budgets_; }
  NodeId root() const { return NodeId{0, {}}; }

  bool contains(const NodeId& id) const { return nodes_.count(id) > 0; }

  const Component& node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end())
      throw std::out_of_range("node not expanded: level " +
                              std::to_string(id.level));
    return it->second;
  }

  // Children of `id` with labels; computed once, then served from cache.
  const std::vector<TreeEdge>& expand(const NodeId& id) {
    auto cached = edges_.find(id);
    if (cached != edges_.end()) return cached->second;
    const Component& parent = node(id);
    auto kids = child_components(a_, parent, budgets_, true);
    std::vector<TreeEdge> out;
    out.reserve(kids.size());
    for (auto& [child, label] : kids) {
      NodeId cid{child.level, child.rep};
      out.push_back(TreeEdge{id, cid, label, id.level});
      nodes_.emplace(cid, std::move(child));
    }
    return edges_.emplace(id, std::move(out)).first->second;
  }

  void expand_to_depth(int depth) {
    std::vector<NodeId> frontier{root()};
    for (int level = 0; level < depth; ++level) {
      std::vector<NodeId> next;
      for (const NodeId& id : frontier)
        for (const TreeEdge& e : expand(id)) next.push_back(e.child);
      frontier = std::move(next);
    }
  }

  // Label sequence of the root path of u: entry k is the label of the edge
  // entered by the length-(k+1) prefix.
  std::vector<int> path_of_word(const StateWord& u) {
    std::vector<int> labels;
    NodeId cur = root();
    for (std::size_t k = 0; k < u.size(); ++k) {
      StateWord prefix(u.begin(), u.begin() + static_cast<long>(k) + 1);
      const TreeEdge* hit = nullptr;
      for (const TreeEdge& e : expand(cur)) {
        const Component& child = node(e.child);
        if (child.members &&
            std::binary_search(child.members->begin(), child.members->end(),
                               prefix)) {
          hit = &e;
          break;
        }
      }
      if (!hit) throw InconsistencyError("prefix not covered by any child");
      labels.push_back(hit->label);
      cur = hit->child;
    }
    return labels;
  }

  // True iff every member of bottom(e) has its length-(level(f)+1) suffix in
  // bottom(f).  Falls back to the label contrapositive when members are
  // unavailable; never reports an unverified true.
  bool is_liftable(const TreeEdge& e, const TreeEdge& f) {
    if (e.level < f.level) return false;
    const Component& be = node(e.child);
    const Component& bf = node(f.child);
    if (!be.members || !bf.members) {
      // Lifts never raise labels, so a larger label already refutes one.
      if (e.label > f.label) return false;
      throw BudgetExceededError("liftability needs materialized members",
                                be.size + bf.size);
    }
    const std::size_t cut = be.rep.size() - bf.rep.size();
    for (const StateWord& w : *be.members) {
      StateWord suffix(w.begin() + static_cast<long>(cut), w.end());
      if (!std::binary_search(bf.members->begin(), bf.members->end(), suffix))
        return false;
    }
    return true;
  }

  // Componentwise suffix image of a path: edge by edge, the orbit of the
  // length-(target+i) suffixes.  The input must be a chain of consecutive
  // edges; the result starts at `target` level.
  std::vector<TreeEdge> lift_path(const std::vector<TreeEdge>& path,
                                  int target) {
    if (path.empty()) return {};
    const int k = path.front().level;
    if (target > k) throw std::invalid_argument("target level above the path");
    if (target == k) return path;
    std::vector<TreeEdge> out;
    NodeId prev = suffix_node(path.front().parent, target);
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i > 0 && !(path[i].parent == path[i - 1].child))
        throw std::invalid_argument("path edges are not consecutive");
      NodeId next = suffix_node(path[i].child, target + static_cast<int>(i) + 1);
      const TreeEdge* found = nullptr;
      for (const TreeEdge& e : expand(prev))
        if (e.child == next) {
          found = &e;
          break;
        }
      if (!found)
        throw InconsistencyError("suffix image is not a child of its parent");
      out.push_back(*found);
      prev = next;
    }
    return out;
  }

  // The last edge of the fully connected prefix when the split below the
  // connection-degree vertex is {1,2}.
  ReductionEdge reduction_edge() {
    ReductionEdge r;
    if (a_.num_states() != 3) {
      r.reason = "stateset size is not 3";
      return r;
    }
    if (!is_invertible(a_) || !is_reversible(a_)) {
      r.reason = "automaton is not invertible-reversible";
      return r;
    }
    ConnectionDegree cd = connection_degree(a_, budgets_);
    if (!cd.exact)
      throw BudgetExceededError(
          "connection degree unresolved at level " + std::to_string(cd.value),
          static_cast<std::uint64_t>(cd.value));
    r.degree = cd.value;
    if (cd.value == 0) {
      r.reason = "automaton is disconnected";
      return r;
    }
    NodeId vertex = root();
    for (int level = 0; level < cd.value; ++level) {
      const auto& edges = expand(vertex);
      if (edges.size() != 1)
        throw InconsistencyError("connected level is split");
      vertex = edges[0].child;
    }
    const auto& split = expand(vertex);
    for (const TreeEdge& e : split)
      if (e.label == 2) {
        r.kind = ReductionEdge::Kind::Edge;
        r.edge = e;
        return r;
      }
    if (split.size() == 3) {
      r.kind = ReductionEdge::Kind::AllSplit;
      return r;
    }
    throw InconsistencyError("split below the degree vertex is neither {1,2} nor {1,1,1}");
  }

  // Greedy walk along the unique child with label != 1; at most one such
  // child exists per node because labels sum to |Q| <= 3 here.
  HeavyBranch find_heavy_branch(int depth) {
    HeavyBranch hb;
    hb.nodes.push_back(root());
    NodeId cur = root();
    for (int level = 0; level < depth; ++level) {
      const TreeEdge* next = nullptr;
      for (const TreeEdge& e : expand(cur))
        if (e.label != 1) {
          next = &e;
          break;
        }
      if (!next) return hb;  // absent: the label-1-free path dies here
      hb.labels.push_back(next->label);
      hb.nodes.push_back(next->child);
      cur = next->child;
    }
    hb.present = true;
    return hb;
  }

  BlockProfile block_profile(int depth) {
    BlockProfile p;
    p.depth = depth;
    std::vector<int> labels;
    collect_branches(root(), depth, labels, p);
    for (const auto& branch : p.branch_labels) {
      for (int j = 1; j <= 3; ++j) {
        int run = 0;
        for (int l : branch) {
          run = (l == j) ? run + 1 : 0;
          p.max_block[j] = std::max(p.max_block[j], run);
        }
      }
    }
    // Heavy prefix: the full-label run from the root, then the 2-run.
    NodeId cur = root();
    const int full = a_.num_states();
    bool in_full_run = true;
    for (int level = 0; level < depth; ++level) {
      const TreeEdge* next = nullptr;
      for (const TreeEdge& e : expand(cur)) {
        if (in_full_run && e.label == full) {
          next = &e;
          break;
        }
        if (e.label == 2) next = &e;
      }
      if (!next) break;
      if (next->label != full) in_full_run = false;
      p.heavy_prefix.push_back(next->label);
      cur = next->child;
    }
    return p;
  }

  nlohmann::json to_json(int depth) {
    expand_to_depth(depth);
    nlohmann::json nodes = nlohmann::json::array();
    nlohmann::json edges = nlohmann::json::array();
    std::map<NodeId, bool> ordered;
    for (const auto& [id, comp] : nodes_)
      if (id.level <= depth) ordered[id] = true;
    for (const auto& [id, unused] : ordered) {
      const Component& c = node(id);
      nodes.push_back({{"level", id.level},
                       {"rep", rep_name(id)},
                       {"size", c.size}});
    }
    for (const auto& [id, unused] : ordered) {
      if (id.level >= depth) continue;
      for (const TreeEdge& e : expand(id))
        edges.push_back({{"parent", rep_name(e.parent)},
                         {"child", rep_name(e.child)},
                         {"label", e.label}});
    }
    HeavyBranch hb = find_heavy_branch(depth);
    nlohmann::json heavy = nlohmann::json::array();
    if (hb.present)
      for (int l : hb.labels) heavy.push_back(l);
    return nlohmann::json{{"automaton", a_.name()},
                          {"nodes", nodes},
                          {"edges", edges},
                          {"heavy_branch", heavy}};
  }

  std::string to_dot(int depth) {
    expand_to_depth(depth);
    HeavyBranch hb = find_heavy_branch(depth);
    std::map<NodeId, bool> on_branch;
    if (hb.present)
      for (const NodeId& id : hb.nodes) on_branch[id] = true;
    std::string out = "digraph orbit_tree {\n  rankdir=TB;\n";
    std::map<NodeId, bool> ordered;
    for (const auto& [id, comp] : nodes_)
      if (id.level <= depth) ordered[id] = true;
    for (const auto& [id, unused] : ordered) {
      const Component& c = node(id);
      out += "  \"" + dot_id(id) + "\" [label=\"" + rep_name(id) + " (" +
             std::to_string(c.size) + ")\"];\n";
    }
    for (const auto& [id, unused] : ordered) {
      if (id.level >= depth) continue;
      for (const TreeEdge& e : expand(id)) {
        bool bold = on_branch.count(e.parent) && on_branch.count(e.child) &&
                    e.label != 1;
        out += "  \"" + dot_id(e.parent) + "\" -> \"" + dot_id(e.child) +
               "\" [label=\"" + std::to_string(e.label) + "\"" +
               (bold ? ", style=bold" : "") + "];\n";
      }
    }
    out += "}\n";
    return out;
  }

 private:
  // The orbit of the length-`len` suffixes of a node's members; a single
  // orbit for the reversible inputs this tree targets.
  NodeId suffix_node(const NodeId& id, int len) {
    if (len == id.level) return id;
    const Component& c = node(id);
    if (!c.members)
      throw BudgetExceededError("suffix image needs materialized members",
                                c.size);
    StateWord first(c.members->front().end() - len, c.members->front().end());
    Component image = component_of(a_, first, budgets_, true);
    for (const StateWord& w : *c.members) {
      StateWord suffix(w.end() - len, w.end());
      if (!std::binary_search(image.members->begin(), image.members->end(),
                              suffix))
        throw InconsistencyError("suffixes of one orbit span several orbits");
    }
    NodeId out{len, image.rep};
    nodes_.emplace(out, std::move(image));
    return out;
  }

  void collect_branches(const NodeId& id, int remaining,
                        std::vector<int>& labels, BlockProfile& p) {
    if (remaining == 0) {
      p.branch_labels.push_back(labels);
      return;
    }
    for (const TreeEdge& e : expand(id)) {
      labels.push_back(e.label);
      collect_branches(e.child, remaining - 1, labels, p);
      labels.pop_back();
    }
  }

  std::string rep_name(const NodeId& id) const {
    if (id.rep.empty()) return "eps";
    return a_.state_word_name(id.rep);
  }
  std::string dot_id(const NodeId& id) const {
    return "n" + std::to_string(id.level) + "_" + rep_name(id);
  }

  MealyAutomaton a_;
  Budgets budgets_;
  std::unordered_map<NodeId, Component, NodeIdHash> nodes_;
  std::unordered_map<NodeId, std::vector<TreeEdge>, NodeIdHash> edges_;
};

}  // namespace orbitree
