#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "graph.hpp"

namespace msolearn {

// Expression tree describing a labeled graph. Nodes live in one vector,
// children referenced by index; node 0 is the root after parsing/building.
struct CwExpr {
    enum class Kind { Base, Union, OrderedUnion, Eta, Rho, Delta };

    struct Node {
        Kind kind;
        std::string vertex;              // Base
        std::vector<std::string> labels; // Base: label set of the vertex
        std::string p, q;                // Eta/Rho: (P,Q); Delta: p only
        int left = -1, right = -1;       // children (right unused for unary)
    };

    std::vector<Node> nodes;
    int root = -1;

    size_t tree_size() const { return nodes.size(); }

    int add(Node n) {
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }

    static CwExpr base(const std::string& id, std::vector<std::string> labels) {
        CwExpr e;
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        e.root = e.add({Kind::Base, id, std::move(labels), "", "", -1, -1});
        return e;
    }

    // Structural combinators; the argument trees are appended and re-indexed.
    static CwExpr combine(Kind k, const CwExpr& a, const CwExpr& b) {
        CwExpr e = a;
        int shift = static_cast<int>(e.nodes.size());
        for (auto n : b.nodes) {
            if (n.left >= 0) n.left += shift;
            if (n.right >= 0) n.right += shift;
            e.nodes.push_back(std::move(n));
        }
        e.root = e.add({k, "", {}, "", "", a.root, b.root + shift});
        return e;
    }

    static CwExpr unite(const CwExpr& a, const CwExpr& b) { return combine(Kind::Union, a, b); }
    static CwExpr ordered_unite(const CwExpr& a, const CwExpr& b) {
        return combine(Kind::OrderedUnion, a, b);
    }

    static CwExpr unary(Kind k, const std::string& p, const std::string& q, const CwExpr& a) {
        CwExpr e = a;
        e.root = e.add({k, "", {}, p, q, a.root, -1});
        return e;
    }

    static CwExpr eta(const std::string& p, const std::string& q, const CwExpr& a) {
        return unary(Kind::Eta, p, q, a);
    }
    static CwExpr rho(const std::string& p, const std::string& q, const CwExpr& a) {
        return unary(Kind::Rho, p, q, a);
    }
    static CwExpr del(const std::string& p, const CwExpr& a) {
        return unary(Kind::Delta, p, "", a);
    }
};

namespace detail {

inline void print_cwx(const CwExpr& e, int at, std::ostream& os) {
    const auto& n = e.nodes[at];
    switch (n.kind) {
        case CwExpr::Kind::Base:
            os << "(v " << n.vertex;
            for (auto& l : n.labels) os << " " << l;
            os << ")";
            break;
        case CwExpr::Kind::Union:
            os << "(u ";
            print_cwx(e, n.left, os);
            os << " ";
            print_cwx(e, n.right, os);
            os << ")";
            break;
        case CwExpr::Kind::OrderedUnion:
            os << "(ou ";
            print_cwx(e, n.left, os);
            os << " ";
            print_cwx(e, n.right, os);
            os << ")";
            break;
        case CwExpr::Kind::Eta:
            os << "(eta " << n.p << " " << n.q << " ";
            print_cwx(e, n.left, os);
            os << ")";
            break;
        case CwExpr::Kind::Rho:
            os << "(rho " << n.p << " " << n.q << " ";
            print_cwx(e, n.left, os);
            os << ")";
            break;
        case CwExpr::Kind::Delta:
            os << "(del " << n.p << " ";
            print_cwx(e, n.left, os);
            os << ")";
            break;
    }
}

}  // namespace detail

inline std::string print_cwx(const CwExpr& e) {
    std::ostringstream os;
    detail::print_cwx(e, e.root, os);
    return os.str();
}

inline std::string cwx_digest(const CwExpr& e) { return hex64(fnv1a(print_cwx(e))); }

// S-expression reader: (v id lbl*), (u e e), (ou e e), (eta P Q e),
// (rho P Q e), (del P e). Whitespace-insensitive, `;` comments.
class CwxParser {
public:
    explicit CwxParser(const std::string& text) : text_(text) {}

    CwExpr parse() {
        CwExpr e;
        e.root = parse_expr(e);
        skip_ws();
        if (pos_ < text_.size()) fail("trailing input after expression");
        return e;
    }

private:
    int parse_expr(CwExpr& e) {
        skip_ws();
        expect('(');
        std::string head = token();
        int result;
        if (head == "v") {
            CwExpr::Node n{CwExpr::Kind::Base, token(), {}, "", "", -1, -1};
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != ')') {
                n.labels.push_back(token());
                skip_ws();
            }
            std::sort(n.labels.begin(), n.labels.end());
            n.labels.erase(std::unique(n.labels.begin(), n.labels.end()), n.labels.end());
            result = e.add(std::move(n));
        } else if (head == "u" || head == "ou") {
            int l = parse_expr(e);
            int r = parse_expr(e);
            result = e.add({head == "u" ? CwExpr::Kind::Union : CwExpr::Kind::OrderedUnion,
                            "", {}, "", "", l, r});
        } else if (head == "eta" || head == "rho") {
            std::string p = token(), q = token();
            int l = parse_expr(e);
            result = e.add({head == "eta" ? CwExpr::Kind::Eta : CwExpr::Kind::Rho,
                            "", {}, p, q, l, -1});
        } else if (head == "del") {
            std::string p = token();
            int l = parse_expr(e);
            result = e.add({CwExpr::Kind::Delta, "", {}, p, "", l, -1});
        } else {
            fail("unknown operator '" + head + "'");
            result = -1;
        }
        skip_ws();
        expect(')');
        return result;
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (c == '\n') { ++line_; col_ = 0; }
                ++pos_;
                ++col_;
            } else {
                break;
            }
        }
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
        ++col_;
    }

    std::string token() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';')
            ++pos_;
        if (pos_ == start) fail("expected token");
        col_ += static_cast<int>(pos_ - start);
        return text_.substr(start, pos_ - start);
    }

    [[noreturn]] void fail(const std::string& msg) { throw parse_error(msg, line_, col_); }

    std::string text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 0;
};

inline CwExpr parse_cwx(const std::string& text) { return CwxParser(text).parse(); }

// One well-formedness finding, addressed by a path of child steps from the root.
struct WfDiagnostic {
    std::string path;
    std::string message;
};

namespace detail {

struct WfState {
    std::set<std::string> base_ids;
    std::vector<WfDiagnostic> diags;
};

// Returns the current label set of the subtree (labels that may still occur).
inline std::set<std::string> wf_walk(const CwExpr& e, int at, const std::string& path,
                                     WfState& st) {
    const auto& n = e.nodes[at];
    auto diag = [&](const std::string& m) { st.diags.push_back({path, m}); };
    switch (n.kind) {
        case CwExpr::Kind::Base: {
            if (!st.base_ids.insert(n.vertex).second)
                diag("duplicate base vertex id '" + n.vertex + "'");
            return {n.labels.begin(), n.labels.end()};
        }
        case CwExpr::Kind::Eta:
        case CwExpr::Kind::Rho: {
            // relabeling keeps P in the vocabulary with an empty extension
            auto cur = wf_walk(e, n.left, path + ".0", st);
            const char* op = n.kind == CwExpr::Kind::Eta ? "eta" : "rho";
            if (n.p == n.q) diag(std::string(op) + " requires P != Q");
            if (!cur.count(n.p)) diag(std::string(op) + ": label '" + n.p + "' not in current label set");
            if (!cur.count(n.q)) diag(std::string(op) + ": label '" + n.q + "' not in current label set");
            return cur;
        }
        case CwExpr::Kind::Delta: {
            auto cur = wf_walk(e, n.left, path + ".0", st);
            if (!cur.count(n.p)) diag("del: label '" + n.p + "' not in current label set");
            cur.erase(n.p);
            return cur;
        }
        case CwExpr::Kind::Union:
        case CwExpr::Kind::OrderedUnion: {
            auto l = wf_walk(e, n.left, path + ".0", st);
            auto r = wf_walk(e, n.right, path + ".1", st);
            l.insert(r.begin(), r.end());
            if (n.kind == CwExpr::Kind::OrderedUnion) {
                if (l.count(kLeftMark) || l.count(kRightMark))
                    diag("ordered union: reserved labels already present in children");
                l.insert(kLeftMark);
                l.insert(kRightMark);
            }
            return l;
        }
    }
    return {};
}

}  // namespace detail

inline std::vector<WfDiagnostic> check_wellformed(const CwExpr& e) {
    detail::WfState st;
    detail::wf_walk(e, e.root, "root", st);
    for (auto& n : e.nodes)
        if (n.kind == CwExpr::Kind::Base)
            for (auto& l : n.labels)
                if (l == kLeftMark || l == kRightMark)
                    st.diags.push_back({"root", "reserved label '" + l + "' on base vertex"});
    return st.diags;
}

namespace detail {

struct EvalGraph {
    std::vector<std::string> ids;  // sorted
    std::vector<std::pair<std::string, std::string>> edges;
    std::map<std::string, std::set<std::string>> labels;
};

inline EvalGraph eval_walk(const CwExpr& e, int at, const std::string& path) {
    const auto& n = e.nodes[at];
    switch (n.kind) {
        case CwExpr::Kind::Base: {
            EvalGraph g;
            g.ids = {n.vertex};
            for (auto& l : n.labels) g.labels[l] = {n.vertex};
            return g;
        }
        case CwExpr::Kind::Eta: {
            auto g = eval_walk(e, n.left, path + ".0");
            if (n.p == n.q) throw error("eta requires P != Q (" + path + ")");
            for (auto& v : g.labels[n.p])
                for (auto& w : g.labels[n.q])
                    if (v != w) g.edges.emplace_back(std::min(v, w), std::max(v, w));
            return g;
        }
        case CwExpr::Kind::Rho: {
            auto g = eval_walk(e, n.left, path + ".0");
            if (n.p == n.q) throw error("rho requires P != Q (" + path + ")");
            auto moved = g.labels[n.p];
            g.labels[n.q].insert(moved.begin(), moved.end());
            g.labels[n.p].clear();
            return g;
        }
        case CwExpr::Kind::Delta: {
            auto g = eval_walk(e, n.left, path + ".0");
            g.labels.erase(n.p);
            return g;
        }
        case CwExpr::Kind::Union:
        case CwExpr::Kind::OrderedUnion: {
            auto a = eval_walk(e, n.left, path + ".0");
            auto b = eval_walk(e, n.right, path + ".1");
            EvalGraph g;
            g.ids = a.ids;
            for (auto& v : b.ids) {
                if (std::binary_search(a.ids.begin(), a.ids.end(), v))
                    throw error("duplicate base vertex id '" + v + "' (" + path + ")");
                g.ids.push_back(v);
            }
            std::sort(g.ids.begin(), g.ids.end());
            g.edges = a.edges;
            g.edges.insert(g.edges.end(), b.edges.begin(), b.edges.end());
            g.labels = a.labels;
            for (auto& [name, verts] : b.labels) g.labels[name].insert(verts.begin(), verts.end());
            if (n.kind == CwExpr::Kind::OrderedUnion) {
                if (g.labels.count(kLeftMark) || g.labels.count(kRightMark))
                    throw error("ordered union: reserved labels already present (" + path + ")");
                g.labels[kLeftMark] = {a.ids.begin(), a.ids.end()};
                g.labels[kRightMark] = {b.ids.begin(), b.ids.end()};
            }
            return g;
        }
    }
    throw error("corrupt expression node");
}

}  // namespace detail

inline LabeledGraph eval_cexpr(const CwExpr& e) {
    auto g = detail::eval_walk(e, e.root, "root");
    // keep empty relations that are still in the vocabulary
    std::map<std::string, std::set<std::string>> labels(g.labels.begin(), g.labels.end());
    return LabeledGraph::from_parts(g.ids, g.edges, labels);
}

// Label names of the graph the expression evaluates to (its current vocabulary).
inline std::vector<std::string> current_labels(const CwExpr& e) {
    detail::WfState st;
    auto cur = detail::wf_walk(e, e.root, "root", st);
    if (!st.diags.empty())
        throw error("expression not well-formed: " + st.diags.front().message +
                    " (" + st.diags.front().path + ")");
    return {cur.begin(), cur.end()};
}

inline std::vector<std::string> base_vertices(const CwExpr& e) {
    std::vector<std::string> out;
    for (auto& n : e.nodes)
        if (n.kind == CwExpr::Kind::Base) out.push_back(n.vertex);
    std::sort(out.begin(), out.end());
    return out;
}

// Adds a fresh label L to the base node of v; everything else is untouched,
// so the evaluated graph changes only by L(G) = {v}.
inline CwExpr mark_vertex(const CwExpr& e, const std::string& v, const std::string& label) {
    auto cur = current_labels(e);
    CwExpr out = e;
    bool found = false;
    for (auto& n : out.nodes) {
        if (n.kind == CwExpr::Kind::Base) {
            for (auto& l : n.labels)
                if (l == label) throw error("mark_vertex: label '" + label + "' already used");
            if (n.vertex == v) {
                n.labels.push_back(label);
                std::sort(n.labels.begin(), n.labels.end());
                found = true;
            }
        } else if (n.p == label || n.q == label) {
            throw error("mark_vertex: label '" + label + "' already used by an operator");
        }
    }
    if (!found) throw error("mark_vertex: vertex '" + v + "' not in expression");
    return out;
}

// Paper-style n-expression: one helper label per vertex, edges added one by
// one, helpers deleted afterwards. Exact round trip, exponential in label
// count for the type DP; callers surface that caveat.
inline CwExpr trivial_expression(const LabeledGraph& g) {
    if (g.size() == 0) throw error("trivial_expression: empty graph");
    std::set<std::string> taken;
    for (auto& l : g.label_names()) taken.insert(l);
    std::vector<std::string> helper(g.size());
    size_t next = 0;
    for (size_t i = 0; i < g.size(); ++i) {
        std::string h;
        do {
            h = "t" + std::to_string(next++);
        } while (taken.count(h));
        helper[i] = h;
    }
    auto base_of = [&](size_t i) {
        std::vector<std::string> labels = {helper[i]};
        for (auto& name : g.label_names())
            if (g.has_label(name, i)) labels.push_back(name);
        return CwExpr::base(g.id(i), labels);
    };
    CwExpr acc = base_of(0);
    for (size_t i = 1; i < g.size(); ++i) acc = CwExpr::unite(acc, base_of(i));
    for (size_t i = 0; i < g.size(); ++i)
        for (size_t j = i + 1; j < g.size(); ++j)
            if (g.adjacent(i, j)) acc = CwExpr::eta(helper[i], helper[j], acc);
    for (size_t i = 0; i < g.size(); ++i) acc = CwExpr::del(helper[i], acc);
    return acc;
}

// Marks the positive examples of a 1-dimensional training sequence with pos_label
// and the negative ones with neg_label; both labels must be fresh.
inline CwExpr encode_training_labels(const CwExpr& e,
                                     const std::vector<std::pair<std::string, bool>>& examples,
                                     const std::string& pos_label, const std::string& neg_label) {
    if (pos_label == neg_label) throw error("example labels must differ");
    std::set<std::string> pos, neg;
    auto bases = base_vertices(e);
    for (auto& [v, positive] : examples) {
        if (!std::binary_search(bases.begin(), bases.end(), v))
            throw error("example vertex '" + v + "' not in expression");
        (positive ? pos : neg).insert(v);
    }
    CwExpr out = e;
    for (auto& n : out.nodes) {
        for (auto& l : n.labels)
            if (l == pos_label || l == neg_label)
                throw error("example label '" + l + "' already used in the expression");
        if (n.p == pos_label || n.p == neg_label || n.q == pos_label || n.q == neg_label)
            throw error("example label already used by an operator");
    }
    for (auto& n : out.nodes) {
        if (n.kind != CwExpr::Kind::Base) continue;
        if (pos.count(n.vertex)) n.labels.push_back(pos_label);
        if (neg.count(n.vertex)) n.labels.push_back(neg_label);
        std::sort(n.labels.begin(), n.labels.end());
    }
    return out;
}

// ---- bounded-clique-width families ----------------------------------------

namespace detail {

inline std::string gen_id(size_t i, size_t n) {
    size_t width = std::to_string(n).size();
    std::string s = std::to_string(i + 1);
    return "v" + std::string(width - s.size(), '0') + s;
}

// Flavored cograph builder: result has every vertex labeled `flavor`.
inline CwExpr gen_cograph_rec(size_t lo, size_t hi, size_t n, const std::string& flavor,
                              std::mt19937_64& rng) {
    if (hi - lo == 1) return CwExpr::base(gen_id(lo, n), {flavor});
    size_t mid = lo + 1 + rng() % (hi - lo - 1);
    bool join = rng() % 2 == 0;
    if (!join) {
        auto l = gen_cograph_rec(lo, mid, n, flavor, rng);
        auto r = gen_cograph_rec(mid, hi, n, flavor, rng);
        return CwExpr::unite(l, r);
    }
    std::string other = flavor == "A" ? "B" : "A";
    auto l = gen_cograph_rec(lo, mid, n, flavor, rng);
    auto r = gen_cograph_rec(mid, hi, n, other, rng);
    auto joined = CwExpr::eta(flavor, other, CwExpr::unite(l, r));
    return CwExpr::rho(other, flavor, joined);
}

}  // namespace detail

// Random cograph on n vertices using exactly labels {A,B}; deterministic per seed.
inline CwExpr gen_cograph(size_t n, uint64_t seed) {
    if (n < 1) throw error("gen_cograph: n >= 1 required");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto e = detail::gen_cograph_rec(0, n, n, "A", rng);
    return CwExpr::del("A", e);
}

namespace detail {

// Root keeps its depth-parity label, everything below is label-free.
inline CwExpr gen_tree_rec(const std::vector<std::vector<size_t>>& children, size_t at,
                           size_t n, int depth) {
    std::string mine = depth % 2 == 0 ? "A" : "B";
    std::string childs = depth % 2 == 0 ? "B" : "A";
    CwExpr acc = CwExpr::base(gen_id(at, n), {mine});
    if (children[at].empty()) return acc;
    for (size_t c : children[at]) {
        auto sub = gen_tree_rec(children, c, n, depth + 1);
        acc = CwExpr::eta(mine, childs, CwExpr::unite(acc, sub));
    }
    return CwExpr::del(childs, acc);
}

}  // namespace detail

// Random tree on n vertices (random attachment), rooted at the first vertex.
// Uses labels {A,B}; within the spec's budget of three.
inline CwExpr gen_tree(size_t n, uint64_t seed) {
    if (n < 1) throw error("gen_tree: n >= 1 required");
    std::mt19937_64 rng(seed ^ 0x853c49e6748fea9bULL);
    std::vector<std::vector<size_t>> children(n);
    for (size_t i = 1; i < n; ++i) children[rng() % i].push_back(i);
    auto e = detail::gen_tree_rec(children, 0, n, 0);
    return CwExpr::del("A", e);
}

}  // namespace msolearn
