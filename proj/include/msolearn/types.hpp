#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "formula.hpp"
#include "graph.hpp"

namespace msolearn {

using TypeId = uint32_t;
using LabelSigId = uint32_t;
inline constexpr TypeId kNoType = 0xffffffffu;

// Canonical recursive representation of a rank-bounded MSO type of an
// assignment: the atomic diagram over the slots plus, for rank > 0, the set
// of types realized by extending the assignment with one vertex and (when a
// set budget remains) with one vertex set. Structurally equal types are
// interned to a single id, so id equality is type equality.
struct TypeNode {
    uint32_t rank = 0;
    uint32_t num_ind = 0;
    uint32_t num_set = 0;
    LabelSigId labels = 0;
    std::vector<uint64_t> atomic;     // packed; layout per AtomicLayout
    std::vector<TypeId> vertex_ext;   // sorted, deduplicated; empty iff rank == 0 or graph empty
    std::vector<TypeId> set_ext;      // sorted, deduplicated; empty iff rank == 0 or budget spent

    bool operator==(const TypeNode& o) const {
        return rank == o.rank && num_ind == o.num_ind && num_set == o.num_set &&
               labels == o.labels && atomic == o.atomic && vertex_ext == o.vertex_ext &&
               set_ext == o.set_ext;
    }
};

// Bit layout of the atomic diagram for k individual slots, s set slots and
// L labels: eq(i<j), edge(i<j), label(l,i), member(i,j).
struct AtomicLayout {
    uint32_t k, s, L;
    AtomicLayout(uint32_t k, uint32_t s, uint32_t L) : k(k), s(s), L(L) {}

    uint32_t pairs() const { return k * (k - 1) / 2; }
    uint32_t bits() const { return 2 * pairs() + L * k + s * k; }
    uint32_t words() const { return (bits() + 63) / 64; }

    uint32_t pair_index(uint32_t i, uint32_t j) const {  // requires i < j
        return i * k - i * (i + 1) / 2 + (j - i - 1);
    }
    uint32_t eq_bit(uint32_t i, uint32_t j) const { return pair_index(i, j); }
    uint32_t edge_bit(uint32_t i, uint32_t j) const { return pairs() + pair_index(i, j); }
    uint32_t label_bit(uint32_t l, uint32_t i) const { return 2 * pairs() + l * k + i; }
    uint32_t member_bit(uint32_t i, uint32_t j) const { return 2 * pairs() + L * k + j * k + i; }

    static bool get(const std::vector<uint64_t>& w, uint32_t bit) {
        return (w[bit >> 6] >> (bit & 63)) & 1;
    }
    static void set(std::vector<uint64_t>& w, uint32_t bit, bool v) {
        if (v) w[bit >> 6] |= uint64_t(1) << (bit & 63);
        else w[bit >> 6] &= ~(uint64_t(1) << (bit & 63));
    }
};

namespace detail {

struct TypeNodeHash {
    size_t operator()(const TypeNode& n) const {
        uint64_t h = fnv1a(&n.rank, sizeof n.rank);
        h = hash_mix(h, n.num_ind);
        h = hash_mix(h, n.num_set);
        h = hash_mix(h, n.labels);
        for (auto w : n.atomic) h = hash_mix(h, w);
        for (auto c : n.vertex_ext) h = hash_mix(h, c);
        h = hash_mix(h, 0x5e);
        for (auto c : n.set_ext) h = hash_mix(h, c);
        return static_cast<size_t>(h);
    }
};

struct VecHash {
    size_t operator()(const std::vector<uint64_t>& v) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (auto x : v) h = hash_mix(h, x);
        return static_cast<size_t>(h);
    }
};

}  // namespace detail

// Interner plus the type transforms. One engine instance is shared by a run;
// interned types are immutable once created.
class TypeEngine {
public:
    TypeEngine() = default;

    // ---- label signatures ----
    LabelSigId intern_labels(std::vector<std::string> names) {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        auto it = sig_index_.find(names);
        if (it != sig_index_.end()) return it->second;
        sigs_.push_back(names);
        LabelSigId id = static_cast<LabelSigId>(sigs_.size() - 1);
        sig_index_.emplace(std::move(names), id);
        return id;
    }

    const std::vector<std::string>& labels_of(LabelSigId id) const { return sigs_[id]; }

    std::optional<uint32_t> label_index(LabelSigId sig, const std::string& name) const {
        const auto& v = sigs_[sig];
        auto it = std::lower_bound(v.begin(), v.end(), name);
        if (it == v.end() || *it != name) return std::nullopt;
        return static_cast<uint32_t>(it - v.begin());
    }

    // ---- interning ----
    TypeId intern(TypeNode n) {
        if (n.rank == 0 && (!n.vertex_ext.empty() || !n.set_ext.empty()))
            throw error("rank-0 type with extension sets");
        auto it = node_index_.find(n);
        if (it != node_index_.end()) return it->second;
        nodes_.push_back(n);
        TypeId id = static_cast<TypeId>(nodes_.size() - 1);
        node_index_.emplace(std::move(n), id);
        return id;
    }

    const TypeNode& node(TypeId id) const { return nodes_[id]; }
    size_t interned_count() const { return nodes_.size(); }

    AtomicLayout layout(const TypeNode& n) const {
        return AtomicLayout(n.num_ind, n.num_set, static_cast<uint32_t>(sigs_[n.labels].size()));
    }

    // Content digest, independent of interning order (children hashed by
    // digest, sorted). Collisions are a non-issue at desk scale; equality
    // decisions always go through interned ids.
    uint64_t digest(TypeId id) {
        auto it = digest_memo_.find(id);
        if (it != digest_memo_.end()) return it->second;
        const TypeNode& n = nodes_[id];
        uint64_t h = fnv1a(&n.rank, sizeof n.rank);
        h = hash_mix(h, n.num_ind);
        h = hash_mix(h, n.num_set);
        for (auto& name : sigs_[n.labels]) h = fnv1a(name, h);
        for (auto w : n.atomic) h = hash_mix(h, w);
        for (auto* ext : {&n.vertex_ext, &n.set_ext}) {
            std::vector<uint64_t> ds;
            for (auto c : *ext) ds.push_back(digest(c));
            std::sort(ds.begin(), ds.end());
            h = hash_mix(h, 0x7a);
            for (auto d : ds) h = hash_mix(h, d);
        }
        digest_memo_.emplace(id, h);
        return h;
    }

    // Available set-quantifier depth recorded in the structure.
    uint32_t set_budget_of(TypeId id) const {
        const TypeNode& n = nodes_[id];
        if (n.rank == 0 || n.set_ext.empty()) return 0;
        return 1 + set_budget_of(n.set_ext.front());
    }

    // ---- brute-force type computation (the types-side oracle) ----

    struct ComputeCtx {
        const LabeledGraph* g;
        LabelSigId sig;
        std::unordered_map<std::vector<uint64_t>, TypeId, detail::VecHash> memo;
    };

    ComputeCtx make_ctx(const LabeledGraph& g) {
        ComputeCtx ctx;
        ctx.g = &g;
        ctx.sig = intern_labels(g.label_names());
        return ctx;
    }

    TypeId compute_type(ComputeCtx& ctx, const std::vector<uint32_t>& ind,
                        const std::vector<uint32_t>& sets, int q, int set_budget) {
        const LabeledGraph& g = *ctx.g;
        size_t n = g.size();
        if (set_budget > 0 && n > 24)
            throw error("compute_type: set budget requires a graph with at most 24 vertices");
        std::vector<uint64_t> key;
        key.reserve(ind.size() + sets.size() + 2);
        key.push_back((uint64_t(q) << 32) | uint64_t(set_budget));
        key.push_back((uint64_t(ind.size()) << 32) | uint64_t(sets.size()));
        for (auto v : ind) key.push_back(v);
        for (auto m : sets) key.push_back(m);
        auto it = ctx.memo.find(key);
        if (it != ctx.memo.end()) return it->second;

        TypeNode node;
        node.rank = static_cast<uint32_t>(q);
        node.num_ind = static_cast<uint32_t>(ind.size());
        node.num_set = static_cast<uint32_t>(sets.size());
        node.labels = ctx.sig;
        AtomicLayout lay(node.num_ind, node.num_set,
                         static_cast<uint32_t>(sigs_[ctx.sig].size()));
        node.atomic.assign(lay.words(), 0);
        const auto& names = sigs_[ctx.sig];
        for (uint32_t i = 0; i < node.num_ind; ++i) {
            for (uint32_t j = i + 1; j < node.num_ind; ++j) {
                AtomicLayout::set(node.atomic, lay.eq_bit(i, j), ind[i] == ind[j]);
                AtomicLayout::set(node.atomic, lay.edge_bit(i, j), g.adjacent(ind[i], ind[j]));
            }
            for (uint32_t l = 0; l < names.size(); ++l)
                AtomicLayout::set(node.atomic, lay.label_bit(l, i), g.has_label(names[l], ind[i]));
            for (uint32_t j = 0; j < node.num_set; ++j)
                AtomicLayout::set(node.atomic, lay.member_bit(i, j), (sets[j] >> ind[i]) & 1);
        }

        if (q > 0) {
            std::vector<uint32_t> ind2 = ind;
            ind2.push_back(0);
            for (uint32_t u = 0; u < n; ++u) {
                ind2.back() = u;
                node.vertex_ext.push_back(compute_type(ctx, ind2, sets, q - 1, set_budget));
            }
            std::sort(node.vertex_ext.begin(), node.vertex_ext.end());
            node.vertex_ext.erase(std::unique(node.vertex_ext.begin(), node.vertex_ext.end()),
                                  node.vertex_ext.end());
            if (set_budget > 0) {
                std::vector<uint32_t> sets2 = sets;
                sets2.push_back(0);
                for (uint32_t mask = 0; mask < (uint32_t(1) << n); ++mask) {
                    sets2.back() = mask;
                    node.set_ext.push_back(compute_type(ctx, ind, sets2, q - 1, set_budget - 1));
                }
                std::sort(node.set_ext.begin(), node.set_ext.end());
                node.set_ext.erase(std::unique(node.set_ext.begin(), node.set_ext.end()),
                                   node.set_ext.end());
            }
        }
        TypeId id = intern(std::move(node));
        ctx.memo.emplace(std::move(key), id);
        return id;
    }

    TypeId compute_type(const LabeledGraph& g, const std::vector<uint32_t>& ind, int q,
                        int set_budget) {
        auto ctx = make_ctx(g);
        return compute_type(ctx, ind, {}, q, set_budget);
    }

    // ---- satisfaction inside a type ----

    struct Slot {
        bool is_set;
        uint32_t index;
    };
    using SlotMap = std::map<std::string, Slot>;

    bool type_satisfies(TypeId id, const Formula& phi, const SlotMap& slots) {
        const TypeNode& n = nodes_[id];
        if (quantifier_rank(phi) > static_cast<int>(n.rank))
            throw error("type_satisfies: quantifier rank exceeds type rank");
        if (set_quantifier_nesting(phi) > static_cast<int>(set_budget_of(id)))
            throw error("type_satisfies: set-quantifier nesting exceeds the type's set budget");
        auto fv = free_vars(phi);
        for (auto& v : fv.individuals) {
            auto it = slots.find(v);
            if (it == slots.end() || it->second.is_set || it->second.index >= n.num_ind)
                throw error("type_satisfies: unmapped free variable '" + v + "'");
        }
        for (auto& v : fv.sets) {
            auto it = slots.find(v);
            if (it == slots.end() || !it->second.is_set || it->second.index >= n.num_set)
                throw error("type_satisfies: unmapped free set variable '" + v + "'");
        }
        return sat_rec(id, phi, slots);
    }

    // ---- transforms --------------------------------------------------------

    // Forward image under edge addition between labels P and Q.
    TypeId apply_eta(TypeId id, const std::string& p, const std::string& q) {
        return apply_unary(id, 'e', p, q);
    }
    // Forward image under relabeling P -> Q.
    TypeId apply_rho(TypeId id, const std::string& p, const std::string& q) {
        return apply_unary(id, 'r', p, q);
    }
    // Forward image under deletion of label P.
    TypeId apply_delta(TypeId id, const std::string& p) { return apply_unary(id, 'd', p, ""); }

    // Rank restriction: the lower-rank type of the same assignment.
    TypeId restrict_rank(TypeId id, uint32_t to_rank) {
        const TypeNode n = nodes_[id];  // by value: interning below may reallocate
        if (to_rank == n.rank) return id;
        if (to_rank > n.rank) throw error("restrict_rank: cannot raise rank");
        MemoKey key{id, kNoType, 't', to_rank, 0};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        TypeNode out;
        out.rank = to_rank;
        out.num_ind = n.num_ind;
        out.num_set = n.num_set;
        out.labels = n.labels;
        out.atomic = n.atomic;
        if (to_rank > 0) {
            for (auto c : n.vertex_ext) out.vertex_ext.push_back(restrict_rank(c, to_rank - 1));
            for (auto c : n.set_ext) out.set_ext.push_back(restrict_rank(c, to_rank - 1));
            dedupe(out);
        }
        TypeId res = intern(std::move(out));
        memo_.emplace(key, res);
        return res;
    }

    // Widens the label signature; new labels are false everywhere.
    TypeId extend_labels(TypeId id, LabelSigId target) {
        const TypeNode n = nodes_[id];  // by value: interning below may reallocate
        if (n.labels == target) return id;
        MemoKey key{id, kNoType, 'x', target, 0};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const auto& from = sigs_[n.labels];
        const auto& to = sigs_[target];
        for (auto& name : from)
            if (!std::binary_search(to.begin(), to.end(), name))
                throw error("extend_labels: target signature must be a superset");
        TypeNode out;
        out.rank = n.rank;
        out.num_ind = n.num_ind;
        out.num_set = n.num_set;
        out.labels = target;
        AtomicLayout lin = layout(n);
        AtomicLayout lout(n.num_ind, n.num_set, static_cast<uint32_t>(to.size()));
        out.atomic.assign(lout.words(), 0);
        copy_pairs(n, lin, out, lout);
        for (uint32_t l = 0; l < from.size(); ++l) {
            uint32_t lt = *label_index(target, from[l]);
            for (uint32_t i = 0; i < n.num_ind; ++i)
                AtomicLayout::set(out.atomic, lout.label_bit(lt, i),
                                  AtomicLayout::get(n.atomic, lin.label_bit(l, i)));
        }
        for (uint32_t i = 0; i < n.num_ind; ++i)
            for (uint32_t j = 0; j < n.num_set; ++j)
                AtomicLayout::set(out.atomic, lout.member_bit(i, j),
                                  AtomicLayout::get(n.atomic, lin.member_bit(i, j)));
        for (auto c : n.vertex_ext) out.vertex_ext.push_back(extend_labels(c, target));
        for (auto c : n.set_ext) out.set_ext.push_back(extend_labels(c, target));
        dedupe(out);
        TypeId res = intern(std::move(out));
        memo_.emplace(key, res);
        return res;
    }

    // Type of the combined assignment in an ordered disjoint union. `sides`
    // lists, per individual slot of the result, whether it comes from the
    // left (false) or right (true) operand; set slots pair up positionally
    // (a set over the union splits into its two halves).
    TypeId compose(TypeId left, TypeId right, const std::vector<bool>& sides) {
        const TypeNode a = nodes_[left];  // by value: interning below may reallocate
        const TypeNode b = nodes_[right];
        if (a.rank != b.rank) throw error("compose: rank mismatch");
        if (a.num_set != b.num_set) throw error("compose: set-slot mismatch");
        if (a.labels != b.labels) throw error("compose: label signatures differ");
        if (sides.size() != size_t(a.num_ind) + b.num_ind || sides.size() > 48)
            throw error("compose: side assignment does not match slot counts");
        if (size_t(std::count(sides.begin(), sides.end(), false)) != a.num_ind)
            throw error("compose: side assignment does not match slot counts");
        if (label_index(a.labels, kLeftMark) || label_index(a.labels, kRightMark))
            throw error("compose: reserved marks already present in operands");
        if (a.set_ext.empty() != b.set_ext.empty())
            throw error("compose: operands disagree on set budget");

        uint64_t mask = 0;
        for (size_t i = 0; i < sides.size(); ++i)
            if (sides[i]) mask |= uint64_t(1) << i;
        MemoKey key{left, right, 'c', static_cast<uint32_t>(sides.size()), mask};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        LabelSigId out_sig;
        {
            auto names = sigs_[a.labels];
            names.push_back(kLeftMark);
            names.push_back(kRightMark);
            out_sig = intern_labels(std::move(names));
        }
        uint32_t k = static_cast<uint32_t>(sides.size());
        TypeNode out;
        out.rank = a.rank;
        out.num_ind = k;
        out.num_set = a.num_set;
        out.labels = out_sig;
        AtomicLayout la = layout(a), lb = layout(b);
        AtomicLayout lo(k, out.num_set, static_cast<uint32_t>(sigs_[out_sig].size()));
        out.atomic.assign(lo.words(), 0);

        // map result slot -> (side, slot within that side)
        std::vector<uint32_t> within(k);
        {
            uint32_t cl = 0, cr = 0;
            for (uint32_t i = 0; i < k; ++i) within[i] = sides[i] ? cr++ : cl++;
        }
        auto in_layout = [&](bool side) -> const AtomicLayout& { return side ? lb : la; };
        auto in_node = [&](bool side) -> const TypeNode& { return side ? b : a; };

        for (uint32_t i = 0; i < k; ++i) {
            for (uint32_t j = i + 1; j < k; ++j) {
                if (sides[i] == sides[j]) {
                    const auto& lay = in_layout(sides[i]);
                    const auto& nd = in_node(sides[i]);
                    AtomicLayout::set(out.atomic, lo.eq_bit(i, j),
                                      AtomicLayout::get(nd.atomic, lay.eq_bit(within[i], within[j])));
                    AtomicLayout::set(out.atomic, lo.edge_bit(i, j),
                                      AtomicLayout::get(nd.atomic, lay.edge_bit(within[i], within[j])));
                }
                // across sides: never equal, never adjacent
            }
            const auto& lay = in_layout(sides[i]);
            const auto& nd = in_node(sides[i]);
            const auto& from = sigs_[a.labels];
            for (uint32_t l = 0; l < from.size(); ++l) {
                uint32_t lt = *label_index(out_sig, from[l]);
                AtomicLayout::set(out.atomic, lo.label_bit(lt, i),
                                  AtomicLayout::get(nd.atomic, lay.label_bit(l, within[i])));
            }
            AtomicLayout::set(out.atomic, lo.label_bit(*label_index(out_sig, kLeftMark), i),
                              !sides[i]);
            AtomicLayout::set(out.atomic, lo.label_bit(*label_index(out_sig, kRightMark), i),
                              sides[i]);
            for (uint32_t j = 0; j < out.num_set; ++j)
                AtomicLayout::set(out.atomic, lo.member_bit(i, j),
                                  AtomicLayout::get(nd.atomic, lay.member_bit(within[i], j)));
        }

        if (a.rank > 0) {
            TypeId left_low = restrict_rank(left, a.rank - 1);
            TypeId right_low = restrict_rank(right, a.rank - 1);
            std::vector<bool> s2 = sides;
            s2.push_back(false);
            for (auto c : a.vertex_ext) out.vertex_ext.push_back(compose(c, right_low, s2));
            s2.back() = true;
            for (auto c : b.vertex_ext) out.vertex_ext.push_back(compose(left_low, c, s2));
            for (auto ca : a.set_ext)
                for (auto cb : b.set_ext) out.set_ext.push_back(compose(ca, cb, sides));
            dedupe(out);
        }
        TypeId res = intern(std::move(out));
        memo_.emplace(key, res);
        return res;
    }

    // ---- diagnostics --------------------------------------------------------

    // Canonical ids for reporting: dense renumbering ordered by
    // (rank, digest), stable across schedules and runs.
    std::map<TypeId, uint32_t> canonical_ids(std::vector<TypeId> roots) {
        std::vector<TypeId> all;
        std::vector<char> seen(nodes_.size(), 0);
        while (!roots.empty()) {
            TypeId t = roots.back();
            roots.pop_back();
            if (seen[t]) continue;
            seen[t] = 1;
            all.push_back(t);
            for (auto c : nodes_[t].vertex_ext) roots.push_back(c);
            for (auto c : nodes_[t].set_ext) roots.push_back(c);
        }
        std::sort(all.begin(), all.end(), [&](TypeId x, TypeId y) {
            auto kx = std::tuple(nodes_[x].rank, digest(x), x);
            auto ky = std::tuple(nodes_[y].rank, digest(y), y);
            return kx < ky;
        });
        std::map<TypeId, uint32_t> out;
        for (size_t i = 0; i < all.size(); ++i) out[all[i]] = static_cast<uint32_t>(i);
        return out;
    }

    // One line per reachable type: id rank (k,s) atomic-hash #vext #sext.
    std::string dump(const std::vector<TypeId>& roots) {
        auto canon = canonical_ids(roots);
        std::vector<std::pair<uint32_t, TypeId>> order;
        for (auto& [t, c] : canon) order.emplace_back(c, t);
        std::sort(order.begin(), order.end());
        std::string out;
        for (auto& [c, t] : order) {
            const TypeNode& n = nodes_[t];
            uint64_t ah = 0xcbf29ce484222325ULL;
            for (auto w : n.atomic) ah = hash_mix(ah, w);
            out += std::to_string(c) + " " + std::to_string(n.rank) + " (" +
                   std::to_string(n.num_ind) + "," + std::to_string(n.num_set) + ") " +
                   hex64(ah) + " " + std::to_string(n.vertex_ext.size()) + " " +
                   std::to_string(n.set_ext.size()) + "\n";
        }
        return out;
    }

private:
    struct MemoKey {
        TypeId a, b;
        char op;
        uint32_t aux;
        uint64_t mask;
        bool operator==(const MemoKey& o) const {
            return a == o.a && b == o.b && op == o.op && aux == o.aux && mask == o.mask;
        }
    };
    struct MemoKeyHash {
        size_t operator()(const MemoKey& k) const {
            uint64_t h = fnv1a(&k.a, sizeof k.a);
            h = hash_mix(h, k.b);
            h = hash_mix(h, static_cast<uint64_t>(k.op));
            h = hash_mix(h, k.aux);
            h = hash_mix(h, k.mask);
            return static_cast<size_t>(h);
        }
    };

    void dedupe(TypeNode& n) {
        std::sort(n.vertex_ext.begin(), n.vertex_ext.end());
        n.vertex_ext.erase(std::unique(n.vertex_ext.begin(), n.vertex_ext.end()),
                           n.vertex_ext.end());
        std::sort(n.set_ext.begin(), n.set_ext.end());
        n.set_ext.erase(std::unique(n.set_ext.begin(), n.set_ext.end()), n.set_ext.end());
    }

    void copy_pairs(const TypeNode& in, const AtomicLayout& lin, TypeNode& out,
                    const AtomicLayout& lout) {
        for (uint32_t i = 0; i < in.num_ind; ++i)
            for (uint32_t j = i + 1; j < in.num_ind; ++j) {
                AtomicLayout::set(out.atomic, lout.eq_bit(i, j),
                                  AtomicLayout::get(in.atomic, lin.eq_bit(i, j)));
                AtomicLayout::set(out.atomic, lout.edge_bit(i, j),
                                  AtomicLayout::get(in.atomic, lin.edge_bit(i, j)));
            }
    }

    TypeId apply_unary(TypeId id, char op, const std::string& p, const std::string& q) {
        const TypeNode n = nodes_[id];  // by value: interning below may reallocate
        auto pi = label_index(n.labels, p);
        if (!pi) throw error("type transform: label '" + p + "' not in signature");
        std::optional<uint32_t> qi;
        if (op != 'd') {
            qi = label_index(n.labels, q);
            if (!qi) throw error("type transform: label '" + q + "' not in signature");
            if (p == q) throw error("type transform: P != Q required");
        }
        MemoKey key{id, kNoType, op,
                    static_cast<uint32_t>(*pi),
                    op == 'd' ? 0 : static_cast<uint64_t>(*qi)};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        AtomicLayout lin = layout(n);
        TypeNode out;
        out.rank = n.rank;
        out.num_ind = n.num_ind;
        out.num_set = n.num_set;

        if (op == 'd') {
            auto names = sigs_[n.labels];
            names.erase(std::find(names.begin(), names.end(), p));
            out.labels = intern_labels(std::move(names));
        } else {
            out.labels = n.labels;
        }
        AtomicLayout lout(out.num_ind, out.num_set,
                          static_cast<uint32_t>(sigs_[out.labels].size()));
        out.atomic.assign(lout.words(), 0);
        copy_pairs(n, lin, out, lout);
        for (uint32_t i = 0; i < n.num_ind; ++i)
            for (uint32_t j = 0; j < n.num_set; ++j)
                AtomicLayout::set(out.atomic, lout.member_bit(i, j),
                                  AtomicLayout::get(n.atomic, lin.member_bit(i, j)));

        const auto& in_names = sigs_[n.labels];
        if (op == 'e') {
            for (uint32_t l = 0; l < in_names.size(); ++l)
                for (uint32_t i = 0; i < n.num_ind; ++i)
                    AtomicLayout::set(out.atomic, lout.label_bit(l, i),
                                      AtomicLayout::get(n.atomic, lin.label_bit(l, i)));
            for (uint32_t i = 0; i < n.num_ind; ++i)
                for (uint32_t j = i + 1; j < n.num_ind; ++j) {
                    bool same = AtomicLayout::get(n.atomic, lin.eq_bit(i, j));
                    bool pi_i = AtomicLayout::get(n.atomic, lin.label_bit(*pi, i));
                    bool qi_i = AtomicLayout::get(n.atomic, lin.label_bit(*qi, i));
                    bool pi_j = AtomicLayout::get(n.atomic, lin.label_bit(*pi, j));
                    bool qi_j = AtomicLayout::get(n.atomic, lin.label_bit(*qi, j));
                    bool added = !same && ((pi_i && qi_j) || (qi_i && pi_j));
                    if (added) AtomicLayout::set(out.atomic, lout.edge_bit(i, j), true);
                }
        } else if (op == 'r') {
            for (uint32_t l = 0; l < in_names.size(); ++l)
                for (uint32_t i = 0; i < n.num_ind; ++i) {
                    bool v;
                    if (l == *pi) v = false;
                    else if (l == *qi)
                        v = AtomicLayout::get(n.atomic, lin.label_bit(*pi, i)) ||
                            AtomicLayout::get(n.atomic, lin.label_bit(*qi, i));
                    else v = AtomicLayout::get(n.atomic, lin.label_bit(l, i));
                    AtomicLayout::set(out.atomic, lout.label_bit(l, i), v);
                }
        } else {  // delta
            for (uint32_t l = 0; l < in_names.size(); ++l) {
                if (l == *pi) continue;
                uint32_t lt = *label_index(out.labels, in_names[l]);
                for (uint32_t i = 0; i < n.num_ind; ++i)
                    AtomicLayout::set(out.atomic, lout.label_bit(lt, i),
                                      AtomicLayout::get(n.atomic, lin.label_bit(l, i)));
            }
        }

        for (auto c : n.vertex_ext) out.vertex_ext.push_back(apply_unary(c, op, p, q));
        for (auto c : n.set_ext) out.set_ext.push_back(apply_unary(c, op, p, q));
        dedupe(out);
        TypeId res = intern(std::move(out));
        memo_.emplace(key, res);
        return res;
    }

    bool sat_rec(TypeId id, const Formula& phi, const SlotMap& slots) {
        const TypeNode& n = nodes_[id];
        AtomicLayout lay = layout(n);
        auto ind_slot = [&](const std::string& v) -> uint32_t {
            auto it = slots.find(v);
            if (it == slots.end() || it->second.is_set)
                throw error("type_satisfies: unmapped variable '" + v + "'");
            return it->second.index;
        };
        switch (phi->kind) {
            case FNode::Kind::True: return true;
            case FNode::Kind::False: return false;
            case FNode::Kind::Equal: {
                uint32_t i = ind_slot(phi->a), j = ind_slot(phi->b);
                if (i == j) return true;
                if (i > j) std::swap(i, j);
                return AtomicLayout::get(n.atomic, lay.eq_bit(i, j));
            }
            case FNode::Kind::Edge: {
                uint32_t i = ind_slot(phi->a), j = ind_slot(phi->b);
                if (i == j) return false;
                if (i > j) std::swap(i, j);
                return AtomicLayout::get(n.atomic, lay.edge_bit(i, j));
            }
            case FNode::Kind::Label: {
                auto li = label_index(n.labels, phi->name);
                if (!li) return false;  // labels outside the vocabulary are empty
                return AtomicLayout::get(n.atomic, lay.label_bit(*li, ind_slot(phi->a)));
            }
            case FNode::Kind::SetMember: {
                auto it = slots.find(phi->name);
                if (it == slots.end() || !it->second.is_set)
                    throw error("type_satisfies: unmapped set variable '" + phi->name + "'");
                return AtomicLayout::get(n.atomic,
                                         lay.member_bit(ind_slot(phi->a), it->second.index));
            }
            case FNode::Kind::Not: return !sat_rec(id, phi->lhs, slots);
            case FNode::Kind::And: return sat_rec(id, phi->lhs, slots) && sat_rec(id, phi->rhs, slots);
            case FNode::Kind::Or: return sat_rec(id, phi->lhs, slots) || sat_rec(id, phi->rhs, slots);
            case FNode::Kind::Implies:
                return !sat_rec(id, phi->lhs, slots) || sat_rec(id, phi->rhs, slots);
            case FNode::Kind::Iff: return sat_rec(id, phi->lhs, slots) == sat_rec(id, phi->rhs, slots);
            case FNode::Kind::ExistsInd:
            case FNode::Kind::ForallInd: {
                if (n.rank == 0) throw error("type_satisfies: quantifier rank exceeded");
                bool want = phi->kind == FNode::Kind::ExistsInd;
                SlotMap inner = slots;
                inner[phi->name] = Slot{false, n.num_ind};
                for (auto c : n.vertex_ext)
                    if (sat_rec(c, phi->lhs, inner) == want) return want;
                return !want;
            }
            case FNode::Kind::ExistsSet:
            case FNode::Kind::ForallSet: {
                if (n.rank == 0) throw error("type_satisfies: quantifier rank exceeded");
                if (n.set_ext.empty())
                    throw error("type_satisfies: set budget exceeded");
                bool want = phi->kind == FNode::Kind::ExistsSet;
                SlotMap inner = slots;
                inner[phi->name] = Slot{true, n.num_set};
                for (auto c : n.set_ext)
                    if (sat_rec(c, phi->lhs, inner) == want) return want;
                return !want;
            }
        }
        return false;
    }

    std::vector<TypeNode> nodes_;
    std::unordered_map<TypeNode, TypeId, detail::TypeNodeHash> node_index_;
    std::vector<std::vector<std::string>> sigs_;
    std::map<std::vector<std::string>, LabelSigId> sig_index_;
    std::unordered_map<MemoKey, TypeId, MemoKeyHash> memo_;
    std::unordered_map<TypeId, uint64_t> digest_memo_;
};

}  // namespace msolearn
