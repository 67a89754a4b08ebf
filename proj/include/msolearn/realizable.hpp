#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "common.hpp"
#include "cwx.hpp"
#include "formula.hpp"
#include "graph.hpp"
#include "types.hpp"

namespace msolearn {

// Inputs of the realizable-type-tuple DP: a sequence of example tuples and
// the parameter count. The DP computes, bottom-up over the expression, every
// tuple of types realizable over the restricted examples by some parameter
// tuple inside the node's graph.
struct RealizSpec {
    std::vector<std::vector<std::string>> examples;  // m tuples of vertex ids
    int q = 0;
    int ell = 0;
    int set_budget = 0;
    int jobs = 1;
};

using TypeTuple = std::vector<TypeId>;  // one component per example

struct RealizableTable {
    // tuples[l'] = realizable type tuples with l' parameters, insertion order
    std::vector<std::vector<TypeTuple>> tuples;
    LabelSigId sig = 0;
    std::vector<uint32_t> arities;  // restricted example arities at this node
};

struct RealizResult {
    RealizableTable root;
    size_t node_visits = 0;  // one per expression node
    size_t expr_size = 0;
    std::vector<size_t> max_tuples_per_node;  // indexed by l'
};

namespace detail {

struct TupleHash {
    size_t operator()(const TypeTuple& t) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (auto x : t) h = hash_mix(h, x);
        return static_cast<size_t>(h);
    }
};

class RealizRunner {
public:
    RealizRunner(TypeEngine& eng, const CwExpr& expr, const RealizSpec& spec)
        : eng_(eng), expr_(expr), spec_(spec) {
        auto diags = check_wellformed(expr);
        if (!diags.empty())
            throw error("expression not well-formed: " + diags.front().message + " (" +
                        diags.front().path + ")");
        vert_sets_.resize(expr.nodes.size());
        fill_vert_sets(expr.root);
        const auto& bases = vert_sets_[expr.root];
        for (auto& ex : spec.examples)
            for (auto& v : ex)
                if (!std::binary_search(bases.begin(), bases.end(), v))
                    throw error("example vertex '" + v + "' is not a base vertex");
    }

    RealizResult run() {
        RealizResult res;
        res.expr_size = expr_.nodes.size();
        res.max_tuples_per_node.assign(spec_.ell + 1, 0);
        res.root = walk(expr_.root, res, 0);
        res.node_visits = visits_;
        return res;
    }

private:
    void fill_vert_sets(int at) {
        const auto& n = expr_.nodes[at];
        if (n.kind == CwExpr::Kind::Base) {
            vert_sets_[at] = {n.vertex};
            return;
        }
        fill_vert_sets(n.left);
        if (n.right >= 0) fill_vert_sets(n.right);
        auto& out = vert_sets_[at];
        out = vert_sets_[n.left];
        if (n.right >= 0) {
            out.insert(out.end(), vert_sets_[n.right].begin(), vert_sets_[n.right].end());
            std::sort(out.begin(), out.end());
        }
    }

    template <typename F>
    decltype(auto) locked(F&& fn) {
        if (spec_.jobs > 1) {
            std::lock_guard<std::mutex> lk(mu_);
            return fn();
        }
        return fn();
    }

    RealizableTable walk(int at, RealizResult& res, int depth) {
        {
            std::lock_guard<std::mutex> lk(visit_mu_);
            ++visits_;
        }
        const auto& n = expr_.nodes[at];
        RealizableTable out;
        switch (n.kind) {
            case CwExpr::Kind::Base:
                out = base_table(n);
                break;
            case CwExpr::Kind::Eta:
            case CwExpr::Kind::Rho:
            case CwExpr::Kind::Delta: {
                out = walk(n.left, res, depth + 1);
                for (auto& per_l : out.tuples)
                    for (auto& tup : per_l)
                        for (auto& t : tup)
                            t = locked([&] {
                                switch (n.kind) {
                                    case CwExpr::Kind::Eta: return eng_.apply_eta(t, n.p, n.q);
                                    case CwExpr::Kind::Rho: return eng_.apply_rho(t, n.p, n.q);
                                    default: return eng_.apply_delta(t, n.p);
                                }
                            });
                if (n.kind == CwExpr::Kind::Delta) out.sig = drop_label(out.sig, n.p);
                dedupe(out);
                break;
            }
            case CwExpr::Kind::Union:
            case CwExpr::Kind::OrderedUnion: {
                RealizableTable lt, rt;
                if (spec_.jobs > 1 && depth < 4) {
                    auto fut = std::async(std::launch::async,
                                          [&] { return walk(n.left, res, depth + 1); });
                    rt = walk(n.right, res, depth + 1);
                    lt = fut.get();
                } else {
                    lt = walk(n.left, res, depth + 1);
                    rt = walk(n.right, res, depth + 1);
                }
                out = join(lt, rt, vert_sets_[n.left], vert_sets_[n.right],
                           n.kind == CwExpr::Kind::Union);
                break;
            }
        }
        {
            std::lock_guard<std::mutex> lk(visit_mu_);
            for (int l = 0; l <= spec_.ell; ++l)
                res.max_tuples_per_node[l] =
                    std::max(res.max_tuples_per_node[l], out.tuples[l].size());
        }
        return out;
    }

    RealizableTable base_table(const CwExpr::Node& n) {
        RealizableTable out;
        std::map<std::string, std::set<std::string>> label_map;
        for (auto& l : n.labels) label_map[l] = {n.vertex};
        LabeledGraph g = LabeledGraph::from_parts({n.vertex}, {}, label_map);
        for (auto& ex : spec_.examples) {
            uint32_t cnt = 0;
            for (auto& v : ex)
                if (v == n.vertex) ++cnt;
            out.arities.push_back(cnt);
        }
        out.tuples.assign(spec_.ell + 1, {});
        locked([&] {
            auto ctx = eng_.make_ctx(g);
            out.sig = ctx.sig;
            for (int l = 0; l <= spec_.ell; ++l) {
                TypeTuple tup;
                for (size_t i = 0; i < spec_.examples.size(); ++i) {
                    // the only parameter choice repeats the single vertex
                    std::vector<uint32_t> ind(out.arities[i] + l, 0);
                    tup.push_back(eng_.compute_type(ctx, ind, {}, spec_.q, spec_.set_budget));
                }
                out.tuples[l].push_back(std::move(tup));
            }
        });
        return out;
    }

    RealizableTable join(const RealizableTable& lt, const RealizableTable& rt,
                         const std::vector<std::string>& left_verts,
                         const std::vector<std::string>& right_verts, bool plain) {
        RealizableTable out;
        size_t m = spec_.examples.size();
        LabelSigId merged = locked([&] {
            auto names = eng_.labels_of(lt.sig);
            auto rn = eng_.labels_of(rt.sig);
            names.insert(names.end(), rn.begin(), rn.end());
            return eng_.intern_labels(std::move(names));
        });
        auto lift = [&](const RealizableTable& tbl) {
            if (tbl.sig == merged) return tbl;
            RealizableTable copy = tbl;
            copy.sig = merged;
            for (auto& per_l : copy.tuples)
                for (auto& tup : per_l)
                    for (auto& t : tup)
                        t = locked([&] { return eng_.extend_labels(t, merged); });
            return copy;
        };
        RealizableTable left = lift(lt), right = lift(rt);

        for (size_t i = 0; i < m; ++i) out.arities.push_back(lt.arities[i] + rt.arities[i]);

        // side of each restricted instance slot, per example, original order
        std::vector<std::vector<bool>> inst_sides(m);
        for (size_t i = 0; i < m; ++i) {
            for (auto& v : spec_.examples[i]) {
                if (std::binary_search(left_verts.begin(), left_verts.end(), v))
                    inst_sides[i].push_back(false);
                else if (std::binary_search(right_verts.begin(), right_verts.end(), v))
                    inst_sides[i].push_back(true);
                // otherwise the occurrence is outside this subtree
            }
        }

        out.tuples.assign(spec_.ell + 1, {});
        for (int l = 0; l <= spec_.ell; ++l) {
            std::unordered_set<TypeTuple, TupleHash> seen;
            // lexicographic bitmask order over parameter splits; bit j set
            // sends parameter j+1 to the left operand
            for (uint32_t split = 0; split < (uint32_t(1) << l); ++split) {
                int nl = __builtin_popcount(split);
                int nr = l - nl;
                for (auto& t1 : left.tuples[nl]) {
                    for (auto& t2 : right.tuples[nr]) {
                        TypeTuple combined;
                        combined.reserve(m);
                        for (size_t i = 0; i < m; ++i) {
                            std::vector<bool> sides = inst_sides[i];
                            for (int j = 0; j < l; ++j) sides.push_back(!((split >> j) & 1));
                            combined.push_back(
                                locked([&] { return eng_.compose(t1[i], t2[i], sides); }));
                        }
                        if (seen.insert(combined).second)
                            out.tuples[l].push_back(std::move(combined));
                    }
                }
            }
        }
        out.sig = locked([&] {
            auto names = eng_.labels_of(merged);
            names.push_back(kLeftMark);
            names.push_back(kRightMark);
            return eng_.intern_labels(std::move(names));
        });
        if (plain) {
            for (auto& per_l : out.tuples)
                for (auto& tup : per_l)
                    for (auto& t : tup)
                        t = locked([&] {
                            return eng_.apply_delta(eng_.apply_delta(t, kLeftMark), kRightMark);
                        });
            out.sig = drop_label(drop_label(out.sig, kLeftMark), kRightMark);
            dedupe(out);
        }
        return out;
    }

    LabelSigId drop_label(LabelSigId sig, const std::string& name) {
        return locked([&] {
            auto names = eng_.labels_of(sig);
            names.erase(std::remove(names.begin(), names.end(), name), names.end());
            return eng_.intern_labels(std::move(names));
        });
    }

    void dedupe(RealizableTable& tbl) {
        for (auto& per_l : tbl.tuples) {
            std::unordered_set<TypeTuple, TupleHash> seen;
            std::vector<TypeTuple> kept;
            for (auto& t : per_l)
                if (seen.insert(t).second) kept.push_back(t);
            per_l = std::move(kept);
        }
    }

    TypeEngine& eng_;
    const CwExpr& expr_;
    RealizSpec spec_;
    size_t visits_ = 0;
    std::mutex mu_, visit_mu_;
    std::vector<std::vector<std::string>> vert_sets_;
};

}  // namespace detail

inline RealizResult realizable_tuples(TypeEngine& eng, const CwExpr& expr,
                                      const RealizSpec& spec) {
    detail::RealizRunner runner(eng, expr, spec);
    return runner.run();
}

// Slot map for a component type of arity k with l parameters: x1..xk then y1..yl.
inline TypeEngine::SlotMap instance_param_slots(int k, int l) {
    TypeEngine::SlotMap slots;
    for (int i = 0; i < k; ++i)
        slots["x" + std::to_string(i + 1)] = {false, static_cast<uint32_t>(i)};
    for (int j = 0; j < l; ++j)
        slots["y" + std::to_string(j + 1)] = {false, static_cast<uint32_t>(k + j)};
    return slots;
}

// Decides whether some parameter tuple classifies every example according to
// sigma under phi: some realizable tuple must satisfy phi exactly on the
// positively labeled components.
inline bool phi_consistent(TypeEngine& eng, const CwExpr& expr,
                           const std::vector<std::vector<std::string>>& examples,
                           const std::vector<bool>& sigma, const Formula& phi, int q, int ell,
                           int set_budget, int jobs = 1) {
    if (examples.size() != sigma.size()) throw error("phi_consistent: sigma length mismatch");
    if (quantifier_rank(phi) > q) throw error("phi_consistent: quantifier rank exceeds q");
    if (set_quantifier_nesting(phi) > set_budget)
        throw error("phi_consistent: set-quantifier nesting exceeds the budget");
    if (examples.empty()) return true;  // vacuously consistent
    size_t k = examples[0].size();
    for (auto& ex : examples)
        if (ex.size() != k) throw error("phi_consistent: example arities differ");
    RealizSpec spec{examples, q, ell, set_budget, jobs};
    auto res = realizable_tuples(eng, expr, spec);
    auto slots = instance_param_slots(static_cast<int>(k), ell);
    for (auto& tup : res.root.tuples[ell]) {
        bool ok = true;
        for (size_t i = 0; i < tup.size() && ok; ++i)
            if (eng.type_satisfies(tup[i], phi, slots) != sigma[i]) ok = false;
        if (ok) return true;
    }
    return false;
}

// ---- VC dimension and counting utilities (oracle side: eval_formula) -------

// Number of distinct traces of X under all parameter settings.
inline size_t shatter_count(const LabeledGraph& g, const Formula& phi,
                            const std::vector<std::vector<size_t>>& X, int ell) {
    size_t n = g.size();
    size_t k = X.empty() ? 0 : X[0].size();
    std::set<std::vector<bool>> patterns;
    std::vector<size_t> w(ell, 0);
    auto eval_at = [&](const std::vector<size_t>& x) {
        Assignment a;
        for (size_t i = 0; i < k; ++i) a.individuals["x" + std::to_string(i + 1)] = x[i];
        for (int j = 0; j < ell; ++j) a.individuals["y" + std::to_string(j + 1)] = w[j];
        return eval_formula(g, phi, a);
    };
    uint64_t total = 1;
    for (int j = 0; j < ell; ++j) total *= n;
    for (uint64_t code = 0; code < total; ++code) {
        uint64_t c = code;
        for (int j = 0; j < ell; ++j) {
            w[j] = c % n;
            c /= n;
        }
        std::vector<bool> pat;
        for (auto& x : X) pat.push_back(eval_at(x));
        patterns.insert(pat);
        if (!X.empty() && patterns.size() == (size_t(1) << X.size())) break;
    }
    return patterns.size();
}

// Largest d <= maxd such that some X of size d is shattered; brute force.
inline int vc_dimension(const LabeledGraph& g, const Formula& phi, int k, int ell, int maxd) {
    size_t n = g.size();
    std::vector<std::vector<size_t>> tuples;
    {
        uint64_t total = 1;
        for (int j = 0; j < k; ++j) total *= n;
        for (uint64_t code = 0; code < total; ++code) {
            uint64_t c = code;
            std::vector<size_t> t(k);
            for (int j = 0; j < k; ++j) {
                t[j] = c % n;
                c /= n;
            }
            tuples.push_back(t);
        }
    }
    int best = 0;
    for (int d = 1; d <= maxd && size_t(d) <= tuples.size(); ++d) {
        bool found = false;
        std::vector<size_t> idx(d);
        for (int i = 0; i < d; ++i) idx[i] = i;
        while (true) {
            std::vector<std::vector<size_t>> X;
            for (int i = 0; i < d; ++i) X.push_back(tuples[idx[i]]);
            if (shatter_count(g, phi, X, ell) == (size_t(1) << d)) {
                found = true;
                break;
            }
            int pos = d - 1;
            while (pos >= 0 && idx[pos] == tuples.size() - d + pos) --pos;
            if (pos < 0) break;
            ++idx[pos];
            for (int i = pos + 1; i < d; ++i) idx[i] = idx[i - 1] + 1;
        }
        if (!found) break;  // shattering is downward closed
        best = d;
    }
    return best;
}

// Matrix utility: given a matrix with pairwise distinct columns over a finite
// alphabet, finds a symbol whose 0/1 indicator matrix still has at least c
// distinct columns. Guaranteed to exist when n > (c-1)^(s-1).
inline std::optional<int> distinct_column_symbol(const std::vector<std::vector<int>>& M, int c) {
    if (M.empty()) return std::nullopt;
    size_t rows = M.size(), cols = M[0].size();
    for (auto& r : M)
        if (r.size() != cols) throw error("distinct_column_symbol: ragged matrix");
    {
        std::set<std::vector<int>> colset;
        for (size_t j = 0; j < cols; ++j) {
            std::vector<int> col(rows);
            for (size_t i = 0; i < rows; ++i) col[i] = M[i][j];
            if (!colset.insert(col).second)
                throw error("distinct_column_symbol: columns must be pairwise distinct");
        }
    }
    std::set<int> alphabet;
    for (auto& r : M) alphabet.insert(r.begin(), r.end());
    for (int sym : alphabet) {
        std::set<std::vector<bool>> cols_seen;
        for (size_t j = 0; j < cols; ++j) {
            std::vector<bool> col(rows);
            for (size_t i = 0; i < rows; ++i) col[i] = M[i][j] == sym;
            cols_seen.insert(col);
        }
        if (cols_seen.size() >= size_t(c)) return sym;
    }
    return std::nullopt;
}

inline uint64_t binomial(uint64_t n, uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    uint64_t r = 1;
    for (uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Sauer-Shelah growth function.
inline uint64_t growth_bound(int d, uint64_t m) {
    uint64_t s = 0;
    for (int i = 0; i <= d; ++i) s += binomial(m, i);
    return s;
}

struct CountReport {
    std::vector<size_t> max_per_ell;  // max table size across nodes, per l'
    size_t max_count = 0;
    uint64_t bound = 0;
    bool flagged = false;  // a node exceeded the bound (diagnostic only)
    std::string text;
};

// Diagnostic against the polynomial type-count rationale: per-node realizable
// counts are compared with (k+1) * growth(d,m)^t. Never fails a run.
inline CountReport count_diagnostics(const RealizResult& res, int d, size_t m, int k, uint64_t t) {
    CountReport rep;
    rep.max_per_ell = res.max_tuples_per_node;
    for (auto c : res.max_tuples_per_node) rep.max_count = std::max(rep.max_count, c);
    long double bound = k + 1;
    uint64_t g = growth_bound(d, m);
    for (uint64_t i = 0; i < t; ++i) {
        bound *= g;
        if (bound > 1e18L) {
            bound = 1e18L;
            break;
        }
    }
    rep.bound = static_cast<uint64_t>(bound);
    rep.flagged = rep.max_count > rep.bound;
    rep.text = "realizable-count diagnostic: max " + std::to_string(rep.max_count) +
               ", bound " + std::to_string(rep.bound) + (rep.flagged ? " [FLAG]" : " [ok]");
    return rep;
}

}  // namespace msolearn
