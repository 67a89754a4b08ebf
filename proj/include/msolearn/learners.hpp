#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/rational.hpp>
#include <json.hpp>

#include "common.hpp"
#include "cwx.hpp"
#include "formula.hpp"
#include "graph.hpp"
#include "realizable.hpp"
#include "types.hpp"

namespace msolearn {

using Rational = boost::rational<long long>;

inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(s));
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    } catch (const std::exception&) {
        throw error("bad rational '" + s + "'");
    }
}

inline std::string print_rational(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// ---- training data ----------------------------------------------------------

struct TrainingSequence {
    std::vector<std::pair<std::vector<std::string>, bool>> examples;
    int k = 1;

    size_t size() const { return examples.size(); }

    std::vector<std::vector<std::string>> tuples() const {
        std::vector<std::vector<std::string>> out;
        for (auto& [t, _] : examples) out.push_back(t);
        return out;
    }
    std::vector<bool> labels() const {
        std::vector<bool> out;
        for (auto& [_, l] : examples) out.push_back(l);
        return out;
    }

    // Lines of `v_1 ... v_k ±`, whitespace separated, # comments.
    static TrainingSequence parse(const std::string& text) {
        TrainingSequence s;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ls(line);
            std::vector<std::string> toks;
            std::string t;
            while (ls >> t) toks.push_back(t);
            if (toks.empty()) continue;
            if (toks.back() != "+" && toks.back() != "-")
                throw parse_error("training example must end in + or -", lineno, 1);
            bool pos = toks.back() == "+";
            toks.pop_back();
            if (toks.empty()) throw parse_error("empty example tuple", lineno, 1);
            s.examples.emplace_back(toks, pos);
        }
        if (!s.examples.empty()) {
            s.k = int(s.examples[0].first.size());
            for (auto& [t, _] : s.examples)
                if (int(t.size()) != s.k)
                    throw error("training examples have mixed arities");
        }
        return s;
    }
};

struct DistributionSpec {
    struct Entry {
        std::vector<std::string> tuple;
        bool label;
        Rational weight;
    };
    std::vector<Entry> support;

    void validate() const {
        Rational sum(0);
        for (auto& e : support) {
            if (e.weight < Rational(0)) throw error("distribution weight must be nonnegative");
            sum += e.weight;
        }
        if (sum != Rational(1)) throw error("distribution weights must sum to 1");
    }

    static DistributionSpec from_json(const nlohmann::json& j) {
        DistributionSpec d;
        for (auto& e : j.at("support")) {
            Entry entry;
            for (auto& v : e.at("tuple")) entry.tuple.push_back(v.get<std::string>());
            auto lab = e.at("label").get<std::string>();
            if (lab != "+" && lab != "-") throw error("distribution label must be + or -");
            entry.label = lab == "+";
            entry.weight = parse_rational(e.at("weight").get<std::string>());
            d.support.push_back(std::move(entry));
        }
        d.validate();
        return d;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (auto& e : support) {
            nlohmann::json je;
            je["tuple"] = e.tuple;
            je["label"] = e.label ? "+" : "-";
            je["weight"] = print_rational(e.weight);
            arr.push_back(je);
        }
        return nlohmann::json{{"support", arr}};
    }
};

// ---- hypotheses ---------------------------------------------------------------

// A learned classifier: parameter tuple plus the digests of the positively
// labeled rank-q types of (instance, parameters). An optional provenance
// formula records where a bank hypothesis came from.
struct Hypothesis {
    int q = 0;
    int ell = 0;
    int set_budget = 0;
    std::vector<std::string> params;
    std::set<uint64_t> positive_digests;
    std::optional<std::string> formula_text;
    std::string expr_digest;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["q"] = q;
        j["ell"] = ell;
        j["setBudget"] = set_budget;
        j["params"] = params;
        auto arr = nlohmann::json::array();
        for (auto d : positive_digests) arr.push_back(hex64(d));
        j["positiveTypes"] = arr;
        if (formula_text) j["formula"] = *formula_text;
        j["exprDigest"] = expr_digest;
        return j;
    }

    static Hypothesis from_json(const nlohmann::json& j) {
        Hypothesis h;
        h.q = j.at("q").get<int>();
        h.ell = j.at("ell").get<int>();
        h.set_budget = j.at("setBudget").get<int>();
        for (auto& p : j.at("params")) h.params.push_back(p.get<std::string>());
        for (auto& d : j.at("positiveTypes"))
            h.positive_digests.insert(std::stoull(d.get<std::string>(), nullptr, 16));
        if (j.contains("formula")) h.formula_text = j["formula"].get<std::string>();
        h.expr_digest = j.at("exprDigest").get<std::string>();
        return h;
    }
};

// Classifies a batch of instance tuples in one DP pass.
inline std::vector<bool> classify_many(TypeEngine& eng, const CwExpr& expr, const Hypothesis& h,
                                       const std::vector<std::vector<std::string>>& tuples,
                                       int jobs = 1) {
    if (cwx_digest(expr) != h.expr_digest)
        throw error("hypothesis was learned on a different expression");
    if (tuples.empty()) return {};
    std::vector<std::vector<std::string>> examples;
    for (auto& t : tuples) {
        auto ex = t;
        ex.insert(ex.end(), h.params.begin(), h.params.end());
        examples.push_back(std::move(ex));
    }
    RealizSpec spec{examples, h.q, 0, h.set_budget, jobs};
    auto res = realizable_tuples(eng, expr, spec);
    const auto& tup = res.root.tuples[0].at(0);
    std::vector<bool> out;
    for (auto id : tup) out.push_back(h.positive_digests.count(eng.digest(id)) != 0);
    return out;
}

inline bool classify(TypeEngine& eng, const CwExpr& expr, const Hypothesis& h,
                     const std::vector<std::string>& tuple) {
    return classify_many(eng, expr, h, {tuple}).at(0);
}

// ---- shared witness machinery -------------------------------------------------

namespace detail {

inline std::vector<std::string> fresh_pin_names(const CwExpr& expr, int count,
                                                const std::set<std::string>& avoid) {
    std::set<std::string> taken = avoid;
    for (auto& n : expr.nodes) {
        for (auto& l : n.labels) taken.insert(l);
        if (!n.p.empty()) taken.insert(n.p);
        if (!n.q.empty()) taken.insert(n.q);
    }
    std::vector<std::string> out;
    for (int j = 1; j <= count; ++j) {
        std::string base = "Pin" + std::to_string(j);
        std::string name = base;
        for (int i = 0; taken.count(name); ++i) name = base + "_" + std::to_string(i);
        taken.insert(name);
        out.push_back(name);
    }
    return out;
}

// Greedy parameter extraction: fixes w_1, then w_2, ... each to the least
// vertex (id order) that keeps `feasible` true on the pinned expression.
// `feasible(pinned_expr, pins_fixed)` must be monotone in the sense that it
// holds initially and keeps holding for at least one extension per round.
template <typename Feasible>
std::vector<std::string> pin_witness(const CwExpr& expr, int ell,
                                     const std::vector<std::string>& pin_names,
                                     Feasible&& feasible) {
    CwExpr cur = expr;
    std::vector<std::string> witness;
    auto order = base_vertices(expr);  // sorted
    for (int j = 0; j < ell; ++j) {
        bool fixed = false;
        for (auto& v : order) {
            CwExpr cand = mark_vertex(cur, v, pin_names[j]);
            if (feasible(cand, j + 1)) {
                cur = std::move(cand);
                witness.push_back(v);
                fixed = true;
                break;
            }
        }
        if (!fixed) throw error("internal: witness extraction failed to extend");
    }
    return witness;
}

// True when the atomic diagram of `id` has `label` set on slot `slot`.
inline bool slot_has_label(TypeEngine& eng, TypeId id, const std::string& label, uint32_t slot) {
    TypeEngine::SlotMap m{{"u", {false, slot}}};
    return eng.type_satisfies(id, f::label(label, "u"), m);
}

// Projects the pin labels out of a component type.
inline TypeId purify(TypeEngine& eng, TypeId id, const std::vector<std::string>& pins,
                     int fixed) {
    TypeId t = id;
    for (int j = 0; j < fixed; ++j) t = eng.apply_delta(t, pins[j]);
    return t;
}

}  // namespace detail

// ---- consistent learners --------------------------------------------------------

// Higher-dimensional consistent learning for a fixed formula: decides
// phi-consistency and extracts a verified witness by the label-pinning loop.
inline std::optional<std::vector<std::string>> learn_hd_consistent(
    TypeEngine& eng, const CwExpr& expr, const std::vector<std::vector<std::string>>& a,
    const std::vector<bool>& sigma, const Formula& phi, int q, int k, int ell, int set_budget,
    int jobs = 1) {
    for (auto& ex : a)
        if (int(ex.size()) != k) throw error("learn_hd_consistent: arity mismatch");
    if (!phi_consistent(eng, expr, a, sigma, phi, q, ell, set_budget, jobs)) return std::nullopt;
    auto pins = detail::fresh_pin_names(expr, ell, labels_used(phi));
    auto witness = detail::pin_witness(expr, ell, pins, [&](const CwExpr& cand, int fixed) {
        Formula strengthened = phi;
        for (int j = 0; j < fixed; ++j)
            strengthened = f::conj(strengthened, f::label(pins[j], "y" + std::to_string(j + 1)));
        return phi_consistent(eng, cand, a, sigma, strengthened, q, ell, set_budget, jobs);
    });
    return witness;
}

namespace detail {

// Checks the separation condition: equal components only where labels agree.
inline bool separates(const TypeTuple& tup, const std::vector<bool>& sigma) {
    for (size_t i = 0; i < tup.size(); ++i)
        for (size_t j = i + 1; j < tup.size(); ++j)
            if (tup[i] == tup[j] && sigma[i] != sigma[j]) return false;
    return true;
}

inline std::vector<uint64_t> digest_vec(TypeEngine& eng, const TypeTuple& t) {
    std::vector<uint64_t> d;
    for (auto id : t) d.push_back(eng.digest(id));
    return d;
}

}  // namespace detail

// Type-level hypothesis synthesis: succeeds iff some rank-q hypothesis with
// ell parameters is consistent, without any formula bank.
inline std::optional<Hypothesis> synthesize_hypothesis(TypeEngine& eng, const CwExpr& expr,
                                                       const TrainingSequence& s, int q, int k,
                                                       int ell, int set_budget, int jobs = 1) {
    auto a = s.tuples();
    auto sigma = s.labels();
    for (auto& ex : a)
        if (int(ex.size()) != k) throw error("synthesize_hypothesis: arity mismatch");

    RealizSpec spec{a, q, ell, set_budget, jobs};
    auto res = realizable_tuples(eng, expr, spec);
    bool any = false;
    for (auto& tup : res.root.tuples[ell])
        if (detail::separates(tup, sigma)) {
            any = true;
            break;
        }
    if (!any) return std::nullopt;

    auto pins = detail::fresh_pin_names(expr, ell, {});
    auto pinned_separating = [&](const CwExpr& cand, int fixed) {
        RealizSpec sp{a, q, ell, set_budget, jobs};
        auto r = realizable_tuples(eng, cand, sp);
        for (auto& tup : r.root.tuples[ell]) {
            bool pinned = true;
            for (size_t i = 0; i < tup.size() && pinned; ++i)
                for (int j = 0; j < fixed && pinned; ++j)
                    if (!detail::slot_has_label(eng, tup[i], pins[j], uint32_t(k + j)))
                        pinned = false;
            if (!pinned) continue;
            TypeTuple pure;
            for (auto id : tup) pure.push_back(detail::purify(eng, id, pins, fixed));
            if (detail::separates(pure, sigma)) return true;
        }
        return false;
    };
    auto witness = detail::pin_witness(expr, ell, pins, pinned_separating);

    // read the realized separating tuple off the fully pinned expression
    CwExpr pinned = expr;
    for (int j = 0; j < ell; ++j) pinned = mark_vertex(pinned, witness[j], pins[j]);
    RealizSpec sp{a, q, ell, set_budget, jobs};
    auto fin = realizable_tuples(eng, pinned, sp);
    std::optional<TypeTuple> chosen;
    std::vector<uint64_t> chosen_key;
    for (auto& tup : fin.root.tuples[ell]) {
        bool ok = true;
        for (size_t i = 0; i < tup.size() && ok; ++i)
            for (int j = 0; j < ell && ok; ++j)
                if (!detail::slot_has_label(eng, tup[i], pins[j], uint32_t(k + j))) ok = false;
        if (!ok) continue;
        TypeTuple pure;
        for (auto id : tup) pure.push_back(detail::purify(eng, id, pins, ell));
        if (!detail::separates(pure, sigma)) continue;
        auto key = detail::digest_vec(eng, pure);
        if (!chosen || key < chosen_key) {
            chosen = pure;
            chosen_key = key;
        }
    }
    if (!chosen) throw error("internal: pinned expression lost the separating tuple");

    Hypothesis h;
    h.q = q;
    h.ell = ell;
    h.set_budget = set_budget;
    h.params = witness;
    h.expr_digest = cwx_digest(expr);
    for (size_t i = 0; i < chosen->size(); ++i)
        if (sigma[i]) h.positive_digests.insert(eng.digest((*chosen)[i]));
    return h;
}

// ---- 1-dimensional learner ------------------------------------------------------

struct Learn1dResult {
    std::optional<Hypothesis> hypothesis;
    std::string mode;  // "bank" or "types"
    std::optional<std::string> bank_formula;
};

// Learns a consistent classifier for vertex instances. With a bank, the
// training sequence is encoded into the expression as fresh labels and each
// bank formula phi is tested through its one-rank-higher rewriting over the
// marked graph; the first hit is returned with an extracted witness and its
// realized positive types. Without a bank (or when no bank formula is
// consistent) it falls back to type-level synthesis, which is complete for
// the rank-q class.
inline Learn1dResult learn_1d(TypeEngine& eng, const CwExpr& expr, const TrainingSequence& s,
                              int q, int ell, int set_budget,
                              const std::vector<Formula>& bank = {}, int jobs = 1) {
    if (s.k != 1) throw error("learn_1d: instance arity must be 1");
    Learn1dResult out;

    if (!bank.empty()) {
        std::set<std::string> avoid;
        for (auto& phi : bank)
            for (auto& l : labels_used(phi)) avoid.insert(l);
        auto pn = detail::fresh_pin_names(expr, 2, avoid);  // fresh P, N stand-ins
        std::string pos_label = pn[0], neg_label = pn[1];
        std::vector<std::pair<std::string, bool>> flat;
        for (auto& [t, l] : s.examples) flat.emplace_back(t[0], l);
        CwExpr marked = encode_training_labels(expr, flat, pos_label, neg_label);

        std::vector<std::vector<std::string>> no_examples = {{}};  // one empty tuple
        std::vector<bool> pos_sigma = {true};
        for (auto& phi : bank) {
            if (quantifier_rank(phi) > q)
                throw error("bank formula exceeds rank bound: " + print_formula(phi));
            if (set_quantifier_nesting(phi) > set_budget)
                throw error("bank formula exceeds the set budget: " + print_formula(phi));
            auto fv = free_vars(phi);
            for (auto& v : fv.individuals)
                if (v != "x1" && !(v.size() > 1 && v[0] == 'y'))
                    throw error("bank formula must use x1 and y1..yl: " + print_formula(phi));
            Formula rewritten = encode_examples_formula(phi, "x1", pos_label, neg_label);
            if (!phi_consistent(eng, marked, no_examples, pos_sigma, rewritten, q + 1, ell,
                                set_budget, jobs))
                continue;

            auto pins = detail::fresh_pin_names(marked, ell, labels_used(rewritten));
            auto witness =
                detail::pin_witness(marked, ell, pins, [&](const CwExpr& cand, int fixed) {
                    Formula strengthened = rewritten;
                    for (int j = 0; j < fixed; ++j)
                        strengthened = f::conj(strengthened,
                                               f::label(pins[j], "y" + std::to_string(j + 1)));
                    return phi_consistent(eng, cand, no_examples, pos_sigma, strengthened,
                                          q + 1, ell, set_budget, jobs);
                });

            // realized positive types of phi at the found parameters
            Hypothesis h;
            h.q = q;
            h.ell = ell;
            h.set_budget = set_budget;
            h.params = witness;
            h.expr_digest = cwx_digest(expr);
            h.formula_text = print_formula(phi);
            CwExpr pinned = expr;
            auto pins2 = detail::fresh_pin_names(expr, ell, labels_used(phi));
            for (int j = 0; j < ell; ++j) pinned = mark_vertex(pinned, witness[j], pins2[j]);
            // one empty-arity example; the instance vertex rides as an extra parameter
            RealizSpec sp{{{}}, q, 1 + ell, set_budget, jobs};
            auto all = realizable_tuples(eng, pinned, sp);
            auto slots = instance_param_slots(1, ell);
            for (auto& tup : all.root.tuples[1 + ell]) {
                TypeId id = tup.at(0);
                bool ok = true;
                for (int j = 0; j < ell && ok; ++j)
                    if (!detail::slot_has_label(eng, id, pins2[j], uint32_t(1 + j))) ok = false;
                if (!ok) continue;
                TypeId pure = detail::purify(eng, id, pins2, ell);
                if (eng.type_satisfies(pure, phi, slots))
                    h.positive_digests.insert(eng.digest(pure));
            }
            out.hypothesis = std::move(h);
            out.mode = "bank";
            out.bank_formula = print_formula(phi);
            return out;
        }
    }

    out.mode = "types";
    out.hypothesis = synthesize_hypothesis(eng, expr, s, q, 1, ell, set_budget, jobs);
    return out;
}

// ---- PAC / ERM -------------------------------------------------------------------

// ceil(C * (d + ln(1/delta)) / eps^2)
inline uint64_t sample_complexity(int d, double eps, double delta, double C) {
    if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1))
        throw error("sample_complexity: eps and delta must lie in (0,1)");
    if (!(C > 0)) throw error("sample_complexity: C must be positive");
    double v = C * (double(d) + std::log(1.0 / delta)) / (eps * eps);
    return static_cast<uint64_t>(std::ceil(v));
}

struct ErmResult {
    Hypothesis hypothesis;
    Rational empirical_error{0};
};

namespace detail {

// Best achievable agreement of a realizable tuple: per distinct component,
// take the majority label among the examples mapped to it.
inline size_t tuple_agreement(const TypeTuple& tup, const std::vector<bool>& sigma) {
    std::map<TypeId, std::pair<size_t, size_t>> votes;
    for (size_t i = 0; i < tup.size(); ++i)
        (sigma[i] ? votes[tup[i]].first : votes[tup[i]].second)++;
    size_t agree = 0;
    for (auto& [_, pn] : votes) agree += std::max(pn.first, pn.second);
    return agree;
}

}  // namespace detail

// Empirical risk minimization over the rank-q class. Mode "types" scans the
// realizable table for the best majority labeling; mode "subsequence" is the
// reference maximal-consistent-subsequence sweep (m <= 12).
inline ErmResult erm(TypeEngine& eng, const CwExpr& expr, const TrainingSequence& s, int q,
                     int k, int ell, int set_budget, const std::string& mode = "types",
                     int jobs = 1) {
    auto a = s.tuples();
    auto sigma = s.labels();
    size_t m = s.size();
    if (m == 0) throw error("erm: empty sample");

    if (mode == "subsequence") {
        if (m > 12) throw error("erm: subsequence mode supports at most 12 examples");
        for (size_t size = m; size > 0; --size) {
            for (uint64_t mask = 0; mask < (uint64_t(1) << m); ++mask) {
                if (size_t(__builtin_popcountll(mask)) != size) continue;
                TrainingSequence sub;
                sub.k = s.k;
                for (size_t i = 0; i < m; ++i)
                    if ((mask >> i) & 1) sub.examples.push_back(s.examples[i]);
                auto h = synthesize_hypothesis(eng, expr, sub, q, k, ell, set_budget, jobs);
                if (h) {
                    ErmResult r{*h, Rational(static_cast<long long>(m - size), static_cast<long long>(m))};
                    return r;
                }
            }
        }
        throw error("internal: even singleton subsequences were inconsistent");
    }
    if (mode != "types") throw error("erm: unknown mode '" + mode + "'");

    RealizSpec spec{a, q, ell, set_budget, jobs};
    auto res = realizable_tuples(eng, expr, spec);
    size_t best = 0;
    for (auto& tup : res.root.tuples[ell])
        best = std::max(best, detail::tuple_agreement(tup, sigma));

    auto pins = detail::fresh_pin_names(expr, ell, {});
    auto achieves = [&](const CwExpr& cand, int fixed) {
        RealizSpec sp{a, q, ell, set_budget, jobs};
        auto r = realizable_tuples(eng, cand, sp);
        for (auto& tup : r.root.tuples[ell]) {
            bool pinned = true;
            for (size_t i = 0; i < tup.size() && pinned; ++i)
                for (int j = 0; j < fixed && pinned; ++j)
                    if (!detail::slot_has_label(eng, tup[i], pins[j], uint32_t(k + j)))
                        pinned = false;
            if (!pinned) continue;
            TypeTuple pure;
            for (auto id : tup) pure.push_back(detail::purify(eng, id, pins, fixed));
            if (detail::tuple_agreement(pure, sigma) == best) return true;
        }
        return false;
    };
    auto witness = detail::pin_witness(expr, ell, pins, achieves);

    CwExpr pinned = expr;
    for (int j = 0; j < ell; ++j) pinned = mark_vertex(pinned, witness[j], pins[j]);
    RealizSpec sp{a, q, ell, set_budget, jobs};
    auto fin = realizable_tuples(eng, pinned, sp);
    std::optional<TypeTuple> chosen;
    std::vector<uint64_t> chosen_key;
    for (auto& tup : fin.root.tuples[ell]) {
        bool ok = true;
        for (size_t i = 0; i < tup.size() && ok; ++i)
            for (int j = 0; j < ell && ok; ++j)
                if (!detail::slot_has_label(eng, tup[i], pins[j], uint32_t(k + j))) ok = false;
        if (!ok) continue;
        TypeTuple pure;
        for (auto id : tup) pure.push_back(detail::purify(eng, id, pins, ell));
        if (detail::tuple_agreement(pure, sigma) != best) continue;
        auto key = detail::digest_vec(eng, pure);
        if (!chosen || key < chosen_key) {
            chosen = pure;
            chosen_key = key;
        }
    }
    if (!chosen) throw error("internal: pinned expression lost the optimal tuple");

    Hypothesis h;
    h.q = q;
    h.ell = ell;
    h.set_budget = set_budget;
    h.params = witness;
    h.expr_digest = cwx_digest(expr);
    // majority labeling per distinct component; ties resolve to negative
    std::map<TypeId, std::pair<size_t, size_t>> votes;
    for (size_t i = 0; i < chosen->size(); ++i)
        (sigma[i] ? votes[(*chosen)[i]].first : votes[(*chosen)[i]].second)++;
    for (auto& [id, pn] : votes)
        if (pn.first > pn.second) h.positive_digests.insert(eng.digest(id));
    ErmResult r{std::move(h), Rational(static_cast<long long>(m - best), static_cast<long long>(m))};
    return r;
}

inline Rational err_empirical(TypeEngine& eng, const CwExpr& expr, const Hypothesis& h,
                              const TrainingSequence& s, int jobs = 1) {
    if (s.size() == 0) throw error("err_empirical: empty sample");
    auto preds = classify_many(eng, expr, h, s.tuples(), jobs);
    long long wrong = 0;
    for (size_t i = 0; i < s.size(); ++i)
        if (preds[i] != s.examples[i].second) ++wrong;
    return Rational(wrong, static_cast<long long>(s.size()));
}

inline Rational err_true(TypeEngine& eng, const CwExpr& expr, const Hypothesis& h,
                         const DistributionSpec& d, int jobs = 1) {
    d.validate();
    if (d.support.empty()) return Rational(0);
    std::vector<std::vector<std::string>> tuples;
    for (auto& e : d.support) tuples.push_back(e.tuple);
    auto preds = classify_many(eng, expr, h, tuples, jobs);
    Rational err(0);
    for (size_t i = 0; i < d.support.size(); ++i)
        if (preds[i] != d.support[i].label) err += d.support[i].weight;
    return err;
}

struct PacOptions {
    double eps = 0.1;
    double delta = 0.1;
    double C = 8.0;
    uint64_t seed = 0;
    uint64_t m_override = 0;  // 0: use sample_complexity(d, ...)
    int d = 1;                // VC estimate used when m_override == 0
};

struct PacResult {
    Hypothesis hypothesis;
    TrainingSequence sample;
    uint64_t drawn = 0;
};

// Agnostic PAC learning: draw an i.i.d. sample by inverse CDF over the
// support (file order) with a seeded generator, then run ERM.
inline PacResult pac_learn(TypeEngine& eng, const CwExpr& expr, const DistributionSpec& d,
                           int q, int k, int ell, int set_budget, const PacOptions& opts,
                           int jobs = 1) {
    d.validate();
    uint64_t s_count =
        opts.m_override > 0 ? opts.m_override : sample_complexity(opts.d, opts.eps, opts.delta, opts.C);
    std::mt19937_64 rng(opts.seed);
    TrainingSequence sample;
    sample.k = k;
    for (uint64_t i = 0; i < s_count; ++i) {
        // exact inverse-CDF draw: u = x / 2^53 as a rational
        uint64_t x = rng() >> 11;
        Rational u(static_cast<long long>(x), 1LL << 53);
        Rational acc(0);
        const DistributionSpec::Entry* pick = &d.support.back();
        for (auto& e : d.support) {
            acc += e.weight;
            if (u < acc) {
                pick = &e;
                break;
            }
        }
        sample.examples.emplace_back(pick->tuple, pick->label);
    }
    auto r = erm(eng, expr, sample, q, k, ell, set_budget, "types", jobs);
    return PacResult{std::move(r.hypothesis), std::move(sample), s_count};
}

}  // namespace msolearn
