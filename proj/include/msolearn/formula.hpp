#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "graph.hpp"

namespace msolearn {

// MSO abstract syntax. Nodes are immutable and shared; terms are variable
// names (individual variables lowercase-initial, set variables and labels
// uppercase-initial).
struct FNode;
using Formula = std::shared_ptr<const FNode>;

struct FNode {
    enum class Kind {
        True, False,
        Equal, Edge,        // a, b: individual variables
        Label,              // name: label, a: individual variable
        SetMember,          // name: set variable, a: individual variable
        Not, And, Or, Implies, Iff,
        ExistsInd, ForallInd,  // var: individual variable
        ExistsSet, ForallSet   // var: set variable
    };

    Kind kind;
    std::string name;  // label/set name or bound variable
    std::string a, b;  // term operands
    Formula lhs, rhs;  // subformulas (lhs only for unary/quantifier)
};

namespace f {

inline Formula mk(FNode n) { return std::make_shared<FNode>(std::move(n)); }

inline Formula truth() { return mk({FNode::Kind::True, "", "", "", nullptr, nullptr}); }
inline Formula falsity() { return mk({FNode::Kind::False, "", "", "", nullptr, nullptr}); }
inline Formula equal(const std::string& a, const std::string& b) {
    return mk({FNode::Kind::Equal, "", a, b, nullptr, nullptr});
}
inline Formula edge(const std::string& a, const std::string& b) {
    return mk({FNode::Kind::Edge, "", a, b, nullptr, nullptr});
}
inline Formula label(const std::string& name, const std::string& a) {
    return mk({FNode::Kind::Label, name, a, "", nullptr, nullptr});
}
inline Formula member(const std::string& set, const std::string& a) {
    return mk({FNode::Kind::SetMember, set, a, "", nullptr, nullptr});
}
inline Formula neg(Formula x) {
    return mk({FNode::Kind::Not, "", "", "", std::move(x), nullptr});
}
inline Formula conj(Formula x, Formula y) {
    return mk({FNode::Kind::And, "", "", "", std::move(x), std::move(y)});
}
inline Formula disj(Formula x, Formula y) {
    return mk({FNode::Kind::Or, "", "", "", std::move(x), std::move(y)});
}
inline Formula implies(Formula x, Formula y) {
    return mk({FNode::Kind::Implies, "", "", "", std::move(x), std::move(y)});
}
inline Formula iff(Formula x, Formula y) {
    return mk({FNode::Kind::Iff, "", "", "", std::move(x), std::move(y)});
}
inline Formula exists(const std::string& v, Formula body) {
    return mk({FNode::Kind::ExistsInd, v, "", "", std::move(body), nullptr});
}
inline Formula forall(const std::string& v, Formula body) {
    return mk({FNode::Kind::ForallInd, v, "", "", std::move(body), nullptr});
}
inline Formula exists_set(const std::string& v, Formula body) {
    return mk({FNode::Kind::ExistsSet, v, "", "", std::move(body), nullptr});
}
inline Formula forall_set(const std::string& v, Formula body) {
    return mk({FNode::Kind::ForallSet, v, "", "", std::move(body), nullptr});
}

// Folds a list with a binary connective; empty list yields the given unit.
inline Formula conj_all(const std::vector<Formula>& xs) {
    if (xs.empty()) return truth();
    Formula acc = xs[0];
    for (size_t i = 1; i < xs.size(); ++i) acc = conj(acc, xs[i]);
    return acc;
}
inline Formula disj_all(const std::vector<Formula>& xs) {
    if (xs.empty()) return falsity();
    Formula acc = xs[0];
    for (size_t i = 1; i < xs.size(); ++i) acc = disj(acc, xs[i]);
    return acc;
}

}  // namespace f

inline bool is_ind_var(const std::string& s) {
    return !s.empty() && std::islower(static_cast<unsigned char>(s[0]));
}
inline bool is_set_or_label_name(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

inline int quantifier_rank(const Formula& phi) {
    switch (phi->kind) {
        case FNode::Kind::True:
        case FNode::Kind::False:
        case FNode::Kind::Equal:
        case FNode::Kind::Edge:
        case FNode::Kind::Label:
        case FNode::Kind::SetMember:
            return 0;
        case FNode::Kind::Not:
            return quantifier_rank(phi->lhs);
        case FNode::Kind::And:
        case FNode::Kind::Or:
        case FNode::Kind::Implies:
        case FNode::Kind::Iff:
            return std::max(quantifier_rank(phi->lhs), quantifier_rank(phi->rhs));
        case FNode::Kind::ExistsInd:
        case FNode::Kind::ForallInd:
        case FNode::Kind::ExistsSet:
        case FNode::Kind::ForallSet:
            return 1 + quantifier_rank(phi->lhs);
    }
    return 0;
}

// Maximum number of set quantifiers along any root-to-leaf path.
inline int set_quantifier_nesting(const Formula& phi) {
    switch (phi->kind) {
        case FNode::Kind::Not:
            return set_quantifier_nesting(phi->lhs);
        case FNode::Kind::And:
        case FNode::Kind::Or:
        case FNode::Kind::Implies:
        case FNode::Kind::Iff:
            return std::max(set_quantifier_nesting(phi->lhs), set_quantifier_nesting(phi->rhs));
        case FNode::Kind::ExistsInd:
        case FNode::Kind::ForallInd:
            return set_quantifier_nesting(phi->lhs);
        case FNode::Kind::ExistsSet:
        case FNode::Kind::ForallSet:
            return 1 + set_quantifier_nesting(phi->lhs);
        default:
            return 0;
    }
}

namespace detail {

inline void collect_vars(const Formula& phi, std::set<std::string>& bound_ind,
                         std::set<std::string>& bound_set, std::set<std::string>& free_ind,
                         std::set<std::string>& free_set) {
    switch (phi->kind) {
        case FNode::Kind::True:
        case FNode::Kind::False:
            return;
        case FNode::Kind::Equal:
        case FNode::Kind::Edge:
            if (!bound_ind.count(phi->a)) free_ind.insert(phi->a);
            if (!bound_ind.count(phi->b)) free_ind.insert(phi->b);
            return;
        case FNode::Kind::Label:
            if (!bound_ind.count(phi->a)) free_ind.insert(phi->a);
            return;
        case FNode::Kind::SetMember:
            if (!bound_ind.count(phi->a)) free_ind.insert(phi->a);
            if (!bound_set.count(phi->name)) free_set.insert(phi->name);
            return;
        case FNode::Kind::Not:
            collect_vars(phi->lhs, bound_ind, bound_set, free_ind, free_set);
            return;
        case FNode::Kind::And:
        case FNode::Kind::Or:
        case FNode::Kind::Implies:
        case FNode::Kind::Iff:
            collect_vars(phi->lhs, bound_ind, bound_set, free_ind, free_set);
            collect_vars(phi->rhs, bound_ind, bound_set, free_ind, free_set);
            return;
        case FNode::Kind::ExistsInd:
        case FNode::Kind::ForallInd: {
            bool fresh = bound_ind.insert(phi->name).second;
            collect_vars(phi->lhs, bound_ind, bound_set, free_ind, free_set);
            if (fresh) bound_ind.erase(phi->name);
            return;
        }
        case FNode::Kind::ExistsSet:
        case FNode::Kind::ForallSet: {
            bool fresh = bound_set.insert(phi->name).second;
            collect_vars(phi->lhs, bound_ind, bound_set, free_ind, free_set);
            if (fresh) bound_set.erase(phi->name);
            return;
        }
    }
}

}  // namespace detail

struct FreeVars {
    std::set<std::string> individuals;
    std::set<std::string> sets;
};

inline FreeVars free_vars(const Formula& phi) {
    std::set<std::string> bi, bs;
    FreeVars fv;
    detail::collect_vars(phi, bi, bs, fv.individuals, fv.sets);
    return fv;
}

inline std::set<std::string> labels_used(const Formula& phi) {
    std::set<std::string> out;
    if (!phi) return out;
    if (phi->kind == FNode::Kind::Label) out.insert(phi->name);
    for (auto& sub : {phi->lhs, phi->rhs})
        if (sub) {
            auto s = labels_used(sub);
            out.insert(s.begin(), s.end());
        }
    return out;
}

// ---- printing --------------------------------------------------------------

namespace detail {

inline void print_formula(const Formula& phi, std::ostream& os) {
    switch (phi->kind) {
        case FNode::Kind::True: os << "true"; return;
        case FNode::Kind::False: os << "false"; return;
        case FNode::Kind::Equal: os << phi->a << " = " << phi->b; return;
        case FNode::Kind::Edge: os << "E(" << phi->a << "," << phi->b << ")"; return;
        case FNode::Kind::Label: os << phi->name << "(" << phi->a << ")"; return;
        case FNode::Kind::SetMember: os << phi->name << "(" << phi->a << ")"; return;
        case FNode::Kind::Not:
            os << "!";
            if (phi->lhs->kind == FNode::Kind::Equal) {
                os << "(";
                print_formula(phi->lhs, os);
                os << ")";
            } else {
                print_formula(phi->lhs, os);
            }
            return;
        case FNode::Kind::And:
        case FNode::Kind::Or:
        case FNode::Kind::Implies:
        case FNode::Kind::Iff: {
            const char* op = phi->kind == FNode::Kind::And ? " & "
                           : phi->kind == FNode::Kind::Or  ? " | "
                           : phi->kind == FNode::Kind::Implies ? " -> " : " <-> ";
            os << "(";
            print_formula(phi->lhs, os);
            os << op;
            print_formula(phi->rhs, os);
            os << ")";
            return;
        }
        case FNode::Kind::ExistsInd: os << "ex " << phi->name << ". "; break;
        case FNode::Kind::ForallInd: os << "all " << phi->name << ". "; break;
        case FNode::Kind::ExistsSet: os << "EX " << phi->name << ". "; break;
        case FNode::Kind::ForallSet: os << "ALL " << phi->name << ". "; break;
    }
    print_formula(phi->lhs, os);
}

}  // namespace detail

inline std::string print_formula(const Formula& phi) {
    std::ostringstream os;
    detail::print_formula(phi, os);
    return os.str();
}

inline bool formula_equal(const Formula& x, const Formula& y) {
    if (x == y) return true;
    if (x->kind != y->kind || x->name != y->name || x->a != y->a || x->b != y->b) return false;
    if ((x->lhs == nullptr) != (y->lhs == nullptr)) return false;
    if ((x->rhs == nullptr) != (y->rhs == nullptr)) return false;
    if (x->lhs && !formula_equal(x->lhs, y->lhs)) return false;
    if (x->rhs && !formula_equal(x->rhs, y->rhs)) return false;
    return true;
}

// ---- parsing ---------------------------------------------------------------

// Grammar: true|false, E(t,t), t = t, Name(t), SetVar(t), !f, (f & f),
// (f | f), (f -> f), (f <-> f), ex v. f, all v. f, EX V. f, ALL V. f.
// Uppercase-initial applications resolve to labels via the vocabulary and
// to set variables via scope or the declared free set.
class FormulaParser {
public:
    FormulaParser(const std::string& text, std::set<std::string> vocab,
                  std::set<std::string> free_sets)
        : text_(text), vocab_(std::move(vocab)), free_sets_(std::move(free_sets)) {}

    Formula parse() {
        auto phi = parse_formula();
        skip_ws();
        if (pos_ < text_.size()) fail("trailing input after formula");
        return phi;
    }

private:
    Formula parse_formula() {
        skip_ws();
        if (eat_keyword("ex")) return parse_quant(FNode::Kind::ExistsInd);
        if (eat_keyword("all")) return parse_quant(FNode::Kind::ForallInd);
        if (eat_keyword("EX")) return parse_quant(FNode::Kind::ExistsSet);
        if (eat_keyword("ALL")) return parse_quant(FNode::Kind::ForallSet);
        if (peek('!')) {
            ++pos_; ++col_;
            return f::neg(parse_formula());
        }
        if (peek('(')) {
            ++pos_; ++col_;
            auto lhs = parse_formula();
            skip_ws();
            if (peek(')')) {  // redundant parentheses
                ++pos_; ++col_;
                return lhs;
            }
            FNode::Kind k;
            if (eat_op("&")) k = FNode::Kind::And;
            else if (eat_op("|")) k = FNode::Kind::Or;
            else if (eat_op("<->")) k = FNode::Kind::Iff;
            else if (eat_op("->")) k = FNode::Kind::Implies;
            else { fail("expected connective (&, |, ->, <->)"); }
            auto rhs = parse_formula();
            skip_ws();
            if (!peek(')')) fail("expected ')'");
            ++pos_; ++col_;
            return f::mk({k, "", "", "", lhs, rhs});
        }
        if (eat_keyword("true")) return f::truth();
        if (eat_keyword("false")) return f::falsity();
        return parse_atom();
    }

    Formula parse_quant(FNode::Kind k) {
        std::string v = identifier();
        bool ind = k == FNode::Kind::ExistsInd || k == FNode::Kind::ForallInd;
        if (ind && !is_ind_var(v)) fail("individual variable must be lowercase: " + v);
        if (!ind && !is_set_or_label_name(v)) fail("set variable must be uppercase-initial: " + v);
        if (!ind && vocab_.count(v)) fail("set variable '" + v + "' clashes with a label");
        auto& scope = ind ? ind_scope_ : set_scope_;
        if (scope.count(v)) fail("variable '" + v + "' rebound on the same path");
        skip_ws();
        if (!peek('.')) fail("expected '.' after quantified variable");
        ++pos_; ++col_;
        scope.insert(v);
        auto body = parse_formula();
        scope.erase(v);
        return f::mk({k, v, "", "", body, nullptr});
    }

    Formula parse_atom() {
        std::string t = identifier();
        skip_ws();
        if (t == "E" && peek('(')) {
            ++pos_; ++col_;
            std::string a = term();
            skip_ws();
            if (!peek(',')) fail("expected ',' in edge atom");
            ++pos_; ++col_;
            std::string b = term();
            skip_ws();
            if (!peek(')')) fail("expected ')'");
            ++pos_; ++col_;
            return f::edge(a, b);
        }
        if (is_set_or_label_name(t) && peek('(')) {
            ++pos_; ++col_;
            std::string a = term();
            skip_ws();
            if (!peek(')')) fail("expected ')'");
            ++pos_; ++col_;
            if (set_scope_.count(t) || free_sets_.count(t)) return f::member(t, a);
            if (vocab_.count(t)) return f::label(t, a);
            fail("unknown label or undeclared set variable '" + t + "'");
        }
        if (is_ind_var(t)) {
            skip_ws();
            if (peek('=')) {
                ++pos_; ++col_;
                std::string b = term();
                return f::equal(t, b);
            }
            fail("expected '=' after individual variable '" + t + "'");
        }
        fail("unexpected token '" + t + "'");
        return nullptr;
    }

    std::string term() {
        std::string v = identifier();
        if (!is_ind_var(v)) fail("term must be an individual variable: " + v);
        return v;
    }

    std::string identifier() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (pos_ == start) fail("expected identifier");
        col_ += static_cast<int>(pos_ - start);
        return text_.substr(start, pos_ - start);
    }

    bool eat_keyword(const std::string& kw) {
        skip_ws();
        if (text_.compare(pos_, kw.size(), kw) != 0) return false;
        size_t end = pos_ + kw.size();
        if (end < text_.size() &&
            (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
            return false;
        pos_ = end;
        col_ += static_cast<int>(kw.size());
        return true;
    }

    bool eat_op(const std::string& op) {
        skip_ws();
        // "<->" must not be eaten as "<-"+">", and "->" is checked after "<->"
        if (op == "->" && text_.compare(pos_, 3, "<->") == 0) return false;
        if (text_.compare(pos_, op.size(), op) != 0) return false;
        pos_ += op.size();
        col_ += static_cast<int>(op.size());
        return true;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++pos_; ++line_; col_ = 1;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_; ++col_;
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) { throw parse_error(msg, line_, col_); }

    std::string text_;
    std::set<std::string> vocab_, free_sets_;
    std::set<std::string> ind_scope_, set_scope_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

inline Formula parse_formula(const std::string& text, const std::set<std::string>& vocab,
                             const std::set<std::string>& free_sets = {}) {
    return FormulaParser(text, vocab, free_sets).parse();
}

// ---- semantics (the global brute-force oracle) ------------------------------

// Variable assignment: individuals to vertex indices, set variables to
// vertex-index sets (bitmask over the sorted vertex order).
struct Assignment {
    std::map<std::string, size_t> individuals;
    std::map<std::string, std::vector<bool>> sets;
};

namespace detail {

inline bool eval_rec(const LabeledGraph& g, const Formula& phi, Assignment& alpha) {
    auto ind = [&](const std::string& v) -> size_t {
        auto it = alpha.individuals.find(v);
        if (it == alpha.individuals.end()) throw error("uncovered free variable '" + v + "'");
        return it->second;
    };
    switch (phi->kind) {
        case FNode::Kind::True: return true;
        case FNode::Kind::False: return false;
        case FNode::Kind::Equal: return ind(phi->a) == ind(phi->b);
        case FNode::Kind::Edge: return g.adjacent(ind(phi->a), ind(phi->b));
        case FNode::Kind::Label: return g.has_label(phi->name, ind(phi->a));
        case FNode::Kind::SetMember: {
            auto it = alpha.sets.find(phi->name);
            if (it == alpha.sets.end()) throw error("uncovered free set variable '" + phi->name + "'");
            return it->second[ind(phi->a)];
        }
        case FNode::Kind::Not: return !eval_rec(g, phi->lhs, alpha);
        case FNode::Kind::And: return eval_rec(g, phi->lhs, alpha) && eval_rec(g, phi->rhs, alpha);
        case FNode::Kind::Or: return eval_rec(g, phi->lhs, alpha) || eval_rec(g, phi->rhs, alpha);
        case FNode::Kind::Implies:
            return !eval_rec(g, phi->lhs, alpha) || eval_rec(g, phi->rhs, alpha);
        case FNode::Kind::Iff: return eval_rec(g, phi->lhs, alpha) == eval_rec(g, phi->rhs, alpha);
        case FNode::Kind::ExistsInd:
        case FNode::Kind::ForallInd: {
            bool want = phi->kind == FNode::Kind::ExistsInd;
            auto saved = alpha.individuals.find(phi->name) != alpha.individuals.end()
                             ? std::optional<size_t>(alpha.individuals[phi->name])
                             : std::nullopt;
            bool result = !want;
            for (size_t u = 0; u < g.size(); ++u) {
                alpha.individuals[phi->name] = u;
                if (eval_rec(g, phi->lhs, alpha) == want) { result = want; break; }
            }
            if (saved) alpha.individuals[phi->name] = *saved;
            else alpha.individuals.erase(phi->name);
            return result;
        }
        case FNode::Kind::ExistsSet:
        case FNode::Kind::ForallSet: {
            bool want = phi->kind == FNode::Kind::ExistsSet;
            auto saved = alpha.sets.count(phi->name)
                             ? std::optional<std::vector<bool>>(alpha.sets[phi->name])
                             : std::nullopt;
            bool result = !want;
            size_t n = g.size();
            if (n > 24) throw error("set quantifier on a graph too large for brute force");
            // lexicographic subset order over the sorted vertex ids
            for (uint64_t mask = 0; mask < (uint64_t(1) << n); ++mask) {
                std::vector<bool> bits(n, false);
                for (size_t i = 0; i < n; ++i) bits[i] = (mask >> i) & 1;
                alpha.sets[phi->name] = std::move(bits);
                if (eval_rec(g, phi->lhs, alpha) == want) { result = want; break; }
            }
            if (saved) alpha.sets[phi->name] = *saved;
            else alpha.sets.erase(phi->name);
            return result;
        }
    }
    return false;
}

}  // namespace detail

// Standard MSO semantics; set quantifiers range over all vertex subsets, so
// this is the desk-scale reference oracle everything else is checked against.
inline bool eval_formula(const LabeledGraph& g, const Formula& phi, const Assignment& alpha) {
    Assignment a = alpha;
    auto fv = free_vars(phi);
    for (auto& v : fv.individuals)
        if (!a.individuals.count(v)) throw error("uncovered free variable '" + v + "'");
    for (auto& v : fv.sets)
        if (!a.sets.count(v)) throw error("uncovered free set variable '" + v + "'");
    return detail::eval_rec(g, phi, a);
}

// ---- transformations --------------------------------------------------------

namespace detail {

inline std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
    if (!taken.count(base)) return base;
    for (int i = 0;; ++i) {
        std::string cand = base + std::to_string(i);
        if (!taken.count(cand)) return cand;
    }
}

inline std::set<std::string> all_names(const Formula& phi) {
    std::set<std::string> out;
    if (!phi) return out;
    if (!phi->name.empty()) out.insert(phi->name);
    if (!phi->a.empty()) out.insert(phi->a);
    if (!phi->b.empty()) out.insert(phi->b);
    for (auto& sub : {phi->lhs, phi->rhs})
        if (sub) {
            auto s = all_names(sub);
            out.insert(s.begin(), s.end());
        }
    return out;
}

}  // namespace detail

// phi has one free instance variable x; the result states that every
// P-vertex satisfies phi and every N-vertex falsifies it. Adds one rank.
inline Formula encode_examples_formula(const Formula& phi, const std::string& instance_var,
                                       const std::string& pos_label, const std::string& neg_label) {
    auto used = labels_used(phi);
    if (used.count(pos_label) || used.count(neg_label))
        throw error("example labels must be fresh in the formula");
    auto fv = free_vars(phi);
    if (!fv.individuals.count(instance_var))
        // still fine: the instance variable may not occur, e.g. phi == true
        (void)0;
    return f::forall(instance_var,
                     f::conj(f::implies(f::label(pos_label, instance_var), phi),
                             f::implies(f::label(neg_label, instance_var), f::neg(phi))));
}

// Binds the free individual variables y_1..y_l and replaces them by free set
// variables X_1..X_l that must be singletons. Adds l + 2 to the rank
// (vacuously for l = 0, where the formula is returned unchanged).
inline Formula singletonize(const Formula& phi, const std::vector<std::string>& ind_vars,
                            const std::vector<std::string>& set_vars) {
    if (ind_vars.size() != set_vars.size()) throw error("singletonize: arity mismatch");
    if (ind_vars.empty()) return phi;
    auto taken = detail::all_names(phi);
    for (auto& sv : set_vars) taken.insert(sv);
    std::string u = detail::fresh_name("sa", taken);
    std::string w = detail::fresh_name("sb", taken);
    std::vector<Formula> parts;
    for (size_t i = 0; i < ind_vars.size(); ++i) {
        // Sing(X_i, y_i): X_i contains y_i and at most one element
        auto sing = f::conj(
            f::member(set_vars[i], ind_vars[i]),
            f::forall(u, f::forall(w, f::implies(f::conj(f::member(set_vars[i], u),
                                                         f::member(set_vars[i], w)),
                                                 f::equal(u, w)))));
        parts.push_back(sing);
    }
    parts.push_back(phi);
    Formula body = f::conj_all(parts);
    for (auto it = ind_vars.rbegin(); it != ind_vars.rend(); ++it) body = f::exists(*it, body);
    return body;
}

namespace detail {

inline Formula pin_rewrite(const Formula& phi, const std::string& x, const std::string& here_label,
                           const std::string& nbr_label, std::set<std::string>& taken) {
    switch (phi->kind) {
        case FNode::Kind::True:
        case FNode::Kind::False:
            return phi;
        case FNode::Kind::Equal: {
            bool la = phi->a == x, lb = phi->b == x;
            if (la && lb) throw error("pin_vertex_formula: atom x = x not supported");
            if (la) return f::label(here_label, phi->b);
            if (lb) return f::label(here_label, phi->a);
            return phi;
        }
        case FNode::Kind::Edge: {
            bool la = phi->a == x, lb = phi->b == x;
            if (la && lb) return f::falsity();  // no self-loops
            if (la) return f::label(nbr_label, phi->b);
            if (lb) return f::label(nbr_label, phi->a);
            return phi;
        }
        case FNode::Kind::Label:
            if (phi->a == x) {
                // P(x) becomes: the pinned vertex carries P
                std::string z = fresh_name("pz", taken);
                taken.insert(z);
                return f::exists(z, f::conj(f::label(here_label, z), f::label(phi->name, z)));
            }
            return phi;
        case FNode::Kind::SetMember:
            if (phi->a == x) {
                std::string z = fresh_name("pz", taken);
                taken.insert(z);
                return f::exists(z, f::conj(f::label(here_label, z), f::member(phi->name, z)));
            }
            return phi;
        case FNode::Kind::Not:
            return f::neg(pin_rewrite(phi->lhs, x, here_label, nbr_label, taken));
        case FNode::Kind::And:
        case FNode::Kind::Or:
        case FNode::Kind::Implies:
        case FNode::Kind::Iff:
            return f::mk({phi->kind, "", "", "",
                          pin_rewrite(phi->lhs, x, here_label, nbr_label, taken),
                          pin_rewrite(phi->rhs, x, here_label, nbr_label, taken)});
        case FNode::Kind::ExistsInd:
        case FNode::Kind::ForallInd:
        case FNode::Kind::ExistsSet:
        case FNode::Kind::ForallSet:
            if (phi->name == x) return phi;  // shadowed; x does not occur below
            return f::mk({phi->kind, phi->name, "", "",
                          pin_rewrite(phi->lhs, x, here_label, nbr_label, taken), nullptr});
    }
    return phi;
}

}  // namespace detail

// Turns psi(x) into a sentence over the expansion that marks the pinned
// vertex with here_label and its neighborhood with nbr_label. Label and
// set-membership atoms on x are routed through the mark, costing one extra
// quantifier when they occur.
inline Formula pin_vertex_formula(const Formula& psi, const std::string& x,
                                  const std::string& here_label, const std::string& nbr_label) {
    auto taken = detail::all_names(psi);
    taken.insert(here_label);
    taken.insert(nbr_label);
    return detail::pin_rewrite(psi, x, here_label, nbr_label, taken);
}

// deg-at-least / deg-exactly formulas from the weighted-satisfiability
// construction; rank k for >=, rank k+1 for ==.
inline Formula deg_formula(int k, bool exactly, const std::string& var = "x1") {
    if (k < 1) throw error("deg_formula: k >= 1 required");
    auto deg_ge = [&](int kk) {
        std::vector<std::string> ys;
        for (int i = 1; i <= kk; ++i) ys.push_back("d" + std::to_string(i));
        std::vector<Formula> parts;
        for (int i = 0; i < kk; ++i)
            for (int j = i + 1; j < kk; ++j) parts.push_back(f::neg(f::equal(ys[i], ys[j])));
        for (int i = 0; i < kk; ++i) parts.push_back(f::edge(var, ys[i]));
        Formula body = f::conj_all(parts);
        for (auto it = ys.rbegin(); it != ys.rend(); ++it) body = f::exists(*it, body);
        return body;
    };
    if (!exactly) return deg_ge(k);
    return f::conj(deg_ge(k), f::neg(deg_ge(k + 1)));
}

// ---- formula bank -----------------------------------------------------------

// Deterministic, seedless test bank: syntactically distinct formulas of rank
// at most q over instance variables x1..xk, parameter variables y1..yl, and
// the given vocabulary, truncated at `budget`. Atoms and their negations come
// first, then one representative per connective and quantifier kind, then a
// breadth-first combination sweep.
inline std::vector<Formula> formula_bank(const std::vector<std::string>& vocab, int q, int k,
                                         int l, size_t budget) {
    std::vector<Formula> out;
    std::set<std::string> seen;
    auto push = [&](const Formula& phi) {
        if (out.size() >= budget) return;
        if (!seen.insert(print_formula(phi)).second) return;
        out.push_back(phi);
    };
    if (budget == 0) return out;

    std::vector<std::string> vars;
    for (int i = 1; i <= k; ++i) vars.push_back("x" + std::to_string(i));
    for (int i = 1; i <= l; ++i) vars.push_back("y" + std::to_string(i));

    std::vector<Formula> atoms;
    atoms.push_back(f::truth());
    atoms.push_back(f::falsity());
    for (size_t i = 0; i < vars.size(); ++i)
        for (size_t j = 0; j < vars.size(); ++j) {
            if (i < j) atoms.push_back(f::equal(vars[i], vars[j]));
            if (i != j) atoms.push_back(f::edge(vars[i], vars[j]));
        }
    for (auto& lbl : vocab)
        for (auto& v : vars) atoms.push_back(f::label(lbl, v));
    for (auto& a : atoms) push(a);
    for (auto& a : atoms)
        if (a->kind != FNode::Kind::True && a->kind != FNode::Kind::False) push(f::neg(a));

    // quantified patterns: common neighbor, some neighbor, dominating, set membership
    if (q >= 1) {
        for (size_t i = 0; i < vars.size(); ++i) {
            for (size_t j = 0; j < vars.size(); ++j) {
                if (i == j) continue;
                push(f::exists("z1", f::conj(f::edge(vars[i], "z1"), f::edge(vars[j], "z1"))));
            }
            push(f::exists("z1", f::edge(vars[i], "z1")));
            push(f::forall("z1", f::implies(f::edge(vars[i], "z1"), f::neg(f::equal(vars[i], "z1")))));
            for (auto& lbl : vocab)
                push(f::exists("z1", f::conj(f::edge(vars[i], "z1"), f::label(lbl, "z1"))));
            push(f::exists_set("Z1", f::member("Z1", vars[i])));
            push(f::forall_set("Z1", f::member("Z1", vars[i])));
        }
        if (vars.empty()) {
            push(f::exists("z1", f::equal("z1", "z1")));
            push(f::exists_set("Z1", f::exists("z1", f::member("Z1", "z1"))));
        }
    }
    if (q >= 2) {
        for (size_t i = 0; i < vars.size(); ++i) {
            push(f::forall("z1", f::exists("z2", f::conj(f::edge("z1", "z2"),
                                                         f::edge(vars[i], "z1")))));
            push(f::exists_set("Z1", f::conj(f::member("Z1", vars[i]),
                                             f::forall("z1", f::implies(f::edge(vars[i], "z1"),
                                                                        f::neg(f::member("Z1", "z1")))))));
        }
        push(f::forall("z1", f::exists("z2", f::edge("z1", "z2"))));
        push(f::exists("z1", f::forall("z2", f::implies(f::neg(f::equal("z1", "z2")),
                                                        f::edge("z1", "z2")))));
    }

    // connective closure over what we have so far, breadth first
    size_t first = 0;
    while (out.size() < budget) {
        size_t snapshot = out.size();
        for (size_t i = first; i < snapshot && out.size() < budget; ++i) {
            for (size_t j = 0; j < std::min<size_t>(snapshot, 12) && out.size() < budget; ++j) {
                push(f::conj(out[i], out[j]));
                push(f::disj(out[i], out[j]));
                push(f::implies(out[i], out[j]));
                push(f::iff(out[i], out[j]));
            }
            if (quantifier_rank(out[i]) < q) {
                std::string z = detail::fresh_name("z1", detail::all_names(out[i]));
                push(f::exists(z, f::conj(f::edge(vars.empty() ? z : vars[0], z), out[i])));
                push(f::forall(z, out[i]));
            }
        }
        if (out.size() == snapshot) break;  // nothing new; bank saturated
        first = snapshot > 24 ? snapshot - 24 : 0;
    }
    return out;
}

}  // namespace msolearn
