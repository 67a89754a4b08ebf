#include <catch2/catch_amalgamated.hpp>

#include <msolearn/formula.hpp>

#include "test_util.hpp"

using namespace msolearn;
using testutil::fig1_graph;

TEST_CASE("parsing basics", "[formula]") {
    auto phi = parse_formula("ex x. E(x,y)", {});
    REQUIRE(phi->kind == FNode::Kind::ExistsInd);
    REQUIRE(phi->name == "x");
    REQUIRE(phi->lhs->kind == FNode::Kind::Edge);
    auto fv = free_vars(phi);
    REQUIRE(fv.individuals == std::set<std::string>{"y"});
    REQUIRE(fv.sets.empty());

    auto psi = parse_formula("all z1. all z2. (E(z1,z2) -> !(Z(z1) <-> Z(z2)))", {}, {"Z"});
    REQUIRE(quantifier_rank(psi) == 2);
    REQUIRE(free_vars(psi).sets == std::set<std::string>{"Z"});

    REQUIRE_THROWS_AS(parse_formula("ex x. P(x", {"P"}), parse_error);
    REQUIRE_THROWS_AS(parse_formula("P(x)", {}), parse_error);           // unknown label
    REQUIRE_THROWS_AS(parse_formula("ex x. ex x. E(x,x)", {}), parse_error);  // rebinding
}

TEST_CASE("quantifier rank", "[formula]") {
    auto phi = testutil::bipartite_hypothesis_formula();
    REQUIRE(quantifier_rank(phi) == 3);
    REQUIRE(quantifier_rank(parse_formula("E(x,y)", {})) == 0);
    REQUIRE(set_quantifier_nesting(phi) == 1);
}

TEST_CASE("print-parse round trip on a bank", "[formula]") {
    auto bank = formula_bank({"A", "B"}, 2, 2, 1, 120);
    REQUIRE(bank.size() == 120);
    for (auto& phi : bank) {
        auto again = parse_formula(print_formula(phi), {"A", "B"});
        REQUIRE(formula_equal(phi, again));
    }
}

TEST_CASE("bank contents", "[formula]") {
    auto b0 = formula_bank({"A"}, 0, 2, 0, 100);
    std::set<std::string> printed;
    for (auto& phi : b0) printed.insert(print_formula(phi));
    REQUIRE(printed.count("E(x1,x2)"));
    REQUIRE(printed.count("x1 = x2"));
    REQUIRE(printed.count("A(x1)"));
    for (auto& phi : b0) REQUIRE(quantifier_rank(phi) == 0);

    auto b1 = formula_bank({}, 1, 1, 1, 50);
    bool has_common_neighbor = false;
    for (auto& phi : b1)
        if (print_formula(phi) == "ex z1. (E(x1,z1) & E(y1,z1))") has_common_neighbor = true;
    REQUIRE(has_common_neighbor);

    REQUIRE(formula_bank({"A"}, 2, 1, 1, 0).empty());
}

TEST_CASE("evaluation on the running example", "[formula][eval]") {
    auto g = fig1_graph();
    auto phi = testutil::bipartite_hypothesis_formula();
    Assignment a;
    a.individuals["x1"] = g.index_of("v1");
    a.individuals["y1"] = g.index_of("v2");
    REQUIRE(eval_formula(g, phi, a));
    a.individuals["x1"] = g.index_of("v4");
    REQUIRE_FALSE(eval_formula(g, phi, a));

    REQUIRE(eval_formula(g, parse_formula("true", {}), {}));
    Assignment bad;
    REQUIRE_THROWS_AS(eval_formula(g, parse_formula("E(x,y)", {}), bad), error);
}

TEST_CASE("vocabulary extension is monotone", "[formula][eval]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = testutil::random_graph(rng, 2 + rng() % 4, 1);
        auto g2 = g;
        g2.set_label("Unused", 0, false);
        auto bank = formula_bank(g.label_names(), 1, 1, 0, 25);
        for (auto& phi : bank) {
            Assignment a;
            a.individuals["x1"] = rng() % g.size();
            REQUIRE(eval_formula(g, phi, a) == eval_formula(g2, phi, a));
        }
    }
}

TEST_CASE("example encoding", "[formula][transform]") {
    auto phi = testutil::bipartite_hypothesis_formula();
    auto enc = encode_examples_formula(phi, "x1", "P", "N");
    REQUIRE(quantifier_rank(enc) == quantifier_rank(phi) + 1);

    // encoding of phi == true collapses to: no vertex is negative
    auto trivial = encode_examples_formula(parse_formula("true", {}), "x1", "P", "N");
    auto expected = parse_formula("all x1. !N(x1)", {"N"});
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = testutil::random_graph(rng, 1 + rng() % 4, 0);
        if (rng() % 2) g.set_label("N", rng() % g.size());
        if (rng() % 2) g.set_label("P", rng() % g.size());
        REQUIRE(eval_formula(g, trivial, {}) == eval_formula(g, expected, {}));
    }

    // the spec forbids reusing the fresh labels
    auto uses_p = parse_formula("P(x1)", {"P"});
    REQUIRE_THROWS_AS(encode_examples_formula(uses_p, "x1", "P", "N"), error);

    // on the running example: G_S with w = v2 is consistent
    auto g = fig1_graph();
    for (auto& [v, pos] : std::vector<std::pair<std::string, bool>>{
             {"v1", true}, {"v3", true}, {"v4", false}, {"v5", false}})
        g.set_label(pos ? "P" : "N", g.index_of(v));
    Assignment a;
    a.individuals["y1"] = g.index_of("v2");
    REQUIRE(eval_formula(g, enc, a));
    a.individuals["y1"] = g.index_of("v4");
    REQUIRE_FALSE(eval_formula(g, enc, a));
}

TEST_CASE("singletonization", "[formula][transform]") {
    auto phi = parse_formula("E(y1,y2)", {});
    REQUIRE(formula_equal(singletonize(phi, {}, {}), phi));

    auto s = singletonize(phi, {"y1", "y2"}, {"X1", "X2"});
    REQUIRE(quantifier_rank(s) == quantifier_rank(phi) + 2 + 2);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        auto g = testutil::random_graph(rng, 2 + rng() % 4, 1);
        size_t a = rng() % g.size(), b = rng() % g.size();
        Assignment ind;
        ind.individuals["y1"] = a;
        ind.individuals["y2"] = b;
        Assignment sets;
        std::vector<bool> sa(g.size(), false), sb(g.size(), false);
        sa[a] = true;
        sb[b] = true;
        sets.sets["X1"] = sa;
        sets.sets["X2"] = sb;
        REQUIRE(eval_formula(g, phi, ind) == eval_formula(g, s, sets));

        // non-singleton arguments always falsify
        Assignment bad;
        bad.sets["X1"] = std::vector<bool>(g.size(), false);
        bad.sets["X2"] = sb;
        REQUIRE_FALSE(eval_formula(g, s, bad));
    }
}

TEST_CASE("vertex pinning", "[formula][transform]") {
    auto psi = parse_formula("ex y. E(x,y)", {});
    auto pinned = pin_vertex_formula(psi, "x", "Iv", "Nv");
    REQUIRE(print_formula(pinned) == "ex y. Nv(y)");

    auto no_x = parse_formula("ex y. ex w. E(y,w)", {});
    REQUIRE(formula_equal(pin_vertex_formula(no_x, "x", "Iv", "Nv"), no_x));

    auto self_eq = parse_formula("x = x", {});
    REQUIRE_THROWS_AS(pin_vertex_formula(self_eq, "x", "Iv", "Nv"), error);

    std::mt19937_64 rng(13);
    auto bank = formula_bank({"A"}, 2, 1, 0, 40);
    for (int trial = 0; trial < 120; ++trial) {
        auto g = testutil::random_graph(rng, 2 + rng() % 4, 1);
        auto& psi2 = bank[rng() % bank.size()];
        size_t v = rng() % g.size();
        auto gv = g;
        gv.set_label("Iv", v);
        for (size_t u = 0; u < g.size(); ++u)
            if (g.adjacent(v, u)) gv.set_label("Nv", u);
        gv.set_label("Iv", v, true);
        Assignment a;
        a.individuals["x1"] = v;
        auto sentence = pin_vertex_formula(psi2, "x1", "Iv", "Nv");
        REQUIRE(free_vars(sentence).individuals.empty());
        REQUIRE(eval_formula(g, psi2, a) == eval_formula(gv, sentence, {}));
    }
}

TEST_CASE("degree formulas", "[formula][transform]") {
    // star K_{1,3}: center c, leaves l1..l3
    auto star = LabeledGraph::from_parts({"c", "l1", "l2", "l3"},
                                         {{"c", "l1"}, {"c", "l2"}, {"c", "l3"}}, {});
    auto deg3 = deg_formula(3, true);
    REQUIRE(quantifier_rank(deg3) == 4);
    Assignment a;
    a.individuals["x1"] = star.index_of("c");
    REQUIRE(eval_formula(star, deg3, a));
    a.individuals["x1"] = star.index_of("l1");
    REQUIRE_FALSE(eval_formula(star, deg3, a));

    auto iso = LabeledGraph::from_parts({"u"}, {}, {});
    auto deg1 = deg_formula(1, false);
    Assignment b;
    b.individuals["x1"] = 0;
    REQUIRE_FALSE(eval_formula(iso, deg1, b));

    REQUIRE_THROWS_AS(deg_formula(0, false), error);
}
