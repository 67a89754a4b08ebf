#include <catch2/catch_amalgamated.hpp>

#include <msolearn/cwx.hpp>
#include <msolearn/graph.hpp>

#include "test_util.hpp"

using namespace msolearn;

TEST_CASE("graph json round trip", "[graph]") {
    auto g = testutil::fig1_graph();
    auto j = g.to_json();
    auto g2 = LabeledGraph::from_json(j);
    REQUIRE(g == g2);
    REQUIRE(g.size() == 6);
    REQUIRE(g.edge_count() == 6);

    REQUIRE_THROWS_AS(LabeledGraph::from_parts({"a", "a"}, {}, {}), error);
    REQUIRE_THROWS_AS(LabeledGraph::from_parts({"a"}, {{"a", "a"}}, {}), error);
}

TEST_CASE("expression evaluation basics", "[cwx]") {
    auto e = parse_cwx("(v v1 A)");
    auto g = eval_cexpr(e);
    REQUIRE(g.size() == 1);
    REQUIRE(g.has_label("A", 0));

    auto edge = parse_cwx("(eta A B (u (v v1 A) (v v2 B)))");
    auto ge = eval_cexpr(edge);
    REQUIRE(ge.edge_count() == 1);
    REQUIRE(ge.adjacent(ge.index_of("v1"), ge.index_of("v2")));

    // print/parse round trip
    REQUIRE(print_cwx(parse_cwx(print_cwx(edge))) == print_cwx(edge));
}

TEST_CASE("ordered union simulates plain union", "[cwx]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto a = gen_cograph(1 + rng() % 4, rng());
        auto b = gen_tree(1 + rng() % 4, rng());
        // rename b's vertices to avoid id clashes
        CwExpr b2 = b;
        for (auto& n : b2.nodes)
            if (n.kind == CwExpr::Kind::Base) n.vertex = "w" + n.vertex;
        auto plain = CwExpr::unite(a, b2);
        auto simulated = CwExpr::del(
            kLeftMark, CwExpr::del(kRightMark, CwExpr::ordered_unite(a, b2)));
        REQUIRE(eval_cexpr(plain) == eval_cexpr(simulated));
    }
}

TEST_CASE("well-formedness diagnostics", "[cwx]") {
    auto dup = parse_cwx("(u (v v1) (v v1))");
    auto d1 = check_wellformed(dup);
    REQUIRE_FALSE(d1.empty());

    auto same = parse_cwx("(eta A A (v v1 A))");
    REQUIRE_FALSE(check_wellformed(same).empty());

    auto missing = parse_cwx("(del P (v v1 A))");
    REQUIRE_FALSE(check_wellformed(missing).empty());

    auto fine = testutil::fig1_expr();
    REQUIRE(check_wellformed(fine).empty());
    REQUIRE(eval_cexpr(fine) == testutil::fig1_graph());
}

TEST_CASE("trivial expression round trip", "[cwx]") {
    auto single = LabeledGraph::from_parts({"a"}, {}, {});
    auto es = trivial_expression(single);
    int bases = 0;
    for (auto& n : es.nodes)
        if (n.kind == CwExpr::Kind::Base) ++bases;
    REQUIRE(bases == 1);

    auto tri = LabeledGraph::from_parts({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}, {"a", "c"}}, {});
    auto et = trivial_expression(tri);
    int etas = 0;
    for (auto& n : et.nodes)
        if (n.kind == CwExpr::Kind::Eta) ++etas;
    REQUIRE(etas == 3);
    REQUIRE(eval_cexpr(et) == tri);

    REQUIRE(eval_cexpr(trivial_expression(testutil::fig1_graph())) == testutil::fig1_graph());

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = testutil::random_graph(rng, 1 + rng() % 10, 2);
        auto e = trivial_expression(g);
        REQUIRE(check_wellformed(e).empty());
        REQUIRE(eval_cexpr(e) == g);
    }
}

TEST_CASE("vertex marking", "[cwx]") {
    auto e = testutil::fig1_expr();
    auto marked = mark_vertex(e, "v3", "Pin");
    REQUIRE(check_wellformed(marked).empty());
    auto g = eval_cexpr(marked);
    REQUIRE(g.label_members("Pin") == std::vector<size_t>{g.index_of("v3")});

    // marking twice with distinct labels commutes
    auto m12 = mark_vertex(mark_vertex(e, "v1", "L1"), "v2", "L2");
    auto m21 = mark_vertex(mark_vertex(e, "v2", "L2"), "v1", "L1");
    REQUIRE(eval_cexpr(m12) == eval_cexpr(m21));

    REQUIRE_THROWS_AS(mark_vertex(e, "nope", "L"), error);
    REQUIRE_THROWS_AS(mark_vertex(marked, "v1", "Pin"), error);
}

TEST_CASE("training label encoding", "[cwx]") {
    auto e = testutil::fig1_expr();
    std::vector<std::pair<std::string, bool>> s = {
        {"v1", true}, {"v3", true}, {"v4", false}, {"v5", false}};
    auto g = eval_cexpr(encode_training_labels(e, s, "P", "N"));
    REQUIRE(g.label_members("P") ==
            std::vector<size_t>{g.index_of("v1"), g.index_of("v3")});
    REQUIRE(g.label_members("N") ==
            std::vector<size_t>{g.index_of("v4"), g.index_of("v5")});

    auto empty = eval_cexpr(encode_training_labels(e, {}, "P", "N"));
    REQUIRE(empty.label_members("P").empty());
    REQUIRE(empty.label_members("N").empty());

    auto dup = eval_cexpr(encode_training_labels(e, {{"v2", true}, {"v2", true}}, "P", "N"));
    REQUIRE(dup.label_members("P") == std::vector<size_t>{dup.index_of("v2")});
}

TEST_CASE("generators", "[cwx][gen]") {
    for (uint64_t seed : {1ull, 7ull, 42ull}) {
        for (size_t n : {1, 2, 4, 9}) {
            auto c = gen_cograph(n, seed);
            REQUIRE(check_wellformed(c).empty());
            auto gc = eval_cexpr(c);
            REQUIRE(gc.size() == n);
            for (auto& node : c.nodes) {
                for (auto& l : node.labels) REQUIRE((l == "A" || l == "B"));
                if (!node.p.empty()) REQUIRE((node.p == "A" || node.p == "B"));
                if (!node.q.empty()) REQUIRE((node.q == "A" || node.q == "B"));
            }
            // determinism
            REQUIRE(print_cwx(gen_cograph(n, seed)) == print_cwx(c));

            auto t = gen_tree(n, seed);
            REQUIRE(check_wellformed(t).empty());
            auto gt = eval_cexpr(t);
            REQUIRE(gt.size() == n);
            REQUIRE(gt.edge_count() == n - 1);
            // connectivity via simple BFS
            std::vector<bool> seen(n, false);
            std::vector<size_t> stack = {0};
            seen[0] = true;
            size_t count = 1;
            while (!stack.empty()) {
                size_t u = stack.back();
                stack.pop_back();
                for (size_t w = 0; w < n; ++w)
                    if (gt.adjacent(u, w) && !seen[w]) {
                        seen[w] = true;
                        ++count;
                        stack.push_back(w);
                    }
            }
            REQUIRE(count == n);
        }
    }

    // single-vertex cases
    REQUIRE(eval_cexpr(gen_cograph(1, 3)).size() == 1);
    auto e2 = gen_tree(2, 3);
    auto g2 = eval_cexpr(e2);
    REQUIRE(g2.edge_count() == 1);
}
