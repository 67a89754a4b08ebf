#include <catch2/catch_amalgamated.hpp>

#include <msolearn/learners.hpp>

#include "test_util.hpp"

using namespace msolearn;

namespace {

TrainingSequence make_seq(const std::vector<std::pair<std::vector<std::string>, bool>>& ex) {
    TrainingSequence s;
    s.examples = ex;
    s.k = ex.empty() ? 1 : int(ex[0].first.size());
    return s;
}

TrainingSequence fig1_training() {
    return make_seq({{{"v1"}, true}, {{"v3"}, true}, {{"v4"}, false}, {{"v5"}, false}});
}

// Exhaustive check: does any parameter tuple make the type map separate the
// positive from the negative examples?
bool brute_separable(TypeEngine& eng, const LabeledGraph& g,
                     const std::vector<std::vector<std::string>>& a,
                     const std::vector<bool>& sigma, int q, int ell, int budget) {
    size_t n = g.size();
    uint64_t total = 1;
    for (int j = 0; j < ell; ++j) total *= n;
    auto ctx = eng.make_ctx(g);
    for (uint64_t code = 0; code < total; ++code) {
        std::vector<uint32_t> w(ell);
        uint64_t c = code;
        for (int j = 0; j < ell; ++j) {
            w[j] = uint32_t(c % n);
            c /= n;
        }
        std::map<TypeId, bool> seen;
        bool ok = true;
        for (size_t i = 0; i < a.size() && ok; ++i) {
            std::vector<uint32_t> ind;
            for (auto& v : a[i]) ind.push_back(uint32_t(g.index_of(v)));
            ind.insert(ind.end(), w.begin(), w.end());
            TypeId t = eng.compute_type(ctx, ind, {}, q, budget);
            auto [it, fresh] = seen.emplace(t, sigma[i]);
            if (!fresh && it->second != bool(sigma[i])) ok = false;
        }
        if (ok) return true;
    }
    return false;
}

// Minimum empirical error over all parameter tuples and type labelings.
Rational brute_min_err(TypeEngine& eng, const LabeledGraph& g,
                       const std::vector<std::vector<std::string>>& a,
                       const std::vector<bool>& sigma, int q, int ell, int budget) {
    size_t n = g.size(), m = a.size();
    uint64_t total = 1;
    for (int j = 0; j < ell; ++j) total *= n;
    auto ctx = eng.make_ctx(g);
    size_t best = 0;
    for (uint64_t code = 0; code < total; ++code) {
        std::vector<uint32_t> w(ell);
        uint64_t c = code;
        for (int j = 0; j < ell; ++j) {
            w[j] = uint32_t(c % n);
            c /= n;
        }
        std::map<TypeId, std::pair<size_t, size_t>> votes;
        for (size_t i = 0; i < m; ++i) {
            std::vector<uint32_t> ind;
            for (auto& v : a[i]) ind.push_back(uint32_t(g.index_of(v)));
            ind.insert(ind.end(), w.begin(), w.end());
            TypeId t = eng.compute_type(ctx, ind, {}, q, budget);
            (sigma[i] ? votes[t].first : votes[t].second)++;
        }
        size_t agree = 0;
        for (auto& [_, pn] : votes) agree += std::max(pn.first, pn.second);
        best = std::max(best, agree);
    }
    return Rational(static_cast<long long>(m - best), static_cast<long long>(m));
}

}  // namespace

TEST_CASE("training sequence parsing", "[learners]") {
    auto s = TrainingSequence::parse("v1 v2 +\n# comment\nv3 v4 -\n");
    REQUIRE(s.k == 2);
    REQUIRE(s.size() == 2);
    REQUIRE(s.examples[1].second == false);
    REQUIRE_THROWS_AS(TrainingSequence::parse("v1 ?\n"), parse_error);
    REQUIRE_THROWS_AS(TrainingSequence::parse("v1 v2 +\nv3 -\n"), error);
}

TEST_CASE("running example learns with a bank", "[learners][bank]") {
    TypeEngine eng;
    auto e = testutil::fig1_expr();
    auto phi = testutil::bipartite_hypothesis_formula();
    auto s = fig1_training();
    auto out = learn_1d(eng, e, s, 3, 1, 1, {phi});
    REQUIRE(out.mode == "bank");
    REQUIRE(out.hypothesis.has_value());
    REQUIRE(out.hypothesis->formula_text.has_value());

    // classifications match all four labels
    auto preds = classify_many(eng, e, *out.hypothesis, s.tuples());
    for (size_t i = 0; i < s.size(); ++i) REQUIRE(preds[i] == s.examples[i].second);

    // the provenance formula agrees with the type-set classification everywhere
    auto g = eval_cexpr(e);
    auto prov = parse_formula(*out.hypothesis->formula_text, {g.label_names().begin(),
                                                             g.label_names().end()});
    for (size_t v = 0; v < g.size(); ++v) {
        Assignment asg;
        asg.individuals["x1"] = v;
        asg.individuals["y1"] = g.index_of(out.hypothesis->params[0]);
        bool by_type = classify(eng, e, *out.hypothesis, {g.id(v)});
        REQUIRE(by_type == eval_formula(g, prov, asg));
    }

    // determinism of repeated classification
    REQUIRE(classify(eng, e, *out.hypothesis, {"v3"}) == true);
    REQUIRE(classify(eng, e, *out.hypothesis, {"v3"}) == true);
}

TEST_CASE("contradictory examples are rejected", "[learners]") {
    TypeEngine eng;
    auto e = gen_cograph(4, 5);
    auto s = make_seq({{{"v1"}, true}, {{"v1"}, false}});
    auto out = learn_1d(eng, e, s, 1, 1, 0);
    REQUIRE(out.mode == "types");
    REQUIRE_FALSE(out.hypothesis.has_value());
}

TEST_CASE("type-mode existence equals exhaustive search", "[learners][oracle]") {
    TypeEngine eng;
    std::mt19937_64 rng(17);
    int done = 0;
    while (done < 30) {
        auto e = testutil::random_expr(rng, 1 + rng() % 6);
        auto g = eval_cexpr(e);
        int q = 1 + int(rng() % 2);
        int ell = int(rng() % 2);
        int m = 1 + int(rng() % 4);
        TrainingSequence s;
        s.k = 1;
        for (int i = 0; i < m; ++i)
            s.examples.emplace_back(std::vector<std::string>{g.id(rng() % g.size())},
                                    rng() % 2 == 0);
        auto out = learn_1d(eng, e, s, q, ell, 0);
        bool brute = brute_separable(eng, g, s.tuples(), s.labels(), q, ell, 0);
        REQUIRE(out.hypothesis.has_value() == brute);
        if (out.hypothesis) {
            auto preds = classify_many(eng, e, *out.hypothesis, s.tuples());
            for (size_t i = 0; i < s.size(); ++i) REQUIRE(preds[i] == s.examples[i].second);
        }
        ++done;
    }
}

TEST_CASE("witness extraction on the running example", "[learners][hd]") {
    TypeEngine eng;
    auto e = testutil::fig1_expr();
    auto phi = testutil::bipartite_hypothesis_formula();
    auto s = fig1_training();
    auto w = learn_hd_consistent(eng, e, s.tuples(), s.labels(), phi, 3, 1, 1, 1);
    REQUIRE(w.has_value());
    // v1, v2, v3 are all valid; the pinning loop returns the least one
    REQUIRE((*w)[0] == "v1");
    auto g = eval_cexpr(e);
    for (size_t i = 0; i < s.size(); ++i) {
        Assignment asg;
        asg.individuals["x1"] = g.index_of(s.examples[i].first[0]);
        asg.individuals["y1"] = g.index_of((*w)[0]);
        REQUIRE(eval_formula(g, phi, asg) == s.examples[i].second);
    }
}

TEST_CASE("zero parameters means the formula must already fit", "[learners][hd]") {
    TypeEngine eng;
    auto e = gen_tree(4, 11);
    auto g = eval_cexpr(e);
    auto phi = parse_formula("ex z1. E(x1,z1)", {});
    std::vector<std::vector<std::string>> a = {{g.id(0)}};
    for (bool positive : {true, false}) {
        auto w = learn_hd_consistent(eng, e, a, {positive}, phi, 1, 1, 0, 0);
        Assignment asg;
        asg.individuals["x1"] = 0;
        bool holds = eval_formula(g, phi, asg);
        REQUIRE(w.has_value() == (holds == positive));
        if (w) REQUIRE(w->empty());
    }
}

TEST_CASE("hd witnesses verify against exhaustive search", "[learners][hd][oracle]") {
    TypeEngine eng;
    std::mt19937_64 rng(29);
    int done = 0;
    while (done < 25) {
        auto e = testutil::random_expr(rng, 2 + rng() % 5);
        auto g = eval_cexpr(e);
        size_t n = g.size();
        int q = 1 + int(rng() % 2);
        int k = 2;
        int ell = int(rng() % 3);
        int m = 1 + int(rng() % 3);
        auto bank = formula_bank(g.label_names(), q, k, ell, 18);
        auto& phi = bank[rng() % bank.size()];
        if (set_quantifier_nesting(phi) > 0) continue;
        std::vector<std::vector<std::string>> a;
        std::vector<bool> sigma;
        for (int i = 0; i < m; ++i) {
            a.push_back({g.id(rng() % n), g.id(rng() % n)});
            sigma.push_back(rng() % 2 == 0);
        }
        auto w = learn_hd_consistent(eng, e, a, sigma, phi, q, k, ell, 0);

        // exhaustive witness search through the evaluation oracle
        uint64_t total = 1;
        for (int j = 0; j < ell; ++j) total *= n;
        bool brute = false;
        for (uint64_t code = 0; code < total && !brute; ++code) {
            uint64_t c = code;
            Assignment base;
            for (int j = 0; j < ell; ++j) {
                base.individuals["y" + std::to_string(j + 1)] = size_t(c % n);
                c /= n;
            }
            bool all = true;
            for (size_t i = 0; i < a.size() && all; ++i) {
                Assignment asg = base;
                asg.individuals["x1"] = g.index_of(a[i][0]);
                asg.individuals["x2"] = g.index_of(a[i][1]);
                if (eval_formula(g, phi, asg) != bool(sigma[i])) all = false;
            }
            brute = all;
        }
        REQUIRE(w.has_value() == brute);
        if (w) {
            for (size_t i = 0; i < a.size(); ++i) {
                Assignment asg;
                asg.individuals["x1"] = g.index_of(a[i][0]);
                asg.individuals["x2"] = g.index_of(a[i][1]);
                for (int j = 0; j < ell; ++j)
                    asg.individuals["y" + std::to_string(j + 1)] = g.index_of((*w)[j]);
                REQUIRE(eval_formula(g, phi, asg) == bool(sigma[i]));
            }
        }
        ++done;
    }
}

TEST_CASE("synthesis verifies and matches bank availability", "[learners][synth][oracle]") {
    TypeEngine eng;
    std::mt19937_64 rng(43);
    int done = 0;
    while (done < 20) {
        auto e = testutil::random_expr(rng, 2 + rng() % 5);
        auto g = eval_cexpr(e);
        int q = 1;
        int k = 1 + int(rng() % 2);
        int ell = int(rng() % 2);
        int m = 1 + int(rng() % 3);
        TrainingSequence s;
        s.k = k;
        for (int i = 0; i < m; ++i) {
            std::vector<std::string> t;
            for (int j = 0; j < k; ++j) t.push_back(g.id(rng() % g.size()));
            s.examples.emplace_back(t, rng() % 2 == 0);
        }
        auto h = synthesize_hypothesis(eng, e, s, q, k, ell, 0);
        if (h) {
            auto preds = classify_many(eng, e, *h, s.tuples());
            for (size_t i = 0; i < s.size(); ++i) REQUIRE(preds[i] == s.examples[i].second);
        } else {
            // no bank formula of rank q can be consistent either
            auto bank = formula_bank(g.label_names(), q, k, ell, 15);
            for (auto& phi : bank) {
                if (set_quantifier_nesting(phi) > 0) continue;
                REQUIRE_FALSE(
                    phi_consistent(eng, e, s.tuples(), s.labels(), phi, q, ell, 0));
            }
        }
        // identical tuples with clashing labels are never consistent
        if (m >= 2) {
            TrainingSequence bad;
            bad.k = k;
            bad.examples = {{s.examples[0].first, true}, {s.examples[0].first, false}};
            REQUIRE_FALSE(synthesize_hypothesis(eng, e, bad, q, k, ell, 0).has_value());
        }
        ++done;
    }
}

TEST_CASE("sample complexity arithmetic", "[learners][pac]") {
    REQUIRE(sample_complexity(3, 0.1, 0.1, 8.0) == 4243);
    REQUIRE(sample_complexity(0, 0.5, 0.5, 1.0) == 3);
    REQUIRE(sample_complexity(4, 0.1, 0.1, 8.0) >= sample_complexity(3, 0.1, 0.1, 8.0));
    REQUIRE(sample_complexity(3, 0.05, 0.1, 8.0) >= sample_complexity(3, 0.1, 0.1, 8.0));
    REQUIRE(sample_complexity(3, 0.1, 0.05, 8.0) >= sample_complexity(3, 0.1, 0.1, 8.0));
    REQUIRE_THROWS_AS(sample_complexity(3, 1.5, 0.1, 8.0), error);
}

TEST_CASE("erm on separable and contradictory samples", "[learners][erm]") {
    TypeEngine eng;
    auto e = testutil::fig1_expr();
    auto s = fig1_training();
    auto r = erm(eng, e, s, 3, 1, 1, 1, "types");
    REQUIRE(r.empirical_error == Rational(0));
    REQUIRE(err_empirical(eng, e, r.hypothesis, s) == Rational(0));

    auto bad = make_seq({{{"v1"}, true}, {{"v1"}, false}, {{"v2"}, true}});
    auto rb = erm(eng, e, bad, 1, 1, 0, 0, "types");
    REQUIRE(rb.empirical_error == Rational(1, 3));
    REQUIRE(err_empirical(eng, e, rb.hypothesis, bad) == Rational(1, 3));

    REQUIRE_THROWS_AS(erm(eng, e, TrainingSequence{}, 1, 1, 0, 0), error);
}

TEST_CASE("erm modes agree and reach the brute-force optimum", "[learners][erm][oracle]") {
    TypeEngine eng;
    std::mt19937_64 rng(59);
    int done = 0;
    while (done < 12) {
        auto e = testutil::random_expr(rng, 2 + rng() % 5);
        auto g = eval_cexpr(e);
        int q = 1;
        int k = 1;
        int ell = int(rng() % 2);
        int m = 2 + int(rng() % 4);
        TrainingSequence s;
        s.k = k;
        for (int i = 0; i < m; ++i)
            s.examples.emplace_back(std::vector<std::string>{g.id(rng() % g.size())},
                                    rng() % 2 == 0);
        auto rt = erm(eng, e, s, q, k, ell, 0, "types");
        auto rs = erm(eng, e, s, q, k, ell, 0, "subsequence");
        auto expect = brute_min_err(eng, g, s.tuples(), s.labels(), q, ell, 0);
        REQUIRE(rt.empirical_error == expect);
        REQUIRE(rs.empirical_error == expect);
        REQUIRE(err_empirical(eng, e, rt.hypothesis, s) == expect);
        ++done;
    }
}

TEST_CASE("pac learning basics", "[learners][pac]") {
    TypeEngine eng;
    auto e = gen_cograph(6, 21);
    auto g = eval_cexpr(e);

    // concentrated distribution: zero generalization error
    DistributionSpec d;
    d.support.push_back({{g.id(0)}, true, Rational(1)});
    PacOptions opts;
    opts.seed = 5;
    opts.m_override = 12;
    auto r = pac_learn(eng, e, d, 1, 1, 0, 0, opts);
    REQUIRE(err_true(eng, e, r.hypothesis, d) == Rational(0));

    // determinism: same seed, same sample, same hypothesis
    auto r2 = pac_learn(eng, e, d, 1, 1, 0, 0, opts);
    REQUIRE(r.sample.tuples() == r2.sample.tuples());
    REQUIRE(r.hypothesis.to_json() == r2.hypothesis.to_json());

    // coin-flip labels on one instance: error 1/2 for every hypothesis
    DistributionSpec coin;
    coin.support.push_back({{g.id(0)}, true, Rational(1, 2)});
    coin.support.push_back({{g.id(0)}, false, Rational(1, 2)});
    auto rc = pac_learn(eng, e, coin, 1, 1, 0, 0, opts);
    REQUIRE(err_true(eng, e, rc.hypothesis, coin) == Rational(1, 2));

    DistributionSpec badd;
    badd.support.push_back({{g.id(0)}, true, Rational(1, 3)});
    REQUIRE_THROWS_AS(pac_learn(eng, e, badd, 1, 1, 0, 0, opts), error);
}

TEST_CASE("hypothesis files round trip", "[learners]") {
    TypeEngine eng;
    auto e = testutil::fig1_expr();
    auto s = fig1_training();
    auto out = learn_1d(eng, e, s, 3, 1, 1);
    REQUIRE(out.hypothesis.has_value());
    auto j = out.hypothesis->to_json();
    auto h2 = Hypothesis::from_json(j);
    REQUIRE(h2.to_json() == j);
    REQUIRE(classify(eng, e, h2, {"v1"}) == classify(eng, e, *out.hypothesis, {"v1"}));

    // classification against a different expression is rejected
    auto other = gen_cograph(3, 2);
    REQUIRE_THROWS_AS(classify(eng, other, h2, {"v1"}), error);
}
