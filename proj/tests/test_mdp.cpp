#include <doctest.h>

#include <memory>
#include <random>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/harness.hpp"
#include "fixmann/mdp.hpp"
#include "oracles.hpp"

using namespace fixmann;

TEST_CASE("Bellman operators on the end-component example") {
    const Mdp m = fixtures::fig2_mdp();
    CHECK(bellman_state(m, Vec(4, 0.0)) == Vec{0.0, 2.0, 1.0, 0.0});
    const Vec q = bellman_state_action(m, Vec(8, 0.0));
    CHECK(q[m.sa_index(1, 0)] == 2.0);
    CHECK(q[m.sa_index(1, 1)] == 0.0);
    CHECK(q[m.sa_index(2, 0)] == 1.0);
    CHECK(q[m.sa_index(2, 1)] == 0.0);
    CHECK(q[m.sa_index(0, 0)] == 0.0);
    CHECK(state_values_from_q(m, q) == Vec{0.0, 2.0, 1.0, 0.0});
    CHECK_THROWS_AS(bellman_state(m, Vec(3, 0.0)), ShapeError);
}

TEST_CASE("end components") {
    const MecDecomposition d2 = compute_mecs(fixtures::fig2_mdp());
    REQUIRE(d2.mecs.size() == 1);
    CHECK(d2.mecs[0].states == std::vector<int>{1, 2});
    CHECK(d2.mecs[0].actions == std::vector<std::vector<int>>{{1}, {1}});
    CHECK(d2.membership == std::vector<int>{-1, 0, 0, -1});

    const MecDecomposition d4 = compute_mecs(fixtures::fig4_mdp());
    REQUIRE(d4.mecs.size() == 1);
    CHECK(d4.mecs[0].states == std::vector<int>{0, 1, 2});

    CHECK(compute_mecs(fixtures::fig1_mdp()).mecs.empty());
    // A final state with a self-loop forms its own end component.
    CHECK(compute_mecs(fixtures::fig2_mdp_with_loop()).mecs.size() == 2);
}

TEST_CASE("finite value check") {
    Mdp m = fixtures::fig2_mdp();
    CHECK(check_finite_value(m));
    m.set_row(1, 1, {{2, 1.0, 1.0}});
    CHECK_FALSE(check_finite_value(m));
    CHECK_THROWS_AS(solve_value(m), InfiniteValueError);
}

TEST_CASE("rank and witness on the simple example") {
    const Mdp m = fixtures::fig1_mdp();
    const WitnessCertificate w = rank_and_witness(m);
    CHECK(w.rank == std::vector<int>{3, 2, 1, 0});
    CHECK(w.c < 1.0);
    CHECK(w.slack > 0.0);
    CHECK(w.k == 4);
    // u^k(1) <= c componentwise
    Vec v(4, 1.0);
    for (int i = 0; i < w.k; ++i) v = witness_apply(m, v);
    for (double x : v) CHECK(x <= w.c + 1e-12);
    CHECK_THROWS_AS(rank_and_witness(fixtures::fig2_mdp()), NotSimpleError);
    Mdp nofinal({"s"}, {"a"});
    nofinal.add_transition(0, 0, 0, 1.0, 0.0);
    CHECK_THROWS_AS(rank_and_witness(nofinal), NoFinalStateError);
}

TEST_CASE("witness dominates Bellman differences") {
    const Mdp m = fixtures::fig1_mdp();
    const WitnessCertificate w = rank_and_witness(m);
    const MonotoneMap u = w.witness();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 6.0);
    for (int k = 0; k < 500; ++k) {
        Vec x(4), y(4);
        for (int i = 0; i < 4; ++i) {
            x[i] = unif(rng);
            y[i] = unif(rng);
        }
        x[3] = y[3] = 0.0;
        const Vec fx = bellman_state(m, x), fy = bellman_state(m, y);
        Vec d(4), ud;
        for (int i = 0; i < 4; ++i) d[i] = std::max(0.0, x[i] - y[i]);
        ud = u(d);
        for (int i = 0; i < 4; ++i) CHECK(fx[i] - fy[i] <= ud[i] + 1e-12);
    }
}

TEST_CASE("quotients") {
    const Quotients q2 = build_quotients(fixtures::fig2_mdp());
    CHECK(q2.classes.size() == 3);
    CHECK(q2.merge[1] == q2.merge[2]);
    CHECK(q2.merge[0] != q2.merge[3]);
    const Quotients q4 = build_quotients(fixtures::fig4_mdp());
    CHECK(q4.reduced.num_states() == 5);
    CHECK(compute_mecs(q4.reduced).mecs.empty());
}

TEST_CASE("solve_value against policy enumeration") {
    SUBCASE("figures") {
        const Solution s1 = solve_value(fixtures::fig1_mdp());
        CHECK(sup_dist(s1.v, {5.0, 5.0, 3.0, 0.0}) < 1e-9);
        const Solution s2 = solve_value(fixtures::fig2_mdp());
        CHECK(sup_dist(s2.v, {0.0, 2.0, 2.0, 0.0}) < 1e-9);
        const Solution s4 = solve_value(fixtures::fig4_mdp());
        CHECK(sup_dist(s4.v, {2.0, 2.0, 2.0, 3.0, 2.5, 0.0, 0.0}) < 1e-9);
        for (const Mdp& m : {fixtures::fig1_mdp(), fixtures::fig2_mdp(), fixtures::fig4_mdp()})
            CHECK(sup_dist(solve_value(m).v, oracle::policy_enumeration_value(m)) < 1e-9);
    }
    SUBCASE("random instances") {
        for (std::uint64_t seed = 1; seed <= 15; ++seed)
            for (RandomKind k : {RandomKind::SimpleMdp, RandomKind::MdpWithMecs}) {
                const int mecs = k == RandomKind::MdpWithMecs ? 2 : 0;
                const Mdp m = gen_random_mdp(8, k, mecs, seed, false);
                CHECK(sup_dist(solve_value(m).v, oracle::policy_enumeration_value(m)) < 1e-8);
            }
    }
}

TEST_CASE("greedy policies") {
    const Mdp m1 = fixtures::fig1_mdp();
    CHECK(greedy_policy(m1, solve_value(m1).v) == std::vector<int>{0, 0, 1, -1});
    const Mdp m2 = fixtures::fig2_mdp();
    CHECK(greedy_policy(m2, solve_value(m2).v) == std::vector<int>{-1, 0, 1, -1});
}

TEST_CASE("discount transform removes end components") {
    const Mdp d = discount_transform(fixtures::fig2_mdp(), 0.9);
    CHECK(d.num_states() == 5);
    CHECK(compute_mecs(d).mecs.empty());
    CHECK(validate_mdp(d).ok);
    CHECK_NOTHROW(rank_and_witness(d));
    CHECK_THROWS_AS(discount_transform(fixtures::fig2_mdp(), 1.0), RangeError);
}

TEST_CASE("state and state-action values agree") {
    for (const Mdp& m : {fixtures::fig1_mdp(), fixtures::fig4_mdp()}) {
        const Solution s = solve_value(m);
        CHECK(sup_dist(state_values_from_q(m, s.q), s.v) < 1e-9);
        const Vec q = bellman_state_action(m, s.q);
        CHECK(sup_dist(q, s.q) < 1e-9);
    }
}

TEST_CASE("model distance bound") {
    const Mdp a = fixtures::fig1_mdp();
    Mdp b = fixtures::fig1_mdp();
    b.set_row(0, 0, {{0, 0.4, 0.0}, {1, 0.6, 0.0}});
    CHECK(model_distance_bound(a, b, 6.0) == doctest::Approx(0.6));
    CHECK(model_distance_bound(a, a, 6.0) == 0.0);
    CHECK(model_distance_bound(a, b, 6.0) <= uniform_model_bound(0.1, 4, a.max_reward(), 6.0));
    CHECK_THROWS_AS(model_distance_bound(a, fixtures::fig2_mdp(), 1.0), ShapeError);
}

TEST_CASE("JSON and validation") {
    CHECK(parse_probability(nlohmann::json(0.25)) == 0.25);
    CHECK(parse_probability(nlohmann::json("1/3")) == doctest::Approx(1.0 / 3.0));
    CHECK(parse_probability(nlohmann::json("0.5")) == 0.5);
    CHECK_THROWS_AS(parse_probability(nlohmann::json("abc")), ValidationError);
    CHECK_THROWS_AS(parse_probability(nlohmann::json("1/0")), ValidationError);
    CHECK_THROWS_AS(parse_probability(nlohmann::json::array()), ValidationError);

    const Mdp m = fixtures::fig4_mdp();
    const Mdp r = Mdp::from_json(m.to_json());
    CHECK(r.to_json() == m.to_json());
    const Mdp f = Mdp::load(std::string(FIXMANN_DATA_DIR) + "/fig4.json");
    CHECK(sup_dist(solve_value(f).v, solve_value(m).v) < 1e-12);

    nlohmann::json bad = fixtures::fig2_mdp().to_json();
    bad["transitions"][0]["p"] = 0.5;
    CHECK_THROWS_AS(Mdp::from_json(bad), ValidationError);
    Mdp neg = fixtures::fig2_mdp();
    neg.set_row(1, 0, {{0, 1.0, -1.0}});
    CHECK_FALSE(validate_mdp(neg).ok);
    CHECK_THROWS_AS(Mdp::load("/nonexistent.json"), IoError);
}
