#include <doctest.h>

#include <algorithm>
#include <memory>
#include <random>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/ssg.hpp"
#include "oracles.hpp"

using namespace fixmann;

namespace {

StopRule tight() {
    StopRule s;
    s.max_steps = 20000000;
    s.update_tol = 1e-7;
    return s;
}

MannScheme mann_kleene() { return build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1, 2), 1); }

// n player/average nodes plus two sinks with random payoffs.
Ssg random_game(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 2);
    Ssg g;
    for (int v = 0; v < n; ++v) {
        const int k = kind(rng);
        g.add_node("v" + std::to_string(v), k == 0 ? NodeKind::Min : k == 1 ? NodeKind::Max : NodeKind::Avg);
    }
    const int s0 = g.add_node("sa", NodeKind::Sink), s1 = g.add_node("sb", NodeKind::Sink);
    g.payoff[s0] = u(rng);
    g.payoff[s1] = u(rng);
    std::uniform_int_distribution<int> node(0, n + 1);
    for (int v = 0; v < n; ++v) {
        std::vector<int> targets{node(rng), node(rng)};
        if (u(rng) < 0.5) targets.push_back(node(rng));
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        if (g.kinds[v] == NodeKind::Avg) {
            Vec w(targets.size());
            double sum = 0.0;
            for (double& x : w) sum += (x = 0.1 + u(rng));
            for (std::size_t i = 0; i < targets.size(); ++i) g.dist[v].emplace_back(targets[i], w[i] / sum);
        } else {
            g.succ[v] = targets;
        }
    }
    g.validate();
    return g;
}

}  // namespace

TEST_CASE("all-sink successors") {
    Ssg g;
    const int x = g.add_node("x", NodeKind::Max);
    const int a = g.add_node("a", NodeKind::Sink), b = g.add_node("b", NodeKind::Sink);
    g.payoff[a] = 0.7;
    g.payoff[b] = 0.2;
    g.succ[x] = {a, b};
    g.validate();
    CHECK(brute_force_value(g)[x] == doctest::Approx(0.7));
    CHECK(ssg_operator(g, Vec(3, 0.0)) == Vec{0.0, 0.7, 0.2});
    CHECK(solve_ssg(g, mann_kleene(), tight()).value[x] == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("the four-node example") {
    const Ssg g = fixtures::ssg_example();
    const Vec expect{0.0, 1.0, 0.5, 0.0, 1.0};
    CHECK(sup_dist(brute_force_value(g), expect) < 1e-12);
    CHECK(sup_dist(solve_ssg(g, mann_kleene(), tight()).value, expect) < 1e-5);
    const Ssg f = Ssg::load(std::string(FIXMANN_DATA_DIR) + "/ssg4.json");
    CHECK(f.to_json() == g.to_json());
    CHECK_THROWS_AS(solve_ssg(g, kleene_scheme(), tight()), ConfigError);
}

TEST_CASE("random games agree with enumeration") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 20; ++k) {
        const Ssg g = random_game(rng, 8);
        const Vec brute = brute_force_value(g);
        const Vec lfp = oracle::kleene([&](const Vec& p) { return ssg_operator(g, p); }, Vec(g.size(), 0.0), 1e-14);
        CHECK(sup_dist(brute, lfp) < 1e-9);
        CHECK(sup_dist(solve_ssg(g, mann_kleene(), tight()).value, brute) < 1e-5);
    }
}

TEST_CASE("a min node that can stall forever gets 0") {
    Ssg g;
    const int m = g.add_node("m", NodeKind::Min);
    const int t = g.add_node("t", NodeKind::Sink);
    g.payoff[t] = 1.0;
    g.succ[m] = {m, t};
    g.validate();
    CHECK(brute_force_value(g)[m] == 0.0);
    CHECK(solve_ssg(g, mann_kleene(), tight()).value[m] == 0.0);
}

TEST_CASE("operator is monotone and non-expansive") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 10; ++k) {
        auto g = std::make_shared<const Ssg>(random_game(rng, 6));
        CHECK(check_monotone_nonexpansive(MonotoneMap::ssg(g), 500, k, 1e-12).passed());
    }
}

TEST_CASE("game distance") {
    auto a = std::make_shared<Ssg>(fixtures::ssg_example());
    auto b = std::make_shared<Ssg>(fixtures::ssg_example());
    b->dist[2] = {{3, 0.3}, {4, 0.7}};
    CHECK(ssg_distance(*a, *b) == doctest::Approx(0.2));
    CHECK(ssg_max_deviation(*a, *b) == doctest::Approx(0.2));
    ProbeGrid grid;
    const auto fa = MonotoneMap::ssg(a), fb = MonotoneMap::ssg(b);
    CHECK(grid_distance(fa, fb, grid) <= ssg_distance(*a, *b) + 1e-12);
    CHECK(sup_distance(fa, fb, grid) == doctest::Approx(0.2));
    Ssg other = fixtures::ssg_example();
    other.succ[0] = {1};
    CHECK_THROWS_AS(ssg_distance(*a, other), ShapeError);
}

TEST_CASE("SSG JSON") {
    const Ssg g = fixtures::ssg_example();
    CHECK(Ssg::from_json(g.to_json()).to_json() == g.to_json());
    nlohmann::json bad = g.to_json();
    bad["avg"][0]["dist"]["t0"] = 0.2;
    CHECK_THROWS_AS(Ssg::from_json(bad), ValidationError);
    nlohmann::json unknown = g.to_json();
    unknown["succ"]["m1"] = {"nowhere"};
    CHECK_THROWS_AS(Ssg::from_json(unknown), ValidationError);
    Ssg tiny;
    tiny.add_node("x", NodeKind::Max);
    CHECK_THROWS_AS(tiny.validate(), ValidationError);
}
