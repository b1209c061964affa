#include <doctest.h>

#include <cmath>
#include <memory>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/sampling.hpp"

using namespace fixmann;

namespace {

// Smallest n with entries * 2 exp(-2 eps^2 n) <= delta, by linear search.
std::int64_t bernstein_oracle(double eps, double delta, std::int64_t entries) {
    std::int64_t n = 1;
    while (static_cast<double>(entries) * 2.0 * std::exp(-2.0 * eps * eps * static_cast<double>(n)) > delta) ++n;
    return n;
}

MannScheme mann_kleene() { return build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1, 2), 1); }

}  // namespace

TEST_CASE("Bernstein sample sizes") {
    CHECK(bernstein_sample_size(0.1, 0.05, 1) == 185);
    CHECK(bernstein_sample_size(0.1, 0.01, 2) == 300);
    for (double eps : {0.3, 0.1, 0.05})
        for (double delta : {0.5, 0.1, 0.01})
            for (std::int64_t e : {1, 4, 9}) CHECK(bernstein_sample_size(eps, delta, e) == bernstein_oracle(eps, delta, e));
    // delta = 1 with one entry: 2 exp(-2 eps^2 n) <= 1
    CHECK(bernstein_sample_size(0.5, 1.0, 1) == bernstein_oracle(0.5, 1.0, 1));
    CHECK(bernstein_sample_size(1e-12, 1e-3, 10) == kMaxPulls);
    CHECK_THROWS_AS(bernstein_sample_size(0.0, 0.1, 1), RangeError);
    CHECK_THROWS_AS(bernstein_sample_size(0.1, 0.0, 1), RangeError);
    CHECK_THROWS_AS(bernstein_sample_size(0.1, 1.5, 1), RangeError);
}

TEST_CASE("fair coin estimate") {
    SampledRow r({0, 1}, {0.5, 0.5}, stream_key(1, 0, 0));
    r.sample_to(10000);
    CHECK(r.counts()[0] + r.counts()[1] == 10000);
    CHECK(r.counts()[0] == 5000);
    CHECK(std::abs(r.estimate()[0] - 0.5) < 0.02);
}

TEST_CASE("pulls are cumulative and deterministic") {
    SampledRow a({0, 1, 2}, {0.2, 0.3, 0.5}, 99), b({0, 1, 2}, {0.2, 0.3, 0.5}, 99);
    for (std::int64_t n : {10, 50, 1000, 100000}) {
        a.sample_to(n);
        b.sample_to(n);
    }
    CHECK(a.counts() == b.counts());
    CHECK(a.pulls() == 100000);
    a.sample_to(5);
    CHECK(a.pulls() == 100000);
    a.sample_to(kMaxPulls + 1);
    CHECK(a.saturated());
    CHECK(a.pulls() == kMaxPulls);
    std::int64_t sum = 0;
    for (auto c : a.counts()) sum += c;
    CHECK(sum == kMaxPulls);
}

TEST_CASE("MDP sampler respects structural zeros") {
    auto m = std::make_shared<const Mdp>(fixtures::fig1_mdp());
    MdpSampler s(m, 7);
    CHECK_THROWS_AS(s.estimate(), ConfigError);
    s.sample_to(200);
    const Mdp& e = s.estimate();
    for (int st = 0; st < 4; ++st)
        for (int a = 0; a < 2; ++a) {
            const auto& tr = m->row(st, a);
            const auto& er = e.row(st, a);
            REQUIRE(tr.size() >= er.size());
            for (const auto& t : er) {
                bool found = false;
                for (const auto& u : tr) found = found || (u.to == t.to && u.r == t.r);
                CHECK(found);
            }
            if (!tr.empty()) CHECK(s.row(st, a).pulls() == 200);
        }
    CHECK(s.total_samples() == 6 * 200);
    CHECK(s.estimated_entries() == 8);
    CHECK(s.per_entry_eps(1.0, 3.0) == doctest::Approx(1.0 / (1.0 * (3.0 + 3.0))));
}

TEST_CASE("row streams depend only on their key") {
    auto m = std::make_shared<const Mdp>(fixtures::fig1_mdp());
    MdpSampler s(m, 5);
    s.sample_to(30);
    s.sample_to(4000);
    SampledRow solo({0, 1}, {0.5, 0.5}, stream_key(5, 0, 0));
    solo.sample_to(30);
    solo.sample_to(4000);
    CHECK(solo.counts() == s.row(0, 0).counts());
}

TEST_CASE("deterministic models estimate exactly") {
    auto m = std::make_shared<const Mdp>(fixtures::fig2_mdp());
    MdpSampler s(m, 3);
    s.sample_to(1);
    CHECK(s.estimated_entries() == 0);
    const Vec x{0.0, 1.0, 3.0, 0.0};
    Vec out;
    s.apply_estimate(x, out);
    CHECK(out == bellman_state(*m, x));
}

TEST_CASE("algorithm1 on the simple example") {
    auto m = std::make_shared<const Mdp>(fixtures::fig1_mdp());
    MdpSampler s(m, 42);
    const GuaranteeSchedule g;
    const IterationTrace t = algorithm1(mann_kleene(), s, g, 2000);
    CHECK(t.pulls.size() == t.points.size());
    for (std::size_t k = 1; k < t.pulls.size(); ++k) {
        CHECK(t.pulls[k] >= t.pulls[k - 1]);
        CHECK(t.total_samples[k] >= t.total_samples[k - 1]);
    }
    CHECK(sup_dist(t.final_point(), {5.0, 5.0, 3.0, 0.0}) < 0.05);
    CHECK_THROWS_AS(algorithm1(kleene_scheme(), s, g, 10), ConfigError);
    GuaranteeSchedule bad;
    bad.gamma.p = 1.0;
    CHECK_THROWS_AS(algorithm1(mann_kleene(), s, bad, 10), ConfigError);
}

TEST_CASE("SSG sampler") {
    auto g = std::make_shared<const Ssg>(fixtures::ssg_example());
    SsgSampler s(g, 11);
    s.sample_to(500);
    CHECK(s.estimated_entries() == 2);
    CHECK(s.per_entry_eps(0.2, 1.0) == doctest::Approx(0.2));
    CHECK(s.estimate().same_structure(*g));
    CHECK(ssg_distance(s.estimate(), *g) <= ssg_max_deviation(s.estimate(), *g) * 2 + 1e-15);
    const IterationTrace t = algorithm1(mann_kleene(), s, GuaranteeSchedule{}, 3000);
    CHECK(sup_dist(t.final_point(), {0.0, 1.0, 0.5, 0.0, 1.0}) < 0.05);
}

TEST_CASE("schedule JSON") {
    GuaranteeSchedule g;
    g.gamma = {0.3, 1.5};
    const GuaranteeSchedule r = GuaranteeSchedule::from_json(g.to_json());
    CHECK(r.gamma.c0 == 0.3);
    CHECK(r.gamma.p == 1.5);
    CHECK_THROWS_AS(GuaranteeSchedule::from_json(nlohmann::json{{"delta", {{"c0", 2.0}}}}), ConfigError);
    const Alg1Config c = Alg1Config::from_json(nlohmann::json{{"seed", 9}, {"steps", 10}});
    CHECK(c.seed == 9);
    CHECK(c.steps == 10);
}
