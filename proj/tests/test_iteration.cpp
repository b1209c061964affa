#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/iteration.hpp"
#include "fixmann/mdp.hpp"

using namespace fixmann;

namespace {

StopRule steps_only(std::int64_t n) {
    StopRule s;
    s.max_steps = n;
    s.update_tol = 1e-300;
    return s;
}

MannScheme mk(double alpha_scale, std::int64_t start = 1) {
    const ParamSeq a = alpha_scale > 0 ? ParamSeq::harmonic(alpha_scale, 2) : ParamSeq::zero();
    return build_scheme(a, ParamSeq::harmonic(1, 2), start);
}

}  // namespace

TEST_CASE("Kleene on the end-component example") {
    const auto m = std::make_shared<const Mdp>(fixtures::fig2_mdp());
    const IterationTrace t = kleene_iterate(MonotoneMap::bellman(m, BellmanKind::State), Vec(4, 0.0), StopRule{});
    CHECK(t.final_point() == Vec{0.0, 2.0, 2.0, 0.0});
    CHECK(t.stop_reason == StopReason::UpdateTol);
    CHECK(t.index.front() == 0);
    for (std::size_t k = 1; k < t.points.size(); ++k) CHECK(leq(t.points[k - 1], t.points[k]));
}

TEST_CASE("running example closed form") {
    const MannScheme s = build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1, 1), 2);
    const IterationTrace t = mann_iterate(s, fixtures::intro_family(), {0.0}, steps_only(2000));
    for (std::size_t k = 0; k < t.points.size(); ++k) {
        const double n = static_cast<double>(t.index[k] - 1);
        CHECK(t.points[k][0] == doctest::Approx((n - 1) / (2 * n)).epsilon(1e-12));
    }
}

TEST_CASE("flip perturbation closed form") {
    const IterationTrace t = mann_iterate(mk(0), fixtures::flip_perturbation(), {0.0, 1.0}, steps_only(200));
    CHECK(t.index.front() == 1);
    for (std::size_t k = 1; k < t.points.size(); ++k) {
        const double n = static_cast<double>(t.index[k]);
        const Vec expect = t.index[k] % 2 ? Vec{(n - 2) / n, 0.0} : Vec{0.0, (n - 1) / n};
        CHECK(sup_dist(t.points[k], expect) < 1e-12);
    }
    const RegularityReport r = regularity_diagnostics(t, fixtures::flip_perturbation(), 50);
    for (std::size_t k = 100; k < r.residuals.size(); ++k) CHECK(r.residuals[k] > 0.5);
    CHECK(r.window_max.back()[0] > 0.95);
    CHECK(r.window_min.back()[0] == 0.0);
}

TEST_CASE("stop rules") {
    const MonotoneMap f = fixtures::piecewise_map();
    SUBCASE("undampened stops on the update") {
        const IterationTrace t = kleene_iterate(f, {0.0}, StopRule{});
        CHECK(t.stop_reason == StopReason::UpdateTol);
        CHECK(std::abs(t.final_point()[0] - 1.0) < 1e-5);
    }
    SUBCASE("dampened stops on the residual") {
        StopRule s;
        s.max_steps = 1000000;
        s.update_tol = 1e-4;
        const IterationTrace t = mann_iterate(mk(1.0), MapSequence::constant(f), {0.0}, s);
        CHECK(t.stop_reason == StopReason::UpdateTol);
        CHECK(std::abs(f(t.final_point())[0] - t.final_point()[0]) < 1e-4);
    }
    SUBCASE("residual tolerance") {
        StopRule s;
        s.max_steps = 1000000;
        s.residual_tol = 1e-3;
        const IterationTrace t = kleene_iterate(f, {0.0}, s);
        CHECK(t.stop_reason == StopReason::ResidualTol);
    }
    SUBCASE("invalid schemes need the override") {
        CHECK_THROWS_AS(mann_iterate(kleene_scheme(), MapSequence::constant(f), {0.0}, StopRule{}), ConfigError);
        IterationOptions opt;
        opt.allow_invalid_scheme = true;
        CHECK_NOTHROW(mann_iterate(kleene_scheme(), MapSequence::constant(f), {0.0}, StopRule{}, opt));
    }
    SUBCASE("bad rules") {
        StopRule s;
        s.max_steps = 0;
        CHECK_THROWS_AS(kleene_iterate(f, {0.0}, s), ConfigError);
    }
}

TEST_CASE("divergence guard") {
    const auto shift = MonotoneMap::custom(Box::unbounded(1), [](const Vec& x) { return Vec{x[0] + 1.0}; });
    IterationOptions opt;
    opt.divergence_guard = 100.0;
    const IterationTrace t = kleene_iterate(shift, {0.0}, steps_only(1000), opt);
    CHECK(t.diverged);
    CHECK(t.stop_reason == StopReason::Diverged);
    CHECK(t.steps == 101);
}

TEST_CASE("recording stride and tail window") {
    const IterationTrace t = mann_iterate(mk(1.0), MapSequence::constant(fixtures::piecewise_map()), {0.0},
                                          steps_only(30000));
    CHECK(t.strided);
    CHECK(t.index[9999] == 10000);
    CHECK(std::find(t.index.begin(), t.index.end(), 10010) != t.index.end());
    CHECK(std::find(t.index.begin(), t.index.end(), 10002) == t.index.end());
    CHECK(std::find(t.index.begin(), t.index.end(), 20000) != t.index.end());
    CHECK(t.index.back() == 30001);
    CHECK(t.tail_max[0] == doctest::Approx(t.final_point()[0]));
    CHECK(t.tail_min[0] <= t.tail_max[0]);
    CHECK_THROWS_AS(regularity_diagnostics(t, fixtures::piecewise_map()), ConfigError);
}

TEST_CASE("controlled reset schedule") {
    const Schedule a = controlled_reset_schedule([](std::int64_t k) { return 1.0 / static_cast<double>(k); }, 1.0);
    for (std::int64_t k = 1; k <= 200; ++k)
        CHECK(a(k) == static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(k)) + 1e-12)));
    CHECK(controlled_reset_schedule([](std::int64_t) { return 0.25; }, 1.0)(7) == 2);
    const Schedule c = controlled_reset_schedule([](std::int64_t k) { return 1.0 / double(k * k); }, 1.0);
    for (std::int64_t k = 1; k <= 200; ++k) CHECK(c(k) == k);
    CHECK_THROWS_AS(controlled_reset_schedule([](std::int64_t) { return 0.0; }, 1.0)(1), ConfigError);
}

TEST_CASE("resetting iteration reaches the limit fixpoint") {
    const Vec a{0.75, 0.5};
    const Schedule s = [](std::int64_t k) { return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::sqrt(k))); };
    const IterationTrace t = resetting_iterate(fixtures::approx_max_family(a), s, {0.0, 0.0}, 3000);
    CHECK(sup_dist(t.final_point(), a) < 0.02);
}

TEST_CASE("regularity on the piecewise map") {
    const MonotoneMap f = fixtures::piecewise_map();
    const IterationTrace t = mann_iterate(mk(1.0), MapSequence::constant(f), {0.0}, steps_only(10000));
    const RegularityReport r = regularity_diagnostics(t, f);
    CHECK(r.residuals.back() < 1e-3);
    const IterationTrace c = kleene_iterate(f, {1.0}, steps_only(5));
    for (double v : regularity_diagnostics(c, f).residuals) CHECK(v == 0.0);
}

TEST_CASE("boundedness bound holds along exact runs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const MonotoneMap f = fixtures::piecewise_map();
    for (int k = 0; k < 20; ++k) {
        const Vec x0{u(rng)};
        const Vec xbar{1.0 + u(rng) / 3.0};  // every point of [1,2] is a fixpoint
        const double bound = boundedness_bound(x0, xbar);
        const IterationTrace t = mann_iterate(mk(0.5), MapSequence::constant(f), x0, steps_only(2000));
        for (const Vec& x : t.points) CHECK(sup_dist(x, xbar) <= bound + 1e-9);
    }
}

TEST_CASE("liminf lower bound for approximated runs") {
    const Vec a{0.75, 0.5};
    const MannScheme s = build_scheme(ParamSeq::constant(0.5), ParamSeq::harmonic(1, 2), 1);
    IterationOptions opt;
    opt.window = 2000;
    const IterationTrace t = mann_iterate(s, fixtures::approx_max_family(a), {0.0, 0.0}, steps_only(20000), opt);
    for (std::size_t i = 0; i < 2; ++i) CHECK(t.tail_min[i] >= a[i] - 1e-2);
}
