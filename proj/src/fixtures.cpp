#include "fixmann/fixtures.hpp"

#include <cmath>
#include <filesystem>

#include "fixmann/errors.hpp"

namespace fixmann::fixtures {

namespace {

void edge(Mdp& m, const std::string& s, const std::string& a, const std::string& t, double p, double r = 0.0) {
    m.add_transition(m.state_index(s), m.action_index(a), m.state_index(t), p, r);
}

std::string resolve(const std::string& base, const std::string& path) {
    if (base.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(base) / path).string();
}

}  // namespace

Mdp fig1_mdp() {
    Mdp m({"s1", "s2", "s3", "s4"}, {"b", "c"});
    edge(m, "s1", "b", "s1", 0.5);
    edge(m, "s1", "b", "s2", 0.5);
    edge(m, "s1", "c", "s2", 2.0 / 3.0);
    edge(m, "s1", "c", "s3", 1.0 / 3.0);
    edge(m, "s2", "b", "s3", 1.0, 2.0);
    edge(m, "s2", "c", "s3", 1.0, 2.0);
    edge(m, "s3", "b", "s2", 0.5);
    edge(m, "s3", "b", "s4", 0.5);
    edge(m, "s3", "c", "s3", 1.0 / 3.0);
    edge(m, "s3", "c", "s4", 2.0 / 3.0, 3.0);
    return m;
}

Mdp fig2_mdp() {
    Mdp m({"s1", "s2", "s3", "s4"}, {"a", "b"});
    edge(m, "s2", "a", "s1", 1.0, 2.0);
    edge(m, "s2", "b", "s3", 1.0);
    edge(m, "s3", "b", "s2", 1.0);
    edge(m, "s3", "a", "s4", 1.0, 1.0);
    return m;
}

Mdp fig2_mdp_with_loop() {
    Mdp m({"s1", "s2", "s3", "s4"}, {"a", "b", "loop"});
    edge(m, "s1", "loop", "s1", 1.0);
    edge(m, "s2", "a", "s1", 1.0, 2.0);
    edge(m, "s2", "b", "s3", 1.0);
    edge(m, "s3", "b", "s2", 1.0);
    edge(m, "s3", "a", "s4", 1.0, 1.0);
    return m;
}

Mdp fig4_mdp() {
    Mdp m({"s1", "s2", "s3", "s4", "s5", "sF", "sG"}, {"a", "b"});
    edge(m, "s1", "a", "s3", 1.0);
    edge(m, "s1", "b", "s2", 1.0);
    edge(m, "s2", "a", "s1", 1.0);
    edge(m, "s3", "a", "s1", 1.0);
    edge(m, "s2", "b", "sF", 1.0 / 3.0);
    edge(m, "s2", "b", "s4", 2.0 / 3.0);
    edge(m, "s3", "b", "sF", 0.5);
    edge(m, "s3", "b", "s5", 0.5);
    edge(m, "s4", "a", "sF", 1.0);
    edge(m, "s5", "a", "sF", 1.0);
    edge(m, "s4", "b", "sG", 1.0 / 3.0, 2.0);
    edge(m, "s4", "b", "s5", 2.0 / 3.0, 1.0);
    edge(m, "s5", "b", "sG", 0.75, 2.0);
    edge(m, "s5", "b", "s4", 0.25, 1.0);
    return m;
}

Ssg ssg_example() {
    Ssg g;
    const int m1 = g.add_node("m1", NodeKind::Min);
    const int x1 = g.add_node("x1", NodeKind::Max);
    const int a1 = g.add_node("a1", NodeKind::Avg);
    const int t0 = g.add_node("t0", NodeKind::Sink);
    const int t1 = g.add_node("t1", NodeKind::Sink);
    g.payoff[t0] = 0.0;
    g.payoff[t1] = 1.0;
    g.succ[m1] = {x1, t0};
    g.succ[x1] = {a1, t1};
    g.dist[a1] = {{t0, 0.5}, {t1, 0.5}};
    g.validate();
    return g;
}

MonotoneMap piecewise_map() {
    const Box box = Box::unbounded(1);
    const MonotoneMap lower = MonotoneMap::affine(box, {{0.5}}, {0.5});
    const MonotoneMap upper = MonotoneMap::affine(box, {{0.5}}, {1.0});
    return MonotoneMap::pointwise_min({MonotoneMap::pointwise_max({lower, MonotoneMap::identity(box)}), upper});
}

MonotoneMap flip_map() {
    return MonotoneMap::affine(Box::cube(2, 1.0), {{0.0, 1.0}, {1.0, 0.0}}, {0.0, 0.0});
}

MapSequence intro_family(int speedup) {
    if (speedup < 1) throw RangeError("speedup must be >= 1");
    auto eval = [speedup](std::int64_t n, const Vec& x, Vec& out) {
        const double m = std::pow(static_cast<double>(n), speedup);
        out.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (1.0 - 1.0 / m) * x[i] + 1.0 / m;
    };
    return MapSequence(Box::cube(1, 1.0), eval, MonotoneMap::identity(Box::cube(1, 1.0)));
}

MapSequence flip_perturbation() {
    auto eval = [](std::int64_t n, const Vec& x, Vec& out) {
        out.resize(2);
        if (n % 2 == 0) {
            out[0] = x[1];
            out[1] = x[0];
            return;
        }
        const double eps = 2.0 / static_cast<double>(n);
        out[0] = std::max(x[1] - eps, 0.0);
        out[1] = std::min(x[0] + eps, 1.0);
    };
    return MapSequence(Box::cube(2, 1.0), eval, flip_map());
}

MapSequence approx_max_family(const Vec& a) {
    for (double v : a)
        if (!(v >= 0.0 && v <= 1.0)) throw RangeError("a must lie in [0,1]^d");
    auto eval = [a](std::int64_t n, const Vec& x, Vec& out) {
        out.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = std::max(x[i], (1.0 - a[i]) * std::pow(x[i], static_cast<double>(n)) + a[i]);
    };
    const Box box = Box::cube(a.size(), 1.0);
    const MonotoneMap limit =
        MonotoneMap::pointwise_max({MonotoneMap::identity(box), MonotoneMap::constant(box, a)});
    return MapSequence(box, eval, limit);
}

ApproxFamily approx_family(const nlohmann::json& family) {
    const std::string name = family.value("family", std::string("approx_max"));
    if (name == "intro") {
        const int speedup = family.value("speedup", 1);
        return {intro_family(speedup), Vec{0.0}};
    }
    if (name == "flip") return {flip_perturbation(), Vec{0.0, 0.0}};
    if (name == "approx_max") {
        const Vec a = family.value("a", Vec{0.75, 0.5});
        return {approx_max_family(a), a};
    }
    throw ConfigError("unknown function family '" + name + "'");
}

Mdp mdp_by_name(const std::string& name, const std::string& base_dir) {
    if (name == "fig1") return fig1_mdp();
    if (name == "fig2") return fig2_mdp();
    if (name == "fig2_loop") return fig2_mdp_with_loop();
    if (name == "fig4") return fig4_mdp();
    return Mdp::load(resolve(base_dir, name));
}

Ssg ssg_by_name(const std::string& name, const std::string& base_dir) {
    if (name == "example") return ssg_example();
    return Ssg::load(resolve(base_dir, name));
}

}  // namespace fixmann::fixtures
