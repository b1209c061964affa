#include "fixmann/ssg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "fixmann/errors.hpp"
#include "fixmann/funcspace.hpp"
#include "fixmann/mdp.hpp"

namespace fixmann {

using nlohmann::json;

int Ssg::index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

int Ssg::add_node(const std::string& name, NodeKind kind) {
    if (index(name) >= 0) throw ValidationError("duplicate node " + name);
    names.push_back(name);
    kinds.push_back(kind);
    succ.emplace_back();
    dist.emplace_back();
    payoff.push_back(0.0);
    return static_cast<int>(names.size()) - 1;
}

void Ssg::validate() const {
    const std::size_t n = names.size();
    if (kinds.size() != n || succ.size() != n || dist.size() != n || payoff.size() != n)
        throw ValidationError("node tables have inconsistent sizes");
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t u = 0; u < v; ++u)
            if (names[u] == names[v]) throw ValidationError("duplicate node " + names[v]);
        switch (kinds[v]) {
        case NodeKind::Min:
        case NodeKind::Max:
            if (succ[v].empty()) throw ValidationError("node " + names[v] + " has no successor");
            for (int t : succ[v])
                if (t < 0 || t >= static_cast<int>(n)) throw ValidationError("bad successor of " + names[v]);
            break;
        case NodeKind::Avg: {
            if (dist[v].empty()) throw ValidationError("average node " + names[v] + " has no distribution");
            double sum = 0.0;
            for (const auto& [t, p] : dist[v]) {
                if (t < 0 || t >= static_cast<int>(n)) throw ValidationError("bad successor of " + names[v]);
                if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("bad probability at " + names[v]);
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("distribution of " + names[v] + " does not sum to 1");
            break;
        }
        case NodeKind::Sink:
            if (!(payoff[v] >= 0.0 && payoff[v] <= 1.0)) throw ValidationError("payoff of " + names[v] + " outside [0,1]");
            break;
        }
    }
}

bool Ssg::same_structure(const Ssg& o) const {
    if (names != o.names || kinds != o.kinds || succ != o.succ) return false;
    for (std::size_t v = 0; v < dist.size(); ++v) {
        if (dist[v].size() != o.dist[v].size()) return false;
        for (std::size_t i = 0; i < dist[v].size(); ++i)
            if (dist[v][i].first != o.dist[v][i].first) return false;
    }
    return true;
}

json Ssg::to_json() const {
    json mn = json::array(), mx = json::array(), av = json::array(), sink = json::object(), sc = json::object();
    for (std::size_t v = 0; v < size(); ++v) {
        switch (kinds[v]) {
        case NodeKind::Min:
        case NodeKind::Max: {
            (kinds[v] == NodeKind::Min ? mn : mx).push_back(names[v]);
            json s = json::array();
            for (int t : succ[v]) s.push_back(names[t]);
            sc[names[v]] = s;
            break;
        }
        case NodeKind::Avg: {
            json d = json::object();
            for (const auto& [t, p] : dist[v]) d[names[t]] = p;
            av.push_back(json{{"name", names[v]}, {"dist", d}});
            break;
        }
        case NodeKind::Sink: sink[names[v]] = payoff[v]; break;
        }
    }
    return json{{"min", mn}, {"max", mx}, {"avg", av}, {"sink", sink}, {"succ", sc}};
}

// Node order: min, max, avg in list order, then sinks by name.
Ssg Ssg::from_json(const json& j) {
    Ssg g;
    try {
        if (j.contains("min"))
            for (const auto& n : j["min"]) g.add_node(n.get<std::string>(), NodeKind::Min);
        if (j.contains("max"))
            for (const auto& n : j["max"]) g.add_node(n.get<std::string>(), NodeKind::Max);
        if (j.contains("avg"))
            for (const auto& a : j["avg"]) g.add_node(a.at("name").get<std::string>(), NodeKind::Avg);
        if (j.contains("sink"))
            for (const auto& [name, w] : j["sink"].items()) {
                const int v = g.add_node(name, NodeKind::Sink);
                g.payoff[v] = parse_probability(w);
            }
        auto lookup = [&](const std::string& name) {
            const int v = g.index(name);
            if (v < 0) throw ValidationError("unknown node " + name);
            return v;
        };
        if (j.contains("avg"))
            for (const auto& a : j["avg"]) {
                const int v = lookup(a.at("name").get<std::string>());
                for (const auto& [name, p] : a.at("dist").items()) {
                    const double q = parse_probability(p);
                    if (q > 0.0) g.dist[v].emplace_back(lookup(name), q);
                }
                std::sort(g.dist[v].begin(), g.dist[v].end());
            }
        if (j.contains("succ"))
            for (const auto& [name, list] : j["succ"].items()) {
                const int v = lookup(name);
                if (g.kinds[v] != NodeKind::Min && g.kinds[v] != NodeKind::Max)
                    throw ValidationError("successor list given for non-player node " + name);
                for (const auto& t : list) g.succ[v].push_back(lookup(t.get<std::string>()));
            }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed SSG JSON: ") + e.what());
    }
    g.validate();
    return g;
}

Ssg Ssg::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return from_json(j);
}

void ssg_operator_into(const Ssg& g, const Vec& p, Vec& out) {
    if (p.size() != g.size()) throw ShapeError("value vector has the wrong dimension");
    out.assign(g.size(), 0.0);
    for (std::size_t v = 0; v < g.size(); ++v) {
        switch (g.kinds[v]) {
        case NodeKind::Min: {
            double m = std::numeric_limits<double>::infinity();
            for (int t : g.succ[v]) m = std::min(m, p[t]);
            out[v] = m;
            break;
        }
        case NodeKind::Max: {
            double m = 0.0;
            for (int t : g.succ[v]) m = std::max(m, p[t]);
            out[v] = m;
            break;
        }
        case NodeKind::Avg: {
            double acc = 0.0;
            for (const auto& [t, q] : g.dist[v]) acc += q * p[t];
            out[v] = acc;
            break;
        }
        case NodeKind::Sink: out[v] = g.payoff[v]; break;
        }
    }
}

Vec ssg_operator(const Ssg& g, const Vec& p) {
    Vec out;
    ssg_operator_into(g, p, out);
    return out;
}

SsgResult solve_ssg(const Ssg& g, const MannScheme& scheme, const StopRule& stop) {
    if (!classify_scheme(scheme).exact()) throw ConfigError("SSG solving needs a (relaxed) Mann-Kleene scheme");
    const auto f = MonotoneMap::ssg(std::make_shared<const Ssg>(g));
    SsgResult r;
    r.trace = mann_iterate(scheme, MapSequence::constant(f), Vec(g.size(), 0.0), stop);
    r.value = r.trace.final_point();
    return r;
}

namespace {

// Least solution of the chain induced by fixed choices, Kleene from 0.
Vec chain_value(const Ssg& g, const std::vector<int>& choice) {
    const std::size_t n = g.size();
    Vec x(n, 0.0), y(n, 0.0);
    for (std::int64_t it = 0; it < 10000000; ++it) {
        double upd = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double val = 0.0;
            switch (g.kinds[v]) {
            case NodeKind::Min:
            case NodeKind::Max: val = x[choice[v]]; break;
            case NodeKind::Avg:
                for (const auto& [t, q] : g.dist[v]) val += q * x[t];
                break;
            case NodeKind::Sink: val = g.payoff[v]; break;
            }
            y[v] = val;
            upd = std::max(upd, std::abs(val - x[v]));
        }
        x.swap(y);
        if (upd < 1e-12) break;
    }
    return x;
}

}  // namespace

Vec brute_force_value(const Ssg& g, std::int64_t budget) {
    g.validate();
    std::vector<int> mins, maxs;
    double pairs = 1.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (g.kinds[v] == NodeKind::Min) mins.push_back(static_cast<int>(v));
        if (g.kinds[v] == NodeKind::Max) maxs.push_back(static_cast<int>(v));
        if (g.kinds[v] == NodeKind::Min || g.kinds[v] == NodeKind::Max) pairs *= static_cast<double>(g.succ[v].size());
    }
    if (pairs > static_cast<double>(budget)) throw SizeError("too many positional strategy pairs to enumerate");

    // Odometer over successor positions of the given nodes.
    auto advance = [&](const std::vector<int>& nodes, std::vector<int>& pos) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (++pos[i] < static_cast<int>(g.succ[nodes[i]].size())) return true;
            pos[i] = 0;
        }
        return false;
    };

    std::vector<int> choice(g.size(), 0);
    Vec best(g.size(), std::numeric_limits<double>::infinity());
    std::vector<int> pmin(mins.size(), 0);
    do {
        for (std::size_t i = 0; i < mins.size(); ++i) choice[mins[i]] = g.succ[mins[i]][pmin[i]];
        Vec inner(g.size(), 0.0);
        std::vector<int> pmax(maxs.size(), 0);
        do {
            for (std::size_t i = 0; i < maxs.size(); ++i) choice[maxs[i]] = g.succ[maxs[i]][pmax[i]];
            const Vec val = chain_value(g, choice);
            for (std::size_t v = 0; v < g.size(); ++v) inner[v] = std::max(inner[v], val[v]);
        } while (advance(maxs, pmax));
        for (std::size_t v = 0; v < g.size(); ++v) best[v] = std::min(best[v], inner[v]);
    } while (advance(mins, pmin));
    return best;
}

double ssg_distance(const Ssg& a, const Ssg& b) {
    if (!a.same_structure(b)) throw ShapeError("games differ in structure");
    double d = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        if (a.kinds[v] == NodeKind::Sink) d = std::max(d, std::abs(a.payoff[v] - b.payoff[v]));
        if (a.kinds[v] != NodeKind::Avg) continue;
        double pos = 0.0, neg = 0.0;
        for (std::size_t i = 0; i < a.dist[v].size(); ++i) {
            const double diff = a.dist[v][i].second - b.dist[v][i].second;
            (diff > 0.0 ? pos : neg) += std::abs(diff);
        }
        d = std::max({d, pos, neg});
    }
    return d;
}

double ssg_max_deviation(const Ssg& a, const Ssg& b) {
    if (!a.same_structure(b)) throw ShapeError("games differ in structure");
    double d = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v)
        if (a.kinds[v] == NodeKind::Avg)
            for (std::size_t i = 0; i < a.dist[v].size(); ++i)
                d = std::max(d, std::abs(a.dist[v][i].second - b.dist[v][i].second));
    return d;
}

}  // namespace fixmann
