#include "fixmann/funcspace.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "fixmann/errors.hpp"
#include "fixmann/mdp.hpp"
#include "fixmann/ssg.hpp"

namespace fixmann {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Box Box::unbounded(std::size_t d) { return Box{Vec(d, kInf)}; }
Box Box::cube(std::size_t d, double u) { return Box{Vec(d, u)}; }

bool Box::bounded() const {
    for (double u : upper)
        if (!std::isfinite(u)) return false;
    return true;
}

bool Box::contains(const Vec& x, double tol) const {
    if (x.size() != upper.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || x[i] < 0.0) return false;
        if (x[i] > upper[i] + tol) return false;
    }
    return true;
}

struct MonotoneMap::Node {
    MapOp op = MapOp::Identity;
    Box box;
    Vec c;
    std::size_t index = 0;
    std::vector<Vec> w;
    std::vector<MonotoneMap> args;
    int power = 1;
    double lambda = 0.0;
    std::shared_ptr<const Mdp> mdp;
    BellmanKind kind = BellmanKind::State;
    std::shared_ptr<const Ssg> game;
    std::function<Vec(const Vec&)> fn;
    std::string name;
    bool structural = true;
};

namespace {

void check_nonneg(const Vec& v, std::size_t d, const char* what) {
    if (v.size() != d) throw ShapeError(std::string(what) + " has the wrong length");
    for (double x : v)
        if (!(x >= 0.0) || !std::isfinite(x)) throw RangeError(std::string(what) + " must be finite and >= 0");
}

const Box& common_box(const std::vector<MonotoneMap>& args) {
    if (args.empty()) throw ShapeError("combinator needs at least one argument");
    for (const auto& a : args)
        if (!(a.domain() == args.front().domain())) throw ShapeError("arguments have different domains");
    return args.front().domain();
}

}  // namespace

MonotoneMap MonotoneMap::finish(std::shared_ptr<Node> n) {
    for (const auto& a : n->args) n->structural = n->structural && a.structural();
    if (n->op == MapOp::Custom) n->structural = false;
    MonotoneMap m(n);
    if (n->structural && n->op != MapOp::Bellman && n->op != MapOp::SsgOp) {
        // Monotone maps send the box into itself iff they send its top into it.
        Vec top;
        m.apply(n->box.upper, top);
        for (std::size_t i = 0; i < top.size(); ++i) {
            if (std::isnan(top[i])) throw DomainError("map is undefined at the top of its domain");
            if (std::isfinite(n->box.upper[i]) && top[i] > n->box.upper[i] * (1 + 1e-12) + 1e-12)
                throw DomainError("map leaves its domain");
        }
    }
    return m;
}

MonotoneMap MonotoneMap::constant(const Box& box, Vec c) {
    check_nonneg(c, box.dim(), "constant");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Constant;
    n->box = box;
    n->c = std::move(c);
    return finish(n);
}

MonotoneMap MonotoneMap::identity(const Box& box) {
    auto n = std::make_shared<Node>();
    n->op = MapOp::Identity;
    n->box = box;
    return finish(n);
}

MonotoneMap MonotoneMap::coordinate(const Box& box, std::size_t i) {
    if (i >= box.dim()) throw ShapeError("coordinate index out of range");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Coordinate;
    n->box = box;
    n->index = i;
    return finish(n);
}

MonotoneMap MonotoneMap::affine(const Box& box, std::vector<Vec> w, Vec b) {
    const std::size_t d = box.dim();
    if (w.size() != d) throw ShapeError("affine weight matrix has the wrong number of rows");
    for (const auto& row : w) {
        check_nonneg(row, d, "affine weight row");
        double s = 0.0;
        for (double x : row) s += x;
        if (s > 1.0 + 1e-12) throw RangeError("affine weight row sums must be <= 1");
    }
    check_nonneg(b, d, "affine bias");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Affine;
    n->box = box;
    n->w = std::move(w);
    n->c = std::move(b);
    return finish(n);
}

MonotoneMap MonotoneMap::pointwise_max(std::vector<MonotoneMap> args) {
    auto n = std::make_shared<Node>();
    n->op = MapOp::Max;
    n->box = common_box(args);
    n->args = std::move(args);
    return finish(n);
}

MonotoneMap MonotoneMap::pointwise_min(std::vector<MonotoneMap> args) {
    auto n = std::make_shared<Node>();
    n->op = MapOp::Min;
    n->box = common_box(args);
    n->args = std::move(args);
    return finish(n);
}

MonotoneMap MonotoneMap::trunc_add(const MonotoneMap& g, Vec c) {
    check_nonneg(c, g.dim(), "truncated addend");
    auto n = std::make_shared<Node>();
    n->op = MapOp::TruncAdd;
    n->box = g.domain();
    n->args = {g};
    n->c = std::move(c);
    return finish(n);
}

MonotoneMap MonotoneMap::trunc_sub(const MonotoneMap& g, Vec c) {
    check_nonneg(c, g.dim(), "truncated subtrahend");
    auto n = std::make_shared<Node>();
    n->op = MapOp::TruncSub;
    n->box = g.domain();
    n->args = {g};
    n->c = std::move(c);
    return finish(n);
}

MonotoneMap MonotoneMap::compose(const MonotoneMap& outer, const MonotoneMap& inner) {
    auto n = std::make_shared<Node>();
    n->op = MapOp::Compose;
    n->box = common_box({outer, inner});
    n->args = {outer, inner};
    return finish(n);
}

MonotoneMap MonotoneMap::power(const MonotoneMap& g, int k) {
    if (k < 0) throw RangeError("power must be >= 0");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Power;
    n->box = g.domain();
    n->args = {g};
    n->power = k;
    return finish(n);
}

MonotoneMap MonotoneMap::bellman(std::shared_ptr<const Mdp> m, BellmanKind kind) {
    if (!m) throw ConfigError("Bellman node needs a model");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Bellman;
    n->box = bellman_domain(*m, kind);
    n->mdp = std::move(m);
    n->kind = kind;
    return finish(n);
}

MonotoneMap MonotoneMap::ssg(std::shared_ptr<const Ssg> g) {
    if (!g) throw ConfigError("SSG node needs a game");
    auto n = std::make_shared<Node>();
    n->op = MapOp::SsgOp;
    n->box = Box::cube(g->size(), 1.0);
    n->game = std::move(g);
    return finish(n);
}

MonotoneMap MonotoneMap::join_identity(const MonotoneMap& g) {
    auto n = std::make_shared<Node>();
    n->op = MapOp::JoinIdentity;
    n->box = g.domain();
    n->args = {g};
    return finish(n);
}

MonotoneMap MonotoneMap::convex(double lambda, const MonotoneMap& g, const MonotoneMap& h) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw RangeError("convex weight must lie in [0,1]");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Convex;
    n->box = common_box({g, h});
    n->args = {g, h};
    n->lambda = lambda;
    return finish(n);
}

MonotoneMap MonotoneMap::custom(const Box& box, std::function<Vec(const Vec&)> fn, std::string name) {
    if (!fn) throw ConfigError("custom map needs a callable");
    auto n = std::make_shared<Node>();
    n->op = MapOp::Custom;
    n->box = box;
    n->fn = std::move(fn);
    n->name = std::move(name);
    return finish(n);
}

std::size_t MonotoneMap::dim() const { return node_->box.dim(); }
const Box& MonotoneMap::domain() const { return node_->box; }
MapOp MonotoneMap::op() const { return node_->op; }
bool MonotoneMap::structural() const { return node_->structural; }
const Mdp* MonotoneMap::mdp() const { return node_->mdp.get(); }
std::shared_ptr<const Mdp> MonotoneMap::mdp_ptr() const { return node_->mdp; }
BellmanKind MonotoneMap::bellman_kind() const { return node_->kind; }
const Ssg* MonotoneMap::game() const { return node_->game.get(); }

Vec MonotoneMap::operator()(const Vec& x) const {
    if (x.size() != dim()) throw ShapeError("argument has the wrong dimension");
    if (!node_->box.contains(x, 1e-9)) throw DomainError("argument outside the domain");
    Vec out;
    apply(x, out);
    return out;
}

void MonotoneMap::apply(const Vec& x, Vec& out) const {
    const Node& n = *node_;
    const std::size_t d = n.box.dim();
    switch (n.op) {
    case MapOp::Constant: out = n.c; return;
    case MapOp::Identity: out = x; return;
    case MapOp::Coordinate: out.assign(d, x[n.index]); return;
    case MapOp::Affine:
        out.assign(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            double s = n.c[i];
            for (std::size_t j = 0; j < d; ++j)
                if (n.w[i][j] != 0.0) s += n.w[i][j] * x[j];
            out[i] = s;
        }
        return;
    case MapOp::Max:
    case MapOp::Min: {
        n.args[0].apply(x, out);
        Vec tmp;
        for (std::size_t k = 1; k < n.args.size(); ++k) {
            n.args[k].apply(x, tmp);
            for (std::size_t i = 0; i < d; ++i)
                out[i] = n.op == MapOp::Max ? std::max(out[i], tmp[i]) : std::min(out[i], tmp[i]);
        }
        return;
    }
    case MapOp::TruncAdd:
        n.args[0].apply(x, out);
        for (std::size_t i = 0; i < d; ++i) out[i] = std::min(out[i] + n.c[i], n.box.upper[i]);
        return;
    case MapOp::TruncSub:
        n.args[0].apply(x, out);
        for (std::size_t i = 0; i < d; ++i) out[i] = std::max(out[i] - n.c[i], 0.0);
        return;
    case MapOp::Compose: {
        Vec tmp;
        n.args[1].apply(x, tmp);
        n.args[0].apply(tmp, out);
        return;
    }
    case MapOp::Power: {
        out = x;
        Vec tmp;
        for (int k = 0; k < n.power; ++k) {
            n.args[0].apply(out, tmp);
            out.swap(tmp);
        }
        return;
    }
    case MapOp::Bellman:
        if (n.kind == BellmanKind::State)
            bellman_state_into(*n.mdp, x, out);
        else
            bellman_state_action_into(*n.mdp, x, out);
        return;
    case MapOp::SsgOp: ssg_operator_into(*n.game, x, out); return;
    case MapOp::JoinIdentity:
        n.args[0].apply(x, out);
        for (std::size_t i = 0; i < d; ++i) out[i] = std::max(out[i], x[i]);
        return;
    case MapOp::Convex: {
        Vec tmp;
        n.args[0].apply(x, out);
        n.args[1].apply(x, tmp);
        const double l = n.lambda;
        for (std::size_t i = 0; i < d; ++i) {
            // Skip zero weights so that 0 * inf stays 0 on unbounded boxes.
            const double a = l == 0.0 ? 0.0 : l * out[i];
            const double b = l == 1.0 ? 0.0 : (1.0 - l) * tmp[i];
            out[i] = a + b;
        }
        return;
    }
    case MapOp::Custom: out = n.fn(x); return;
    }
}

namespace {

json upper_to_json(const Vec& upper) {
    json a = json::array();
    for (double u : upper) a.push_back(std::isfinite(u) ? json(u) : json(nullptr));
    return a;
}

Vec upper_from_json(const json& j) {
    Vec u;
    for (const auto& e : j) u.push_back(e.is_null() ? kInf : e.get<double>());
    return u;
}

json node_to_json(const MonotoneMap& m, const MonotoneMap::Node& n);

}  // namespace

json MonotoneMap::to_json() const {
    return json{{"schema", "fixmann.map"},
                {"version", 1},
                {"dim", dim()},
                {"upper", upper_to_json(domain().upper)},
                {"body", node_to_json(*this, *node_)}};
}

namespace {

json node_to_json(const MonotoneMap& m, const MonotoneMap::Node& n) {
    auto args = [&]() {
        json a = json::array();
        for (const auto& g : n.args) a.push_back(g.to_json().at("body"));
        return a;
    };
    switch (n.op) {
    case MapOp::Constant: return json{{"op", "constant"}, {"c", n.c}};
    case MapOp::Identity: return json{{"op", "identity"}};
    case MapOp::Coordinate: return json{{"op", "coordinate"}, {"i", n.index}};
    case MapOp::Affine: return json{{"op", "affine"}, {"w", n.w}, {"b", n.c}};
    case MapOp::Max: return json{{"op", "max"}, {"args", args()}};
    case MapOp::Min: return json{{"op", "min"}, {"args", args()}};
    case MapOp::TruncAdd: return json{{"op", "trunc_add"}, {"arg", args()[0]}, {"c", n.c}};
    case MapOp::TruncSub: return json{{"op", "trunc_sub"}, {"arg", args()[0]}, {"c", n.c}};
    case MapOp::Compose: return json{{"op", "compose"}, {"outer", args()[0]}, {"inner", args()[1]}};
    case MapOp::Power: return json{{"op", "power"}, {"arg", args()[0]}, {"n", n.power}};
    case MapOp::Bellman:
        return json{{"op", "bellman"},
                    {"kind", n.kind == BellmanKind::State ? "state" : "state_action"},
                    {"mdp", n.mdp->to_json()}};
    case MapOp::SsgOp: return json{{"op", "ssg"}, {"game", n.game->to_json()}};
    case MapOp::JoinIdentity: return json{{"op", "join_identity"}, {"arg", args()[0]}};
    case MapOp::Convex: return json{{"op", "convex"}, {"lambda", n.lambda}, {"f", args()[0]}, {"g", args()[1]}};
    case MapOp::Custom: throw ConfigError("custom map '" + n.name + "' cannot be serialized");
    }
    (void)m;
    return json{};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || base.empty()) return rel;
    return base + "/" + rel;
}

MonotoneMap node_from_json(const json& j, const Box& box, const std::string& base) {
    const std::string op = j.at("op").get<std::string>();
    auto vec = [&](const char* key) { return j.at(key).get<Vec>(); };
    auto list = [&]() {
        std::vector<MonotoneMap> out;
        for (const auto& a : j.at("args")) out.push_back(node_from_json(a, box, base));
        return out;
    };
    auto sub = [&](const char* key) { return node_from_json(j.at(key), box, base); };
    if (op == "constant") return MonotoneMap::constant(box, vec("c"));
    if (op == "identity") return MonotoneMap::identity(box);
    if (op == "coordinate") return MonotoneMap::coordinate(box, j.at("i").get<std::size_t>());
    if (op == "affine") return MonotoneMap::affine(box, j.at("w").get<std::vector<Vec>>(), vec("b"));
    if (op == "max") return MonotoneMap::pointwise_max(list());
    if (op == "min") return MonotoneMap::pointwise_min(list());
    if (op == "trunc_add") return MonotoneMap::trunc_add(sub("arg"), vec("c"));
    if (op == "trunc_sub") return MonotoneMap::trunc_sub(sub("arg"), vec("c"));
    if (op == "compose") return MonotoneMap::compose(sub("outer"), sub("inner"));
    if (op == "power") return MonotoneMap::power(sub("arg"), j.at("n").get<int>());
    if (op == "join_identity") return MonotoneMap::join_identity(sub("arg"));
    if (op == "convex") return MonotoneMap::convex(j.at("lambda").get<double>(), sub("f"), sub("g"));
    if (op == "bellman") {
        const auto& src = j.at("mdp");
        Mdp m = src.is_string() ? Mdp::load(join_path(base, src.get<std::string>())) : Mdp::from_json(src);
        const std::string kind = j.value("kind", std::string("state"));
        if (kind != "state" && kind != "state_action") throw ConfigError("unknown Bellman kind: " + kind);
        return MonotoneMap::bellman(std::make_shared<const Mdp>(std::move(m)),
                                    kind == "state" ? BellmanKind::State : BellmanKind::StateAction);
    }
    if (op == "ssg") {
        const auto& src = j.at("game");
        Ssg g = src.is_string() ? Ssg::load(join_path(base, src.get<std::string>())) : Ssg::from_json(src);
        return MonotoneMap::ssg(std::make_shared<const Ssg>(std::move(g)));
    }
    throw ConfigError("unknown map combinator: " + op);
}

}  // namespace

MonotoneMap MonotoneMap::from_json(const json& j, const std::string& base_dir) {
    try {
        if (j.is_string()) {
            const std::string path = join_path(base_dir, j.get<std::string>());
            const auto slash = path.find_last_of('/');
            return from_json(read_json_file(path), slash == std::string::npos ? "" : path.substr(0, slash));
        }
        if (j.value("version", 1) != 1) throw ConfigError("unsupported map schema version");
        const json& body = j.contains("body") ? j.at("body") : j;
        Box box;
        if (j.contains("upper"))
            box.upper = upper_from_json(j.at("upper"));
        else if (j.contains("dim"))
            box = Box::unbounded(j.at("dim").get<std::size_t>());
        if (box.dim() == 0) {
            const std::string op = body.at("op").get<std::string>();
            if (op != "bellman" && op != "ssg") throw ConfigError("map JSON needs 'dim' or 'upper'");
        }
        return node_from_json(body, box, base_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed map JSON: ") + e.what());
    }
}

MapSequence::MapSequence(Box domain, Eval eval, std::optional<MonotoneMap> limit)
    : domain_(std::move(domain)), eval_(std::move(eval)), limit_(std::move(limit)) {
    if (!eval_) throw ConfigError("map sequence needs an evaluator");
}

MapSequence MapSequence::constant(const MonotoneMap& f) {
    return MapSequence(f.domain(), [f](std::int64_t, const Vec& x, Vec& out) { f.apply(x, out); }, f);
}

MapSequence MapSequence::from_provider(std::function<MonotoneMap(std::int64_t)> provider,
                                       std::optional<MonotoneMap> limit) {
    MonotoneMap first = provider(1);
    return MapSequence(
        first.domain(),
        [provider](std::int64_t n, const Vec& x, Vec& out) { provider(n).apply(x, out); },
        std::move(limit));
}

namespace {

Vec probe_upper(const Box& box, std::optional<double> bound) {
    Vec ub = box.upper;
    for (double& u : ub) {
        if (std::isfinite(u)) continue;
        if (!bound) throw ConfigError("unbounded domain needs a probe bound");
        u = *bound;
    }
    return ub;
}

}  // namespace

CheckReport check_monotone_nonexpansive(const MonotoneMap& f, int samples, std::uint64_t seed, double tol,
                                        std::optional<double> probe_bound) {
    if (samples < 1) throw RangeError("samples must be >= 1");
    const Vec ub = probe_upper(f.domain(), probe_bound);
    const std::size_t d = f.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    CheckReport rep;
    rep.samples = static_cast<std::size_t>(samples);
    Vec x(d), y(d), fx, fy;
    for (int k = 0; k < samples; ++k) {
        for (std::size_t i = 0; i < d; ++i) x[i] = u01(rng) * ub[i];
        const int mode = k % 3;
        for (std::size_t i = 0; i < d; ++i) {
            if (mode == 0)
                y[i] = x[i] + u01(rng) * (ub[i] - x[i]);  // y >= x
            else if (mode == 1)
                y[i] = u01(rng) * ub[i];
            else
                y[i] = std::clamp(x[i] + (u01(rng) - 0.5) * 1e-3 * (ub[i] + 1.0), 0.0, ub[i]);
        }
        f.apply(x, fx);
        f.apply(y, fy);
        if (mode == 0) {
            for (std::size_t i = 0; i < d; ++i) {
                const double gap = fx[i] - fy[i];
                if (gap > tol) {
                    ++rep.monotone_violations;
                    rep.worst_order_gap = std::max(rep.worst_order_gap, gap);
                    break;
                }
            }
        }
        const double excess = sup_dist(fx, fy) - sup_dist(x, y);
        if (excess > tol) {
            ++rep.expansion_violations;
            rep.worst_expansion = std::max(rep.worst_expansion, excess);
        }
    }
    return rep;
}

std::vector<Vec> probe_points(const Box& box, const ProbeGrid& grid) {
    const Vec ub = probe_upper(box, grid.bound);
    const std::size_t d = box.dim();
    std::vector<Vec> pts;
    const int m = std::max(grid.per_axis, 2);
    double total = 1.0;
    for (std::size_t i = 0; i < d; ++i) total *= m;
    if (total <= 20000.0) {
        std::vector<int> idx(d, 0);
        while (true) {
            Vec p(d);
            for (std::size_t i = 0; i < d; ++i) p[i] = ub[i] * idx[i] / (m - 1);
            pts.push_back(std::move(p));
            std::size_t k = 0;
            while (k < d && ++idx[k] == m) idx[k++] = 0;
            if (k == d) break;
        }
    } else {
        pts.push_back(Vec(d, 0.0));
        pts.push_back(ub);
    }
    std::mt19937_64 rng(grid.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < grid.random_points; ++k) {
        Vec p(d);
        for (std::size_t i = 0; i < d; ++i) p[i] = u01(rng) * ub[i];
        pts.push_back(std::move(p));
    }
    return pts;
}

double grid_distance(const MonotoneMap& f, const MonotoneMap& g, const ProbeGrid& grid) {
    if (f.dim() != g.dim()) throw ShapeError("maps have different dimensions");
    double best = 0.0;
    Vec fx, gx;
    for (const Vec& p : probe_points(f.domain(), grid)) {
        f.apply(p, fx);
        g.apply(p, gx);
        best = std::max(best, sup_dist(fx, gx));
    }
    return best;
}

double sup_distance(const MonotoneMap& f, const MonotoneMap& g, const ProbeGrid& grid) {
    if (f.dim() != g.dim()) throw ShapeError("maps have different dimensions");
    if (f.op() == MapOp::Bellman && g.op() == MapOp::Bellman && f.bellman_kind() == g.bellman_kind() &&
        f.mdp()->same_skeleton(*g.mdp())) {
        if (!grid.bound) throw ConfigError("model-backed distance needs a value probe bound");
        return model_distance_bound(*f.mdp(), *g.mdp(), *grid.bound, f.bellman_kind());
    }
    if (f.op() == MapOp::SsgOp && g.op() == MapOp::SsgOp && f.game()->same_structure(*g.game()))
        return ssg_distance(*f.game(), *g.game());
    return grid_distance(f, g, grid);
}

}  // namespace fixmann
