#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixmann/vec.hpp"

namespace fixmann {

class Mdp;
class Ssg;

enum class BellmanKind { State, StateAction };

// Box [0, upper] in R^d; components of upper may be +inf.
struct Box {
    Vec upper;

    static Box unbounded(std::size_t d);
    static Box cube(std::size_t d, double u);

    std::size_t dim() const { return upper.size(); }
    bool bounded() const;
    bool contains(const Vec& x, double tol = 1e-12) const;
    bool operator==(const Box& o) const { return upper == o.upper; }
};

enum class MapOp {
    Constant,
    Identity,
    Coordinate,
    Affine,
    Max,
    Min,
    TruncAdd,
    TruncSub,
    Compose,
    Power,
    Bellman,
    SsgOp,
    JoinIdentity,
    Convex,
    Custom
};

// Immutable expression tree of monotone non-expansive combinators.
class MonotoneMap {
public:
    struct Node;

    static MonotoneMap constant(const Box& box, Vec c);
    static MonotoneMap identity(const Box& box);
    // x -> (x_i, ..., x_i)
    static MonotoneMap coordinate(const Box& box, std::size_t i);
    // x -> W x + b with W >= 0, row sums <= 1, b >= 0.
    static MonotoneMap affine(const Box& box, std::vector<Vec> w, Vec b);
    static MonotoneMap pointwise_max(std::vector<MonotoneMap> args);
    static MonotoneMap pointwise_min(std::vector<MonotoneMap> args);
    // min(g(x) + c, upper)
    static MonotoneMap trunc_add(const MonotoneMap& g, Vec c);
    // max(g(x) - c, 0)
    static MonotoneMap trunc_sub(const MonotoneMap& g, Vec c);
    static MonotoneMap compose(const MonotoneMap& outer, const MonotoneMap& inner);
    static MonotoneMap power(const MonotoneMap& g, int n);
    static MonotoneMap bellman(std::shared_ptr<const Mdp> m, BellmanKind kind);
    static MonotoneMap ssg(std::shared_ptr<const Ssg> g);
    static MonotoneMap join_identity(const MonotoneMap& g);
    // lambda * g + (1 - lambda) * h
    static MonotoneMap convex(double lambda, const MonotoneMap& g, const MonotoneMap& h);
    // No structural guarantee; only the empirical checker vouches for it.
    static MonotoneMap custom(const Box& box, std::function<Vec(const Vec&)> fn, std::string name = "custom");

    std::size_t dim() const;
    const Box& domain() const;
    MapOp op() const;
    // False if any Custom node occurs in the tree.
    bool structural() const;

    // Checked evaluation: throws DomainError for x outside the domain.
    Vec operator()(const Vec& x) const;
    // Unchecked evaluation.
    void apply(const Vec& x, Vec& out) const;

    // Root-level model access, null unless op() is Bellman / SsgOp.
    const Mdp* mdp() const;
    std::shared_ptr<const Mdp> mdp_ptr() const;
    BellmanKind bellman_kind() const;
    const Ssg* game() const;

    nlohmann::json to_json() const;
    // Bellman / SsgOp nodes may reference model files relative to base_dir.
    static MonotoneMap from_json(const nlohmann::json& j, const std::string& base_dir = "");

private:
    explicit MonotoneMap(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static MonotoneMap finish(std::shared_ptr<Node> n);
    std::shared_ptr<const Node> node_;
};

// Sequence of maps n -> f_n sharing one domain.
class MapSequence {
public:
    using Eval = std::function<void(std::int64_t, const Vec&, Vec&)>;

    MapSequence(Box domain, Eval eval, std::optional<MonotoneMap> limit = std::nullopt);
    static MapSequence constant(const MonotoneMap& f);
    static MapSequence from_provider(std::function<MonotoneMap(std::int64_t)> provider,
                                     std::optional<MonotoneMap> limit = std::nullopt);

    std::size_t dim() const { return domain_.dim(); }
    const Box& domain() const { return domain_; }
    const std::optional<MonotoneMap>& known_limit() const { return limit_; }
    void apply(std::int64_t n, const Vec& x, Vec& out) const { eval_(n, x, out); }

private:
    Box domain_;
    Eval eval_;
    std::optional<MonotoneMap> limit_;
};

struct CheckReport {
    std::size_t samples = 0;
    std::size_t monotone_violations = 0;
    std::size_t expansion_violations = 0;
    double worst_order_gap = 0.0;
    double worst_expansion = 0.0;

    bool monotone() const { return monotone_violations == 0; }
    bool nonexpansive() const { return expansion_violations == 0; }
    bool passed() const { return monotone() && nonexpansive(); }
};

// Unbounded components are probed on [0, probe_bound].
CheckReport check_monotone_nonexpansive(const MonotoneMap& f, int samples, std::uint64_t seed, double tol,
                                        std::optional<double> probe_bound = std::nullopt);

struct ProbeGrid {
    int per_axis = 11;
    int random_points = 1000;
    std::optional<double> bound;
    std::uint64_t seed = 0;
};

// Probe points used by grid_distance (full grid when small, plus random points).
std::vector<Vec> probe_points(const Box& box, const ProbeGrid& grid);
// Max over probe points of ||f(x) - g(x)||: a lower bound on the sup distance.
double grid_distance(const MonotoneMap& f, const MonotoneMap& g, const ProbeGrid& grid);
// Model-backed closed form for Bellman / SSG pairs on a shared skeleton,
// grid_distance otherwise.
double sup_distance(const MonotoneMap& f, const MonotoneMap& g, const ProbeGrid& grid);

}  // namespace fixmann
