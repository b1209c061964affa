#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fixmann/iteration.hpp"
#include "fixmann/schemes.hpp"
#include "fixmann/vec.hpp"

namespace fixmann {

enum class NodeKind { Min, Max, Avg, Sink };

class Ssg {
public:
    std::vector<std::string> names;
    std::vector<NodeKind> kinds;
    std::vector<std::vector<int>> succ;                      // min / max nodes
    std::vector<std::vector<std::pair<int, double>>> dist;  // average nodes
    Vec payoff;                                              // sink nodes

    std::size_t size() const { return names.size(); }
    int index(const std::string& name) const;
    int add_node(const std::string& name, NodeKind kind);

    // Throws ValidationError.
    void validate() const;
    bool same_structure(const Ssg& o) const;

    nlohmann::json to_json() const;
    static Ssg from_json(const nlohmann::json& j);
    static Ssg load(const std::string& path);
};

Vec ssg_operator(const Ssg& g, const Vec& p);
void ssg_operator_into(const Ssg& g, const Vec& p, Vec& out);

struct SsgResult {
    Vec value;
    IterationTrace trace;
};

SsgResult solve_ssg(const Ssg& g, const MannScheme& scheme, const StopRule& stop);

// Inf over min strategies of sup over max strategies, both positional.
Vec brute_force_value(const Ssg& g, std::int64_t budget = 1000000);

// Exact sup over [0,1]^V of ||f_a(p) - f_b(p)||: per average node the sum of
// positive deviations.
double ssg_distance(const Ssg& a, const Ssg& b);
// Max over average nodes and successors of |eta_a - eta_b|.
double ssg_max_deviation(const Ssg& a, const Ssg& b);

}  // namespace fixmann
