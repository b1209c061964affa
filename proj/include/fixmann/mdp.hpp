#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fixmann/funcspace.hpp"
#include "fixmann/vec.hpp"

namespace fixmann {

struct Transition {
    int to = 0;
    double p = 0.0;
    double r = 0.0;
};

// Finite MDP with a global action list; a state enables action a iff the row
// (s, a) is non-empty. Rows are kept sorted by successor index.
class Mdp {
public:
    Mdp() = default;
    Mdp(std::vector<std::string> states, std::vector<std::string> actions);

    std::size_t num_states() const { return states_.size(); }
    std::size_t num_actions() const { return actions_.size(); }
    std::size_t sa_index(int s, int a) const { return static_cast<std::size_t>(s) * actions_.size() + a; }

    const std::vector<std::string>& state_names() const { return states_; }
    const std::vector<std::string>& action_names() const { return actions_; }
    int state_index(const std::string& name) const;
    int action_index(const std::string& name) const;

    // Zero-probability entries are structural zeros and are not stored.
    void add_transition(int s, int a, int to, double p, double r);
    void set_row(int s, int a, std::vector<Transition> row);
    const std::vector<Transition>& row(int s, int a) const { return rows_[sa_index(s, a)]; }

    bool enabled(int s, int a) const { return !rows_[sa_index(s, a)].empty(); }
    bool is_final(int s) const;
    std::vector<int> enabled_actions(int s) const;
    std::vector<int> final_states() const;
    double max_reward() const;
    // Largest support size over enabled rows.
    std::size_t max_support() const;

    // Same states, actions and enabled pairs.
    bool same_skeleton(const Mdp& o) const;

    nlohmann::json to_json() const;
    // Throws ValidationError if the model fails validate_mdp.
    static Mdp from_json(const nlohmann::json& j);
    static Mdp load(const std::string& path);

private:
    std::vector<std::string> states_;
    std::vector<std::string> actions_;
    std::vector<std::vector<Transition>> rows_;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> problems;
};

ValidationReport validate_mdp(const Mdp& m);

// Number, decimal string or "a/b" fraction string.
double parse_probability(const nlohmann::json& j);

Vec bellman_state(const Mdp& m, const Vec& v);
void bellman_state_into(const Mdp& m, const Vec& v, Vec& out);
// q is laid out as s * |A| + a; disabled pairs stay 0.
Vec bellman_state_action(const Mdp& m, const Vec& q);
void bellman_state_action_into(const Mdp& m, const Vec& q, Vec& out);
// Domain box of the Bellman map of the given kind.
Box bellman_domain(const Mdp& m, BellmanKind kind);
// v(s) = max over enabled a of q(s, a), 0 at final states.
Vec state_values_from_q(const Mdp& m, const Vec& q);
// Argmax with lowest-index tie-break; -1 at final states.
std::vector<int> greedy_policy(const Mdp& m, const Vec& v, double tie_tol = 1e-9);

struct Mec {
    std::vector<int> states;
    std::vector<std::vector<int>> actions;  // actions[i] belongs to states[i]
};

struct MecDecomposition {
    std::vector<Mec> mecs;
    std::vector<int> membership;  // MEC index per state, -1 if none
};

MecDecomposition compute_mecs(const Mdp& m);
bool check_finite_value(const Mdp& m);
bool check_finite_value(const Mdp& m, const MecDecomposition& d);

// u(v)(s) = max_a sum_s' T(s,a,s') v(s')
Vec witness_apply(const Mdp& m, const Vec& v);

struct WitnessCertificate {
    std::shared_ptr<const Mdp> witness_model;  // rewards stripped
    int k = 0;
    double c = 0.0;
    double slack = 1.0;  // 1 - c, kept separately to avoid cancellation
    std::vector<int> rank;
    Vec state_c;
    Vec state_slack;

    MonotoneMap witness() const;
};

WitnessCertificate rank_and_witness(const Mdp& m);

struct Quotients {
    std::vector<int> merge;                   // state -> class
    std::vector<std::vector<int>> classes;    // class -> states
    std::vector<std::pair<int, int>> origin;  // quotient action -> (state, action)
    Mdp quotient;
    Mdp reduced;

    Vec reindex(const Vec& vq) const;
    Vec max_merge(const Vec& v) const;
};

Quotients build_quotients(const Mdp& m);

struct Solution {
    Vec v;
    Vec q;
    std::vector<int> policy;
    std::int64_t iterations = 0;
};

Solution solve_value(const Mdp& m, double tol = 1e-10);

Mdp discount_transform(const Mdp& m, double gamma);

// Upper bound on sup over [0,B] probes of |f_a(v) - f_b(v)| for two Bellman
// maps on the same skeleton; per row it is exact for the action-wise backup.
double model_distance_bound(const Mdp& a, const Mdp& b, double bound, BellmanKind kind = BellmanKind::State);
// Coarser bound when every probability deviates by at most delta.
inline double uniform_model_bound(double delta, std::size_t num_states, double r_max, double bound) {
    return delta * static_cast<double>(num_states) * (r_max + bound);
}

}  // namespace fixmann
