#include "fixmann/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixmann/errors.hpp"

namespace fixmann {

Mdp::Mdp(std::vector<std::string> states, std::vector<std::string> actions)
    : states_(std::move(states)), actions_(std::move(actions)) {
    rows_.assign(states_.size() * actions_.size(), {});
}

int Mdp::state_index(const std::string& name) const {
    for (std::size_t i = 0; i < states_.size(); ++i)
        if (states_[i] == name) return static_cast<int>(i);
    return -1;
}

int Mdp::action_index(const std::string& name) const {
    for (std::size_t i = 0; i < actions_.size(); ++i)
        if (actions_[i] == name) return static_cast<int>(i);
    return -1;
}

void Mdp::add_transition(int s, int a, int to, double p, double r) {
    const int ns = static_cast<int>(num_states()), na = static_cast<int>(num_actions());
    if (s < 0 || s >= ns || to < 0 || to >= ns || a < 0 || a >= na)
        throw ShapeError("transition index out of range");
    if (p == 0.0) return;
    auto& row = rows_[sa_index(s, a)];
    auto it = std::lower_bound(row.begin(), row.end(), to, [](const Transition& t, int v) { return t.to < v; });
    if (it != row.end() && it->to == to)
        throw ValidationError("duplicate transition " + states_[s] + " -" + actions_[a] + "-> " + states_[to]);
    row.insert(it, Transition{to, p, r});
}

void Mdp::set_row(int s, int a, std::vector<Transition> row) {
    std::erase_if(row, [](const Transition& t) { return t.p == 0.0; });
    std::sort(row.begin(), row.end(), [](const Transition& x, const Transition& y) { return x.to < y.to; });
    rows_[sa_index(s, a)] = std::move(row);
}

bool Mdp::is_final(int s) const {
    for (std::size_t a = 0; a < num_actions(); ++a)
        if (enabled(s, static_cast<int>(a))) return false;
    return true;
}

std::vector<int> Mdp::enabled_actions(int s) const {
    std::vector<int> out;
    for (std::size_t a = 0; a < num_actions(); ++a)
        if (enabled(s, static_cast<int>(a))) out.push_back(static_cast<int>(a));
    return out;
}

std::vector<int> Mdp::final_states() const {
    std::vector<int> out;
    for (std::size_t s = 0; s < num_states(); ++s)
        if (is_final(static_cast<int>(s))) out.push_back(static_cast<int>(s));
    return out;
}

double Mdp::max_reward() const {
    double m = 0.0;
    for (const auto& row : rows_)
        for (const auto& t : row) m = std::max(m, t.r);
    return m;
}

std::size_t Mdp::max_support() const {
    std::size_t m = 0;
    for (const auto& row : rows_) m = std::max(m, row.size());
    return m;
}

bool Mdp::same_skeleton(const Mdp& o) const {
    if (states_ != o.states_ || actions_ != o.actions_) return false;
    for (std::size_t i = 0; i < rows_.size(); ++i)
        if (rows_[i].empty() != o.rows_[i].empty()) return false;
    return true;
}

ValidationReport validate_mdp(const Mdp& m) {
    ValidationReport rep;
    auto fail = [&](const std::string& msg) {
        rep.ok = false;
        rep.problems.push_back(msg);
    };
    if (m.num_states() == 0) fail("model has no states");
    const auto& sn = m.state_names();
    const auto& an = m.action_names();
    for (int s = 0; s < static_cast<int>(m.num_states()); ++s) {
        for (int a = 0; a < static_cast<int>(m.num_actions()); ++a) {
            const auto& row = m.row(s, a);
            if (row.empty()) continue;
            double sum = 0.0;
            for (const auto& t : row) {
                if (!(t.p >= 0.0 && t.p <= 1.0) || !std::isfinite(t.p))
                    fail("probability out of [0,1] at (" + sn[s] + ", " + an[a] + ", " + sn[t.to] + ")");
                if (!(t.r >= 0.0) || !std::isfinite(t.r))
                    fail("negative or non-finite reward at (" + sn[s] + ", " + an[a] + ", " + sn[t.to] + ")");
                sum += t.p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                std::ostringstream os;
                os.precision(17);
                os << "row (" << sn[s] << ", " << an[a] << ") sums to " << sum;
                fail(os.str());
            }
        }
    }
    return rep;
}

Box bellman_domain(const Mdp& m, BellmanKind kind) {
    if (kind == BellmanKind::State) return Box::unbounded(m.num_states());
    Box b = Box::unbounded(m.num_states() * m.num_actions());
    for (int s = 0; s < static_cast<int>(m.num_states()); ++s)
        for (int a = 0; a < static_cast<int>(m.num_actions()); ++a)
            if (!m.enabled(s, a)) b.upper[m.sa_index(s, a)] = 0.0;
    return b;
}

void bellman_state_into(const Mdp& m, const Vec& v, Vec& out) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    if (static_cast<int>(v.size()) != ns) throw ShapeError("value vector has the wrong length");
    out.assign(ns, 0.0);
    for (int s = 0; s < ns; ++s) {
        double best = 0.0;
        bool any = false;
        for (int a = 0; a < na; ++a) {
            const auto& row = m.row(s, a);
            if (row.empty()) continue;
            double acc = 0.0;
            for (const auto& t : row) acc += t.p * (t.r + v[t.to]);
            if (!any || acc > best) best = acc;
            any = true;
        }
        out[s] = best;
    }
}

Vec bellman_state(const Mdp& m, const Vec& v) {
    Vec out;
    bellman_state_into(m, v, out);
    return out;
}

Vec state_values_from_q(const Mdp& m, const Vec& q) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    if (q.size() != m.num_states() * m.num_actions()) throw ShapeError("q vector has the wrong length");
    Vec v(ns, 0.0);
    for (int s = 0; s < ns; ++s) {
        bool any = false;
        for (int a = 0; a < na; ++a) {
            if (!m.enabled(s, a)) continue;
            const double x = q[m.sa_index(s, a)];
            if (!any || x > v[s]) v[s] = x;
            any = true;
        }
    }
    return v;
}

void bellman_state_action_into(const Mdp& m, const Vec& q, Vec& out) {
    const Vec vmax = state_values_from_q(m, q);
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    out.assign(q.size(), 0.0);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            double acc = 0.0;
            for (const auto& t : m.row(s, a)) acc += t.p * (t.r + vmax[t.to]);
            out[m.sa_index(s, a)] = acc;
        }
}

Vec bellman_state_action(const Mdp& m, const Vec& q) {
    Vec out;
    bellman_state_action_into(m, q, out);
    return out;
}

std::vector<int> greedy_policy(const Mdp& m, const Vec& v, double tie_tol) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    if (static_cast<int>(v.size()) != ns) throw ShapeError("value vector has the wrong length");
    std::vector<int> pol(ns, -1);
    for (int s = 0; s < ns; ++s) {
        Vec qs(na, -1.0);
        double best = -1.0;
        for (int a = 0; a < na; ++a) {
            const auto& row = m.row(s, a);
            if (row.empty()) continue;
            double acc = 0.0;
            for (const auto& t : row) acc += t.p * (t.r + v[t.to]);
            qs[a] = acc;
            best = std::max(best, acc);
        }
        for (int a = 0; a < na; ++a)
            if (m.enabled(s, a) && qs[a] >= best - tie_tol * (1.0 + std::abs(best))) {
                pol[s] = a;
                break;
            }
    }
    return pol;
}

namespace {

// Tarjan SCCs over alive states with edges given by alive actions.
std::vector<int> scc_ids(const Mdp& m, const std::vector<char>& alive_state,
                         const std::vector<char>& alive_action) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    std::vector<std::vector<int>> adj(ns);
    for (int s = 0; s < ns; ++s) {
        if (!alive_state[s]) continue;
        for (int a = 0; a < na; ++a) {
            if (!alive_action[m.sa_index(s, a)]) continue;
            for (const auto& t : m.row(s, a))
                if (alive_state[t.to]) adj[s].push_back(t.to);
        }
    }
    std::vector<int> index(ns, -1), low(ns, 0), comp(ns, -1), stack;
    std::vector<char> on(ns, 0);
    int counter = 0, ncomp = 0;
    struct Frame {
        int v;
        std::size_t next;
    };
    for (int root = 0; root < ns; ++root) {
        if (!alive_state[root] || index[root] >= 0) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next < adj[f.v].size()) {
                const int w = adj[f.v][f.next++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on[w] = 1;
                    call.push_back({w, 0});
                } else if (on[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const int v = f.v;
            if (low[v] == index[v]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on[w] = 0;
                    comp[w] = ncomp;
                    if (w == v) break;
                }
                ++ncomp;
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    return comp;
}

}  // namespace

MecDecomposition compute_mecs(const Mdp& m) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    std::vector<char> alive_state(ns, 0), alive_action(m.num_states() * m.num_actions(), 0);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            if (m.enabled(s, a)) {
                alive_action[m.sa_index(s, a)] = 1;
                alive_state[s] = 1;
            }
    std::vector<int> comp;
    bool changed = true;
    while (changed) {
        changed = false;
        comp = scc_ids(m, alive_state, alive_action);
        for (int s = 0; s < ns; ++s) {
            if (!alive_state[s]) continue;
            bool keep = false;
            for (int a = 0; a < na; ++a) {
                char& act = alive_action[m.sa_index(s, a)];
                if (!act) continue;
                for (const auto& t : m.row(s, a))
                    if (!alive_state[t.to] || comp[t.to] != comp[s]) {
                        act = 0;
                        changed = true;
                        break;
                    }
                keep = keep || act;
            }
            if (!keep) {
                alive_state[s] = 0;
                changed = true;
            }
        }
    }
    MecDecomposition d;
    d.membership.assign(ns, -1);
    std::vector<int> comp_to_mec;
    for (int s = 0; s < ns; ++s) {
        if (!alive_state[s]) continue;
        const int c = comp[s];
        if (c >= static_cast<int>(comp_to_mec.size())) comp_to_mec.resize(c + 1, -1);
        if (comp_to_mec[c] < 0) {
            comp_to_mec[c] = static_cast<int>(d.mecs.size());
            d.mecs.emplace_back();
        }
        Mec& mec = d.mecs[comp_to_mec[c]];
        mec.states.push_back(s);
        std::vector<int> acts;
        for (int a = 0; a < na; ++a)
            if (alive_action[m.sa_index(s, a)]) acts.push_back(a);
        mec.actions.push_back(std::move(acts));
        d.membership[s] = comp_to_mec[c];
    }
    return d;
}

bool check_finite_value(const Mdp& m, const MecDecomposition& d) {
    for (const auto& mec : d.mecs)
        for (std::size_t i = 0; i < mec.states.size(); ++i)
            for (int a : mec.actions[i])
                for (const auto& t : m.row(mec.states[i], a))
                    if (t.r != 0.0) return false;
    return true;
}

bool check_finite_value(const Mdp& m) { return check_finite_value(m, compute_mecs(m)); }

Vec witness_apply(const Mdp& m, const Vec& v) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    if (static_cast<int>(v.size()) != ns) throw ShapeError("vector has the wrong length");
    Vec out(ns, 0.0);
    for (int s = 0; s < ns; ++s) {
        bool any = false;
        for (int a = 0; a < na; ++a) {
            const auto& row = m.row(s, a);
            if (row.empty()) continue;
            double acc = 0.0;
            for (const auto& t : row) acc += t.p * v[t.to];
            if (!any || acc > out[s]) out[s] = acc;
            any = true;
        }
    }
    return out;
}

MonotoneMap WitnessCertificate::witness() const { return MonotoneMap::bellman(witness_model, BellmanKind::State); }

WitnessCertificate rank_and_witness(const Mdp& m) {
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    if (m.final_states().empty()) throw NoFinalStateError("model has no final state");
    if (!compute_mecs(m).mecs.empty()) throw NotSimpleError("model has end components");

    WitnessCertificate w;
    w.rank.assign(ns, -1);
    w.state_c.assign(ns, 0.0);
    w.state_slack.assign(ns, 1.0);
    std::vector<int> order;
    for (int s = 0; s < ns; ++s)
        if (m.is_final(s)) {
            w.rank[s] = 0;
            order.push_back(s);
        }
    for (int level = 1; static_cast<int>(order.size()) < ns; ++level) {
        std::vector<int> fresh;
        for (int s = 0; s < ns; ++s) {
            if (w.rank[s] >= 0) continue;
            bool all = true;
            for (int a = 0; a < na && all; ++a) {
                const auto& row = m.row(s, a);
                if (row.empty()) continue;
                bool hit = false;
                for (const auto& t : row)
                    if (w.rank[t.to] >= 0) hit = true;
                all = hit;
            }
            if (all) fresh.push_back(s);
        }
        if (fresh.empty()) throw NotSimpleError("rank construction stalled");
        for (int s : fresh) w.rank[s] = level;
        for (int s : fresh) {
            double slack = 1.0;
            for (int a = 0; a < na; ++a) {
                const auto& row = m.row(s, a);
                if (row.empty()) continue;
                // Successor of minimal rank, lowest index on ties.
                const Transition* best = nullptr;
                for (const auto& t : row) {
                    if (w.rank[t.to] < 0 || w.rank[t.to] >= level) continue;
                    if (!best || w.rank[t.to] < w.rank[best->to]) best = &t;
                }
                slack = std::min(slack, best->p * w.state_slack[best->to]);
            }
            w.state_slack[s] = slack;
            w.state_c[s] = 1.0 - slack;
        }
        order.insert(order.end(), fresh.begin(), fresh.end());
    }
    w.k = ns;
    w.slack = 1.0;
    for (double d : w.state_slack) w.slack = std::min(w.slack, d);
    w.c = 1.0 - w.slack;

    Mdp stripped(m.state_names(), m.action_names());
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            auto row = m.row(s, a);
            for (auto& t : row) t.r = 0.0;
            if (!row.empty()) stripped.set_row(s, a, std::move(row));
        }
    w.witness_model = std::make_shared<const Mdp>(std::move(stripped));
    return w;
}

Mdp discount_transform(const Mdp& m, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw RangeError("discount factor must lie in (0,1)");
    std::vector<std::string> names = m.state_names();
    std::string sink = "sink";
    while (m.state_index(sink) >= 0) sink += "_";
    names.push_back(sink);
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    Mdp out(names, m.action_names());
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            const auto& row = m.row(s, a);
            if (row.empty()) continue;
            std::vector<Transition> scaled;
            for (const auto& t : row) scaled.push_back({t.to, gamma * t.p, t.r});
            scaled.push_back({ns, 1.0 - gamma, 0.0});
            out.set_row(s, a, std::move(scaled));
        }
    return out;
}

double model_distance_bound(const Mdp& a, const Mdp& b, double bound, BellmanKind) {
    if (!a.same_skeleton(b)) throw ShapeError("models do not share a skeleton");
    if (!(bound >= 0.0)) throw RangeError("probe bound must be >= 0");
    const int ns = static_cast<int>(a.num_states()), na = static_cast<int>(a.num_actions());
    double worst = 0.0;
    Vec da(ns), ra(ns);
    for (int s = 0; s < ns; ++s)
        for (int act = 0; act < na; ++act) {
            if (!a.enabled(s, act)) continue;
            // Row difference as d(s') on probabilities and c on expected reward.
            std::fill(da.begin(), da.end(), 0.0);
            double c = 0.0;
            for (const auto& t : a.row(s, act)) {
                da[t.to] += t.p;
                c += t.p * t.r;
            }
            for (const auto& t : b.row(s, act)) {
                da[t.to] -= t.p;
                c -= t.p * t.r;
            }
            double pos = 0.0, neg = 0.0;
            for (double x : da) (x > 0 ? pos : neg) += std::abs(x);
            // sup over v in [0,B]^S of |c + sum d v|, attained at a vertex.
            worst = std::max({worst, std::abs(c + bound * pos), std::abs(c - bound * neg)});
        }
    return worst;
}

}  // namespace fixmann
