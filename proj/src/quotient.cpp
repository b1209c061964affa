#include <algorithm>
#include <cmath>

#include "fixmann/errors.hpp"
#include "fixmann/mdp.hpp"

namespace fixmann {

Vec Quotients::reindex(const Vec& vq) const {
    Vec v(merge.size());
    for (std::size_t s = 0; s < merge.size(); ++s) v[s] = vq[merge[s]];
    return v;
}

Vec Quotients::max_merge(const Vec& v) const {
    Vec out(classes.size(), 0.0);
    for (std::size_t c = 0; c < classes.size(); ++c)
        for (int s : classes[c]) out[c] = std::max(out[c], v[s]);
    return out;
}

Quotients build_quotients(const Mdp& m) {
    const MecDecomposition d = compute_mecs(m);
    if (!check_finite_value(m, d)) throw InfiniteValueError("positive reward inside an end component");
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());

    Quotients q;
    q.merge.assign(ns, -1);
    for (int s = 0; s < ns; ++s) {
        if (q.merge[s] >= 0) continue;
        const int c = static_cast<int>(q.classes.size());
        const int mi = d.membership[s];
        if (mi >= 0) {
            q.classes.push_back(d.mecs[mi].states);
        } else {
            q.classes.push_back({s});
        }
        for (int t : q.classes.back()) q.merge[t] = c;
    }

    std::vector<std::string> names;
    for (const auto& cls : q.classes) {
        if (d.membership[cls.front()] < 0) {
            names.push_back(m.state_names()[cls.front()]);
            continue;
        }
        std::string n = "[";
        for (std::size_t i = 0; i < cls.size(); ++i) n += (i ? " " : "") + m.state_names()[cls[i]];
        names.push_back(n + "]");
    }
    std::vector<std::string> actions;
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            if (m.enabled(s, a)) {
                q.origin.emplace_back(s, a);
                actions.push_back(m.state_names()[s] + "." + m.action_names()[a]);
            }

    const int nc = static_cast<int>(q.classes.size());
    q.quotient = Mdp(names, actions);
    q.reduced = Mdp(names, actions);
    Vec tm(nc), rm(nc);
    for (int j = 0; j < static_cast<int>(q.origin.size()); ++j) {
        const auto [s, a] = q.origin[j];
        const int c = q.merge[s];
        std::fill(tm.begin(), tm.end(), 0.0);
        std::fill(rm.begin(), rm.end(), 0.0);
        for (const auto& t : m.row(s, a)) {
            tm[q.merge[t.to]] += t.p;
            rm[q.merge[t.to]] += t.p * t.r;
        }
        std::vector<Transition> row;
        for (int k = 0; k < nc; ++k)
            if (tm[k] > 0.0) row.push_back({k, tm[k], rm[k] / tm[k]});
        q.quotient.set_row(c, j, row);
        if (tm[c] >= 1.0 - 1e-12) {
            if (rm[c] != 0.0) throw InfiniteValueError("self-loop action of a merged state carries reward");
            continue;
        }
        q.reduced.set_row(c, j, std::move(row));
    }
    return q;
}

namespace {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
bool solve_dense(std::vector<Vec>& a, Vec& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    return true;
}

// Value of a positional policy on a simple model.
bool policy_value(const Mdp& m, const std::vector<int>& pol, Vec& v) {
    const std::size_t n = m.num_states();
    std::vector<Vec> a(n, Vec(n, 0.0));
    Vec b(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        a[s][s] = 1.0;
        if (pol[s] < 0) continue;
        for (const auto& t : m.row(static_cast<int>(s), pol[s])) {
            a[s][t.to] -= t.p;
            b[s] += t.p * t.r;
        }
    }
    if (!solve_dense(a, b)) return false;
    for (double x : b)
        if (!std::isfinite(x) || x < -1e-9) return false;
    v = std::move(b);
    for (double& x : v) x = std::max(x, 0.0);
    return true;
}

}  // namespace

Solution solve_value(const Mdp& m, double tol) {
    if (!(tol > 0.0)) throw RangeError("tolerance must be > 0");
    const Quotients q = build_quotients(m);
    const Mdp& r = q.reduced;
    Solution sol;
    Vec v(r.num_states(), 0.0), next;
    for (std::int64_t it = 0; it < 10000000; ++it) {
        bellman_state_into(r, v, next);
        const double upd = sup_dist(next, v);
        v.swap(next);
        ++sol.iterations;
        if (upd < tol * 1e-2) break;
    }
    // Polish: on a simple model the value of a greedy policy that is itself
    // a fixpoint is the unique fixpoint, without the geometric tail error.
    if (r.num_states() <= 2000) {
        Vec pv;
        if (policy_value(r, greedy_policy(r, v, 0.0), pv)) {
            bellman_state_into(r, pv, next);
            const double res_pv = sup_dist(next, pv);
            const double res_v = sup_dist(bellman_state(r, v), v);
            if (res_pv < res_v && sup_dist(pv, v) <= 1e-3 * (1.0 + sup_norm(v))) v = pv;
        }
    }
    sol.v = q.reindex(v);
    const int ns = static_cast<int>(m.num_states()), na = static_cast<int>(m.num_actions());
    sol.q.assign(m.num_states() * m.num_actions(), 0.0);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            double acc = 0.0;
            for (const auto& t : m.row(s, a)) acc += t.p * (t.r + sol.v[t.to]);
            sol.q[m.sa_index(s, a)] = acc;
        }
    sol.policy = greedy_policy(m, sol.v);
    return sol;
}

}  // namespace fixmann
