#include "fixmann/harness.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "fixmann/errors.hpp"
#include "fixmann/rng.hpp"

namespace fixmann {

std::string to_string(RandomKind k) {
    switch (k) {
    case RandomKind::Chain: return "chain";
    case RandomKind::ChainWithMecs: return "chain_with_mecs";
    case RandomKind::SimpleMdp: return "simple_mdp";
    case RandomKind::MdpWithMecs: return "mdp_with_mecs";
    }
    return "?";
}

RandomKind random_kind_from_string(const std::string& s) {
    for (RandomKind k : {RandomKind::Chain, RandomKind::ChainWithMecs, RandomKind::SimpleMdp, RandomKind::MdpWithMecs})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown random MDP kind '" + s + "'");
}

namespace {

bool with_mecs(RandomKind k) { return k == RandomKind::ChainWithMecs || k == RandomKind::MdpWithMecs; }
bool is_chain(RandomKind k) { return k == RandomKind::Chain || k == RandomKind::ChainWithMecs; }

// States are grouped into units: singletons and planted blocks. Every
// non-cycle row puts positive mass on a strictly later unit, so the only end
// components are the blocks' internal cycles.
Mdp build_random(int n, RandomKind kind, int mec_count, std::mt19937_64& rng) {
    const int nf = n - 1;  // last state is final
    std::vector<int> perm(nf);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<std::vector<int>> units;
    int spare = nf - 2 * mec_count;
    std::size_t pos = 0;
    std::bernoulli_distribution coin(0.5);
    std::vector<int> block_of(n, -1);
    for (int b = 0; b < mec_count; ++b) {
        int size = 2;
        if (spare > 0 && coin(rng)) {
            ++size;
            --spare;
        }
        std::vector<int> blk(perm.begin() + pos, perm.begin() + pos + size);
        pos += size;
        for (int s : blk) block_of[s] = static_cast<int>(units.size());
        units.push_back(blk);
    }
    for (; pos < perm.size(); ++pos) units.push_back({perm[pos]});
    std::shuffle(units.begin(), units.end(), rng);
    units.push_back({nf});
    std::vector<int> rank(n);
    for (std::size_t u = 0; u < units.size(); ++u)
        for (int s : units[u]) rank[s] = static_cast<int>(u);

    std::vector<std::string> names;
    for (int s = 0; s < nf; ++s) names.push_back("s" + std::to_string(s));
    names.push_back("goal");
    Mdp m(names, {"a0", "a1", "a2"});

    std::uniform_real_distribution<double> reward(0.0, 1.0), weight(0.1, 1.0);
    std::uniform_int_distribution<int> any_state(0, n - 1), extra_count(0, 2), action_count(1, 3);

    auto leaking_row = [&](int s, int a) {
        const int r = rank[s];
        std::uniform_int_distribution<int> later(r + 1, static_cast<int>(units.size()) - 1);
        const auto& u = units[later(rng)];
        std::vector<int> targets{u[std::uniform_int_distribution<int>(0, static_cast<int>(u.size()) - 1)(rng)]};
        const int extra = extra_count(rng);
        for (int e = 0; e < extra; ++e) {
            const int t = any_state(rng);
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        Vec w;
        for (std::size_t i = 0; i < targets.size(); ++i) w.push_back(weight(rng));
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        std::vector<Transition> row;
        for (std::size_t i = 0; i < targets.size(); ++i) row.push_back({targets[i], w[i] / total, reward(rng)});
        m.set_row(s, a, std::move(row));
    };

    for (int s = 0; s < nf; ++s) {
        if (block_of[s] >= 0) {
            const auto& blk = units[rank[s]];
            const auto it = std::find(blk.begin(), blk.end(), s);
            const int next = blk[(it - blk.begin() + 1) % blk.size()];
            m.set_row(s, 0, {{next, 1.0, 0.0}});
            if (is_chain(kind)) continue;
            const int escapes = std::uniform_int_distribution<int>(1, 2)(rng);
            for (int a = 1; a <= escapes; ++a) leaking_row(s, a);
            continue;
        }
        const int k = is_chain(kind) ? 1 : action_count(rng);
        for (int a = 0; a < k; ++a) leaking_row(s, a);
    }
    return m;
}

Mdp scale_rewards(const Mdp& m, double factor) {
    Mdp out(m.state_names(), m.action_names());
    for (int s = 0; s < static_cast<int>(m.num_states()); ++s)
        for (int a = 0; a < static_cast<int>(m.num_actions()); ++a) {
            std::vector<Transition> row = m.row(s, a);
            for (auto& t : row) t.r *= factor;
            out.set_row(s, a, std::move(row));
        }
    return out;
}

}  // namespace

Mdp gen_random_mdp(int n_states, RandomKind kind, int mec_count, std::uint64_t seed, bool normalize) {
    if (mec_count < 0) throw RangeError("mec_count must be >= 0");
    if (!with_mecs(kind) && mec_count != 0) throw ConfigError(to_string(kind) + " instances have no MECs");
    if (with_mecs(kind) && mec_count < 1) throw ConfigError(to_string(kind) + " needs mec_count >= 1");
    if (n_states < 2 * mec_count + 1 || n_states < 2) throw RangeError("too few states for the requested MECs");

    for (int attempt = 0; attempt < 16; ++attempt) {
        std::mt19937_64 rng(attempt == 0 ? seed : mix64(seed + attempt));
        Mdp m = build_random(n_states, kind, mec_count, rng);
        if (!validate_mdp(m).ok) continue;
        const MecDecomposition d = compute_mecs(m);
        if (static_cast<int>(d.mecs.size()) != mec_count || !check_finite_value(m, d)) continue;
        if (!normalize) return m;
        const double norm = sup_norm(solve_value(m, 1e-12).v);
        if (!(norm > 0.0)) continue;
        return scale_rewards(m, 1.0 / norm);
    }
    throw GenerationError("could not generate a " + to_string(kind) + " instance with " + std::to_string(mec_count) +
                          " MECs");
}

double percentile(std::vector<double> xs, double q) {
    if (xs.empty()) throw ConfigError("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw RangeError("percentile level must lie in [0,1]");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

Bands aggregate(const std::vector<double>& xs) {
    if (xs.empty()) throw ConfigError("aggregate of an empty sample");
    Bands b;
    double sum = 0.0;
    for (double x : xs) sum += x;
    b.mean = sum / static_cast<double>(xs.size());
    b.p10 = percentile(xs, 0.1);
    b.p90 = percentile(xs, 0.9);
    b.min = *std::min_element(xs.begin(), xs.end());
    b.max = *std::max_element(xs.begin(), xs.end());
    return b;
}

}  // namespace fixmann
