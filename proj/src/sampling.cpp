#include "fixmann/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fixmann/errors.hpp"

namespace fixmann {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

SampledRow::SampledRow(std::vector<int> support, Vec probs, std::uint64_t key)
    : support_(std::move(support)), probs_(std::move(probs)), counts_(support_.size(), 0), rng_(key) {}

void SampledRow::sample_to(std::int64_t pulls) {
    if (pulls > kMaxPulls) {
        pulls = kMaxPulls;
        saturated_ = true;
    }
    if (pulls <= pulls_) return;
    const std::int64_t extra = pulls - pulls_;
    pulls_ = pulls;
    const std::size_t k = support_.size();
    if (k == 1) {
        counts_[0] += extra;
        return;
    }
    if (extra <= 64) {
        for (std::int64_t d = 0; d < extra; ++d) {
            const double u = rng_.uniform();
            double acc = 0.0;
            std::size_t pick = k - 1;
            for (std::size_t i = 0; i + 1 < k; ++i) {
                acc += probs_[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            ++counts_[pick];
        }
        return;
    }
    // Multinomial batch as a chain of conditional binomials.
    std::int64_t remaining = extra;
    double mass = 1.0;
    for (std::size_t i = 0; i + 1 < k && remaining > 0; ++i) {
        const double p = mass > 0.0 ? std::clamp(probs_[i] / mass, 0.0, 1.0) : 1.0;
        std::binomial_distribution<std::int64_t> bin(remaining, p);
        const std::int64_t x = bin(rng_);
        counts_[i] += x;
        remaining -= x;
        mass -= probs_[i];
    }
    counts_[k - 1] += remaining;
}

Vec SampledRow::estimate() const {
    Vec e(support_.size(), 0.0);
    if (pulls_ == 0) return e;
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = static_cast<double>(counts_[i]) / static_cast<double>(pulls_);
    return e;
}

MdpSampler::MdpSampler(std::shared_ptr<const Mdp> truth, std::uint64_t seed, BellmanKind kind)
    : truth_(std::move(truth)), kind_(kind), seed_(seed) {
    const Mdp& m = *truth_;
    rows_.resize(m.num_states() * m.num_actions());
    for (int s = 0; s < static_cast<int>(m.num_states()); ++s)
        for (int a = 0; a < static_cast<int>(m.num_actions()); ++a) {
            std::vector<int> sup;
            Vec pr;
            for (const auto& t : m.row(s, a)) {
                sup.push_back(t.to);
                pr.push_back(t.p);
            }
            rows_[m.sa_index(s, a)] = SampledRow(sup, pr, stream_key(seed, s, a));
        }
}

std::size_t MdpSampler::dim() const {
    return kind_ == BellmanKind::State ? truth_->num_states() : truth_->num_states() * truth_->num_actions();
}

void MdpSampler::sample_to(std::int64_t pulls) {
    if (pulls < 1) throw RangeError("pull count must be >= 1");
    const Mdp& m = *truth_;
    if (estimate_.num_states() == 0) estimate_ = Mdp(m.state_names(), m.action_names());
    for (int s = 0; s < static_cast<int>(m.num_states()); ++s)
        for (int a = 0; a < static_cast<int>(m.num_actions()); ++a) {
            SampledRow& r = rows_[m.sa_index(s, a)];
            if (r.support().empty() || r.pulls() >= pulls) continue;
            r.sample_to(pulls);
            const Vec e = r.estimate();
            const auto& tr = m.row(s, a);
            std::vector<Transition> row;
            for (std::size_t i = 0; i < tr.size(); ++i) row.push_back({tr[i].to, e[i], tr[i].r});
            estimate_.set_row(s, a, std::move(row));
        }
    pulls_ = std::max(pulls_, std::min(pulls, kMaxPulls));
}

std::int64_t MdpSampler::estimated_entries() const {
    std::int64_t n = 0;
    for (const auto& r : rows_)
        if (r.support().size() >= 2) n += static_cast<std::int64_t>(r.support().size());
    return n;
}

double MdpSampler::per_entry_eps(double gamma, double bound) const {
    const double half = std::max(1.0, std::floor(static_cast<double>(truth_->max_support()) / 2.0));
    return gamma / (half * (truth_->max_reward() + bound));
}

const Mdp& MdpSampler::estimate() const {
    if (pulls_ == 0) throw ConfigError("no samples drawn yet");
    return estimate_;
}

void MdpSampler::apply_estimate(const Vec& x, Vec& out) const {
    if (kind_ == BellmanKind::State)
        bellman_state_into(estimate(), x, out);
    else
        bellman_state_action_into(estimate(), x, out);
}

std::int64_t MdpSampler::total_samples() const {
    std::int64_t n = 0;
    for (const auto& r : rows_) {
        if (r.support().empty()) continue;
        n = (n > kMaxPulls - r.pulls()) ? kMaxPulls : n + r.pulls();
    }
    return n;
}

json MdpSampler::describe() const {
    return json{{"model", "mdp"},
                {"seed", seed_},
                {"kind", kind_ == BellmanKind::State ? "state" : "state_action"},
                {"eps_rule", "gamma / (max(1, floor(k/2)) * (R_max + B))"}};
}

SsgSampler::SsgSampler(std::shared_ptr<const Ssg> truth, std::uint64_t seed)
    : truth_(std::move(truth)), seed_(seed) {
    const Ssg& g = *truth_;
    rows_.resize(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (g.kinds[v] != NodeKind::Avg) continue;
        std::vector<int> sup;
        Vec pr;
        for (const auto& [t, p] : g.dist[v]) {
            sup.push_back(t);
            pr.push_back(p);
        }
        rows_[v] = SampledRow(sup, pr, stream_key(seed, v, 0));
    }
    estimate_ = g;
}

void SsgSampler::sample_to(std::int64_t pulls) {
    if (pulls < 1) throw RangeError("pull count must be >= 1");
    for (std::size_t v = 0; v < rows_.size(); ++v) {
        SampledRow& r = rows_[v];
        if (r.support().empty() || r.pulls() >= pulls) continue;
        r.sample_to(pulls);
        const Vec e = r.estimate();
        auto& d = estimate_.dist[v];
        d.clear();
        for (std::size_t i = 0; i < e.size(); ++i) d.emplace_back(r.support()[i], e[i]);
    }
    pulls_ = std::max(pulls_, std::min(pulls, kMaxPulls));
}

std::int64_t SsgSampler::estimated_entries() const {
    std::int64_t n = 0;
    for (const auto& r : rows_)
        if (r.support().size() >= 2) n += static_cast<std::int64_t>(r.support().size());
    return n;
}

double SsgSampler::per_entry_eps(double gamma, double) const {
    std::size_t k = 1;
    for (const auto& r : rows_) k = std::max(k, r.support().size());
    return gamma / std::max(1.0, std::floor(static_cast<double>(k) / 2.0));
}

const Ssg& SsgSampler::estimate() const {
    if (pulls_ == 0) throw ConfigError("no samples drawn yet");
    return estimate_;
}

void SsgSampler::apply_estimate(const Vec& x, Vec& out) const { ssg_operator_into(estimate(), x, out); }

std::int64_t SsgSampler::total_samples() const {
    std::int64_t n = 0;
    for (const auto& r : rows_) {
        if (r.support().empty()) continue;
        n = (n > kMaxPulls - r.pulls()) ? kMaxPulls : n + r.pulls();
    }
    return n;
}

json SsgSampler::describe() const {
    return json{{"model", "ssg"}, {"seed", seed_}, {"eps_rule", "gamma / max(1, floor(k/2))"}};
}

std::int64_t bernstein_sample_size(double eps, double delta, std::int64_t entries) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw RangeError("eps must be > 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw RangeError("delta must lie in (0,1]");
    if (entries < 1) throw RangeError("entries must be >= 1");
    const double e = static_cast<double>(entries);
    const double raw = std::ceil(std::log(2.0 * e / delta) / (2.0 * eps * eps));
    if (!(raw < static_cast<double>(kMaxPulls))) return kMaxPulls;
    std::int64_t n = std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
    auto holds = [&](std::int64_t k) { return e * 2.0 * std::exp(-2.0 * eps * eps * static_cast<double>(k)) <= delta; };
    while (!holds(n) && n < kMaxPulls) ++n;
    while (n > 1 && holds(n - 1)) --n;
    return n;
}

double PowerSeries::operator()(std::int64_t i) const { return c0 / std::pow(static_cast<double>(i), p); }

void GuaranteeSchedule::validate() const {
    if (!(gamma.c0 > 0.0) || !(delta.c0 > 0.0)) throw ConfigError("schedule constants must be > 0");
    if (delta.c0 > 1.0) throw ConfigError("delta constant must be <= 1");
    if (!(gamma.p > 1.0) || !(delta.p > 1.0)) throw ConfigError("schedule exponents must be > 1 (summability)");
}

json GuaranteeSchedule::to_json() const {
    return json{{"gamma", {{"c0", gamma.c0}, {"p", gamma.p}}}, {"delta", {{"c0", delta.c0}, {"p", delta.p}}}};
}

GuaranteeSchedule GuaranteeSchedule::from_json(const json& j) {
    GuaranteeSchedule g;
    try {
        if (j.contains("gamma")) g.gamma = {j["gamma"].value("c0", 0.5), j["gamma"].value("p", 2.0)};
        if (j.contains("delta")) g.delta = {j["delta"].value("c0", 0.1), j["delta"].value("p", 2.0)};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed schedule: ") + e.what());
    }
    g.validate();
    return g;
}

Alg1Config Alg1Config::from_json(const json& j) {
    Alg1Config c;
    c.schedule = GuaranteeSchedule::from_json(j);
    try {
        c.seed = j.value("seed", std::uint64_t{42});
        c.steps = j.value("steps", std::int64_t{2000});
        c.bound_slack = j.value("bound_slack", 1.0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed algorithm1 config: ") + e.what());
    }
    if (c.steps < 1) throw ConfigError("steps must be >= 1");
    return c;
}

namespace {

void push_meta(IterationTrace& t, std::size_t before, std::int64_t n, double g, double d, std::int64_t total) {
    if (t.points.size() == before) return;
    t.pulls.push_back(n);
    t.gammas.push_back(g);
    t.deltas.push_back(d);
    t.total_samples.push_back(total);
}

}  // namespace

IterationTrace algorithm1(const MannScheme& scheme, SampledModel& model, const GuaranteeSchedule& g,
                          std::int64_t steps, double bound_slack, const IterationOptions& opt) {
    const SchemeClass c = classify_scheme(scheme);
    if (!c.exact()) throw ConfigError("algorithm1 needs a (relaxed) Mann-Kleene scheme");
    g.validate();
    if (steps < 1) throw ConfigError("steps must be >= 1");
    IterationTrace t;
    TraceRecorder rec(t, opt, model.dim());
    Vec x(model.dim(), 0.0), fx, next;
    double running = 0.0;
    std::int64_t ni = 1;
    double last_update = kNaN;
    const std::int64_t entries = model.estimated_entries();
    for (std::int64_t i = 1; i <= steps; ++i) {
        const std::int64_t n = scheme.start_index + i - 1;
        const double gi = g.gamma(i), di = g.delta(i);
        const double eps = model.per_entry_eps(gi, running + bound_slack);
        ni = std::max(ni, entries == 0 ? 1 : bernstein_sample_size(eps, di, entries));
        model.sample_to(ni);
        model.apply_estimate(x, fx);
        const std::size_t before = t.points.size();
        rec.push(i, x, last_update, sup_dist(fx, x));
        push_meta(t, before, ni, gi, di, model.total_samples());
        mann_combine(scheme, n, x, fx, next);
        last_update = sup_dist(next, x);
        x.swap(next);
        running = std::max(running, sup_norm(x));
        ++t.steps;
        if (exceeds_guard(x, opt.divergence_guard)) {
            t.diverged = true;
            t.stop_reason = StopReason::Diverged;
            break;
        }
    }
    const std::size_t before = t.points.size();
    rec.finish(t.steps + 1, x, last_update, kNaN);
    push_meta(t, before, ni, g.gamma(t.steps + 1), g.delta(t.steps + 1), model.total_samples());
    t.metadata["scheme"] = scheme.to_json();
    t.metadata["schedule"] = g.to_json();
    t.metadata["model"] = model.describe();
    t.metadata["stop_reason"] = to_string(t.stop_reason);
    return t;
}

IterationTrace sampled_mann_iterate(const MannScheme& scheme, SampledModel& model,
                                    const std::function<std::int64_t(std::int64_t)>& pulls, const Vec& x0,
                                    const StopRule& stop, const IterationOptions& opt, std::int64_t reset_every) {
    stop.validate();
    if (!opt.allow_invalid_scheme && !classify_scheme(scheme).valid())
        throw ConfigError("scheme is invalid; set the override to run it");
    if (x0.size() != model.dim()) throw ShapeError("start point has the wrong dimension");
    IterationTrace t;
    TraceRecorder rec(t, opt, model.dim());
    Vec x = x0, fx, next;
    double last_update = kNaN;
    std::int64_t ni = 0;
    for (std::int64_t i = 1; i <= stop.max_steps; ++i) {
        const std::int64_t n = scheme.start_index + i - 1;
        ni = std::max<std::int64_t>(ni, pulls(i));
        model.sample_to(std::max<std::int64_t>(ni, 1));
        model.apply_estimate(x, fx);
        const std::size_t before = t.points.size();
        rec.push(i, x, last_update, sup_dist(fx, x));
        push_meta(t, before, ni, kNaN, kNaN, model.total_samples());
        mann_combine(scheme, n, x, fx, next);
        last_update = sup_dist(next, x);
        x.swap(next);
        if (reset_every > 0 && i % reset_every == 0) x = x0;
        ++t.steps;
        if (exceeds_guard(x, opt.divergence_guard)) {
            t.diverged = true;
            t.stop_reason = StopReason::Diverged;
            break;
        }
    }
    const std::size_t before = t.points.size();
    rec.finish(t.steps + 1, x, last_update, kNaN);
    push_meta(t, before, ni, kNaN, kNaN, model.total_samples());
    t.metadata["scheme"] = scheme.to_json();
    t.metadata["model"] = model.describe();
    t.metadata["stop_reason"] = to_string(t.stop_reason);
    return t;
}

}  // namespace fixmann
