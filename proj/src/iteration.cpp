#include "fixmann/iteration.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "fixmann/errors.hpp"

namespace fixmann {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void StopRule::validate() const {
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (!(update_tol > 0.0)) throw ConfigError("update_tol must be > 0");
    if (residual_tol && !(*residual_tol > 0.0)) throw ConfigError("residual_tol must be > 0");
}

std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::UpdateTol: return "update_tol";
    case StopReason::ResidualTol: return "residual_tol";
    case StopReason::Diverged: return "diverged";
    }
    return "max_steps";
}

StopReason stop_reason_from_string(const std::string& s) {
    if (s == "update_tol") return StopReason::UpdateTol;
    if (s == "residual_tol") return StopReason::ResidualTol;
    if (s == "diverged") return StopReason::Diverged;
    if (s == "max_steps") return StopReason::MaxSteps;
    throw ConfigError("unknown stop reason: " + s);
}

TraceRecorder::TraceRecorder(IterationTrace& trace, const IterationOptions& opt, std::size_t dim)
    : t_(trace), opt_(opt) {
    ring_.assign(std::max<std::size_t>(opt.window, 1), Vec(dim, 0.0));
}

bool TraceRecorder::wants(std::int64_t n) const {
    if (opt_.record_all || n <= opt_.dense_until) return true;
    std::int64_t stride = 1;
    for (std::int64_t t = n / 1000; t >= 10; t /= 10) stride *= 10;
    return n % stride == 0;
}

void TraceRecorder::observe(const Vec& x) {
    ring_[ring_pos_] = x;
    ring_pos_ = (ring_pos_ + 1) % ring_.size();
    ring_fill_ = std::min(ring_fill_ + 1, ring_.size());
}

void TraceRecorder::push(std::int64_t n, const Vec& x, double update, double residual) {
    observe(x);
    if (!wants(n)) {
        t_.strided = true;
        return;
    }
    t_.index.push_back(n);
    t_.points.push_back(x);
    t_.update_norms.push_back(update);
    t_.residuals.push_back(residual);
}

void TraceRecorder::finish(std::int64_t n, const Vec& x, double update, double residual) {
    if (t_.index.empty() || t_.index.back() != n) {
        observe(x);
        t_.index.push_back(n);
        t_.points.push_back(x);
        t_.update_norms.push_back(update);
        t_.residuals.push_back(residual);
    } else if (std::isnan(t_.residuals.back())) {
        t_.residuals.back() = residual;
    }
    t_.final_index = n;
    const std::size_t d = x.size();
    t_.tail_min.assign(d, std::numeric_limits<double>::infinity());
    t_.tail_max.assign(d, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < ring_fill_; ++k)
        for (std::size_t i = 0; i < d; ++i) {
            t_.tail_min[i] = std::min(t_.tail_min[i], ring_[k][i]);
            t_.tail_max[i] = std::max(t_.tail_max[i], ring_[k][i]);
        }
}

bool exceeds_guard(const Vec& x, double guard) {
    for (double v : x)
        if (!(v <= guard)) return true;
    return false;
}

namespace {

IterationTrace run_mann(const MannScheme& s, const MapSequence& seq, const Vec& x0, const StopRule& stop,
                        const IterationOptions& opt) {
    stop.validate();
    if (x0.size() != seq.dim()) throw ShapeError("start point has the wrong dimension");
    if (!seq.domain().contains(x0, 1e-9)) throw DomainError("start point outside the domain");
    const bool dampened = !s.beta.identically_zero();

    IterationTrace t;
    TraceRecorder rec(t, opt, x0.size());
    Vec x = x0, fx, next;
    std::int64_t n = s.start_index;
    double last_update = kNaN;
    while (true) {
        seq.apply(n, x, fx);
        const double residual = sup_dist(fx, x);
        if (stop.residual_tol && residual < *stop.residual_tol) {
            t.stop_reason = StopReason::ResidualTol;
            rec.finish(n, x, last_update, residual);
            break;
        }
        // A zero residual alone is not a fixpoint of the dampened step, and
        // with a varying sequence f_n it may hold at a single n only.
        if (dampened && residual < stop.update_tol && last_update < stop.update_tol) {
            t.stop_reason = StopReason::UpdateTol;
            rec.finish(n, x, last_update, residual);
            break;
        }
        rec.push(n, x, last_update, residual);
        mann_combine(s, n, x, fx, next);
        last_update = sup_dist(next, x);
        x.swap(next);
        ++n;
        ++t.steps;
        if (exceeds_guard(x, opt.divergence_guard)) {
            t.stop_reason = StopReason::Diverged;
            t.diverged = true;
            rec.finish(n, x, last_update, kNaN);
            break;
        }
        if (!dampened && last_update < stop.update_tol) {
            t.stop_reason = StopReason::UpdateTol;
            rec.finish(n, x, last_update, kNaN);
            break;
        }
        if (t.steps >= stop.max_steps) {
            t.stop_reason = StopReason::MaxSteps;
            rec.finish(n, x, last_update, kNaN);
            break;
        }
    }
    t.metadata["scheme"] = s.alpha.family() == Family::Custom || s.beta.family() == Family::Custom
                               ? nlohmann::json("custom")
                               : s.to_json();
    t.metadata["stop_reason"] = to_string(t.stop_reason);
    return t;
}

}  // namespace

IterationTrace kleene_iterate(const MonotoneMap& f, const Vec& x0, const StopRule& stop,
                              const IterationOptions& opt) {
    MannScheme k = kleene_scheme();
    k.start_index = 0;
    IterationTrace t = run_mann(k, MapSequence::constant(f), x0, stop, opt);
    t.metadata["scheme"] = "kleene";
    return t;
}

IterationTrace mann_iterate(const MannScheme& s, const MapSequence& seq, const Vec& x0, const StopRule& stop,
                            const IterationOptions& opt) {
    if (!opt.allow_invalid_scheme) {
        const SchemeClass c = classify_scheme(s);
        if (!c.valid()) throw ConfigError("scheme is invalid (" + c.reason + "); set the override to run it");
    }
    return run_mann(s, seq, x0, stop, opt);
}

IterationTrace resetting_iterate(const MapSequence& seq, const Schedule& schedule, const Vec& x0,
                                 std::int64_t outer_steps, const IterationOptions& opt) {
    if (outer_steps < 1) throw ConfigError("outer_steps must be >= 1");
    if (!seq.domain().contains(x0, 1e-9)) throw DomainError("start point outside the domain");
    IterationTrace t;
    TraceRecorder rec(t, opt, x0.size());
    Vec prev, y, tmp;
    for (std::int64_t k = 1; k <= outer_steps; ++k) {
        const std::int64_t nk = schedule(k);
        if (nk < 1) throw ConfigError("reset schedule must be >= 1");
        y = x0;
        bool blown = false;
        for (std::int64_t j = 0; j < nk; ++j) {
            seq.apply(k, y, tmp);
            y.swap(tmp);
            if (exceeds_guard(y, opt.divergence_guard)) {
                blown = true;
                break;
            }
        }
        seq.apply(k, y, tmp);
        const double residual = sup_dist(tmp, y);
        const double update = prev.empty() ? kNaN : sup_dist(y, prev);
        ++t.steps;
        if (blown) {
            t.stop_reason = StopReason::Diverged;
            t.diverged = true;
            rec.finish(k, y, update, residual);
            break;
        }
        if (k == outer_steps) {
            rec.finish(k, y, update, residual);
            break;
        }
        rec.push(k, y, update, residual);
        prev = y;
    }
    t.metadata["scheme"] = "resetting";
    t.metadata["stop_reason"] = to_string(t.stop_reason);
    return t;
}

Schedule controlled_reset_schedule(std::function<double(std::int64_t)> dist, double r) {
    if (!(r > 0.0)) throw ConfigError("r must be > 0");
    return [dist = std::move(dist), r](std::int64_t k) -> std::int64_t {
        const double d = dist(k);
        if (d == 0.0) throw ConfigError("distance 0: the function is exact, use plain Kleene iteration");
        if (!(d > 0.0)) throw ConfigError("distance must be positive");
        double v = std::pow(d, -1.0 / (1.0 + r));
        // Undo rounding noise so that exact powers land on integers.
        const double rv = std::round(v);
        if (std::abs(v - rv) < 1e-9 * std::max(1.0, v)) v = rv;
        if (v >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
        return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(v)));
    };
}

namespace {

void sliding_extrema(const std::vector<Vec>& pts, std::size_t window, RegularityReport& rep) {
    const std::size_t n = pts.size();
    if (n == 0) return;
    const std::size_t d = pts[0].size();
    window = std::max<std::size_t>(window, 1);
    rep.window_min.assign(n, Vec(d));
    rep.window_max.assign(n, Vec(d));
    for (std::size_t i = 0; i < d; ++i) {
        std::deque<std::size_t> lo, hi;
        for (std::size_t k = 0; k < n; ++k) {
            while (!lo.empty() && pts[lo.back()][i] >= pts[k][i]) lo.pop_back();
            while (!hi.empty() && pts[hi.back()][i] <= pts[k][i]) hi.pop_back();
            lo.push_back(k);
            hi.push_back(k);
            if (lo.front() + window <= k) lo.pop_front();
            if (hi.front() + window <= k) hi.pop_front();
            rep.window_min[k][i] = pts[lo.front()][i];
            rep.window_max[k][i] = pts[hi.front()][i];
        }
    }
}

}  // namespace

RegularityReport regularity_diagnostics(const IterationTrace& trace, const MonotoneMap& f, std::size_t window) {
    return regularity_diagnostics(trace, MapSequence::constant(f), window);
}

RegularityReport regularity_diagnostics(const IterationTrace& trace, const MapSequence& seq, std::size_t window) {
    if (trace.strided) throw ConfigError("regularity diagnostics need an unstrided trace");
    RegularityReport rep;
    Vec fx;
    rep.residuals.reserve(trace.points.size());
    for (std::size_t k = 0; k < trace.points.size(); ++k) {
        seq.apply(trace.index[k], trace.points[k], fx);
        rep.residuals.push_back(sup_dist(fx, trace.points[k]));
    }
    sliding_extrema(trace.points, window, rep);
    return rep;
}

double boundedness_bound(const Vec& x0, const Vec& xbar) {
    Vec diff(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) diff[i] = x0[i] - xbar[i];
    return std::max(sup_norm(xbar), sup_norm(diff));
}

}  // namespace fixmann
