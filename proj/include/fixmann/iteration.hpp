#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixmann/funcspace.hpp"
#include "fixmann/schemes.hpp"
#include "fixmann/vec.hpp"

namespace fixmann {

struct StopRule {
    std::int64_t max_steps = 1000;
    // Stop when the step size drops below this; dampened schemes also need the
    // undampened residual ||f_n(x_n) - x_n|| below it.
    double update_tol = 1e-6;
    std::optional<double> residual_tol;

    void validate() const;
};

enum class StopReason { MaxSteps, UpdateTol, ResidualTol, Diverged };

std::string to_string(StopReason r);
StopReason stop_reason_from_string(const std::string& s);

struct IterationOptions {
    double divergence_guard = 1e12;
    // Record every point up to this index, thinner afterwards.
    std::int64_t dense_until = 10000;
    bool record_all = false;
    std::size_t window = 1000;
    // Run mann_iterate even if the scheme does not classify as valid.
    bool allow_invalid_scheme = false;
};

struct IterationTrace {
    std::vector<std::int64_t> index;
    std::vector<Vec> points;
    // Norm of the update that produced the point; NaN for the first point.
    std::vector<double> update_norms;
    // ||f_n(x_n) - x_n|| at the point; NaN where unavailable.
    std::vector<double> residuals;

    // algorithm1 metadata, empty unless filled by the sampler.
    std::vector<std::int64_t> pulls;
    std::vector<double> gammas;
    std::vector<double> deltas;
    std::vector<std::int64_t> total_samples;

    StopReason stop_reason = StopReason::MaxSteps;
    std::int64_t final_index = 0;
    std::int64_t steps = 0;
    bool diverged = false;
    bool strided = false;

    // Componentwise extrema over the last `window` iterates.
    Vec tail_min;
    Vec tail_max;

    nlohmann::json metadata = nlohmann::json::object();

    const Vec& final_point() const { return points.back(); }
    bool has_alg1_columns() const { return !pulls.empty(); }
};

// Records points, strides long runs and tracks tail extrema.
class TraceRecorder {
public:
    TraceRecorder(IterationTrace& trace, const IterationOptions& opt, std::size_t dim);
    bool wants(std::int64_t n) const;
    void push(std::int64_t n, const Vec& x, double update, double residual);
    // Always records the last point if it was skipped.
    void finish(std::int64_t n, const Vec& x, double update, double residual);

private:
    void observe(const Vec& x);
    IterationTrace& t_;
    IterationOptions opt_;
    std::vector<Vec> ring_;
    std::size_t ring_pos_ = 0;
    std::size_t ring_fill_ = 0;
};

bool exceeds_guard(const Vec& x, double guard);

// x_{n+1} = f(x_n), indices start at 0.
IterationTrace kleene_iterate(const MonotoneMap& f, const Vec& x0, const StopRule& stop,
                              const IterationOptions& opt = {});

// x_{n+1} = T_n(f_n, x_n) with x_{start} = x0.
IterationTrace mann_iterate(const MannScheme& s, const MapSequence& seq, const Vec& x0, const StopRule& stop,
                            const IterationOptions& opt = {});

using Schedule = std::function<std::int64_t(std::int64_t)>;

// x_k = f_k^{n_k}(x0) for k = 1..outer_steps.
IterationTrace resetting_iterate(const MapSequence& seq, const Schedule& schedule, const Vec& x0,
                                 std::int64_t outer_steps, const IterationOptions& opt = {});

// n_k = max(1, floor(dist(k)^(-1/(1+r)))).
Schedule controlled_reset_schedule(std::function<double(std::int64_t)> dist, double r);

struct RegularityReport {
    Vec residuals;
    // Sliding-window extrema ending at each point.
    std::vector<Vec> window_min;
    std::vector<Vec> window_max;
};

// Residual at point k uses f_{index[k]} when a sequence is given.
RegularityReport regularity_diagnostics(const IterationTrace& trace, const MonotoneMap& f,
                                        std::size_t window = 1000);
RegularityReport regularity_diagnostics(const IterationTrace& trace, const MapSequence& seq,
                                        std::size_t window = 1000);

// Bound from the boundedness lemma: max(||xbar||, ||x0 - xbar||).
double boundedness_bound(const Vec& x0, const Vec& xbar);

}  // namespace fixmann
