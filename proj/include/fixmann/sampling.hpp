#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>

#include "fixmann/iteration.hpp"
#include "fixmann/mdp.hpp"
#include "fixmann/rng.hpp"
#include "fixmann/schemes.hpp"
#include "fixmann/ssg.hpp"

namespace fixmann {

// Pull counts saturate here; algorithm1 asks for astronomically many pulls.
inline constexpr std::int64_t kMaxPulls = std::int64_t{1} << 62;

// Cumulative sampling of one categorical distribution. Draws come from a
// counter-based stream, so a row's history depends only on its own key and
// the sequence of requested pull counts.
class SampledRow {
public:
    SampledRow() = default;
    SampledRow(std::vector<int> support, Vec probs, std::uint64_t key);

    void sample_to(std::int64_t pulls);

    std::int64_t pulls() const { return pulls_; }
    bool saturated() const { return saturated_; }
    const std::vector<int>& support() const { return support_; }
    const Vec& probs() const { return probs_; }
    const std::vector<std::int64_t>& counts() const { return counts_; }
    // N(s') / n on the support.
    Vec estimate() const;

private:
    std::vector<int> support_;
    Vec probs_;
    std::vector<std::int64_t> counts_;
    std::int64_t pulls_ = 0;
    bool saturated_ = false;
    CounterRng rng_;
};

// Generative-model access to an approximated operator f_n.
class SampledModel {
public:
    virtual ~SampledModel() = default;
    virtual std::size_t dim() const = 0;
    virtual void sample_to(std::int64_t pulls) = 0;
    // Entries whose estimate can deviate (rows with support >= 2).
    virtual std::int64_t estimated_entries() const = 0;
    // Per-entry accuracy that keeps ||f_n - f|| <= gamma on [0, bound].
    virtual double per_entry_eps(double gamma, double bound) const = 0;
    virtual void apply_estimate(const Vec& x, Vec& out) const = 0;
    virtual std::int64_t total_samples() const = 0;
    virtual std::int64_t pulls() const = 0;
    virtual nlohmann::json describe() const = 0;
};

class MdpSampler : public SampledModel {
public:
    MdpSampler(std::shared_ptr<const Mdp> truth, std::uint64_t seed, BellmanKind kind = BellmanKind::State);

    std::size_t dim() const override;
    void sample_to(std::int64_t pulls) override;
    std::int64_t estimated_entries() const override;
    double per_entry_eps(double gamma, double bound) const override;
    void apply_estimate(const Vec& x, Vec& out) const override;
    std::int64_t total_samples() const override;
    std::int64_t pulls() const override { return pulls_; }
    nlohmann::json describe() const override;

    const Mdp& truth() const { return *truth_; }
    const Mdp& estimate() const;
    const SampledRow& row(int s, int a) const { return rows_[truth_->sa_index(s, a)]; }

private:
    std::shared_ptr<const Mdp> truth_;
    BellmanKind kind_;
    std::uint64_t seed_;
    std::vector<SampledRow> rows_;
    Mdp estimate_;
    std::int64_t pulls_ = 0;
};

class SsgSampler : public SampledModel {
public:
    SsgSampler(std::shared_ptr<const Ssg> truth, std::uint64_t seed);

    std::size_t dim() const override { return truth_->size(); }
    void sample_to(std::int64_t pulls) override;
    std::int64_t estimated_entries() const override;
    double per_entry_eps(double gamma, double bound) const override;
    void apply_estimate(const Vec& x, Vec& out) const override;
    std::int64_t total_samples() const override;
    std::int64_t pulls() const override { return pulls_; }
    nlohmann::json describe() const override;

    const Ssg& truth() const { return *truth_; }
    const Ssg& estimate() const;

private:
    std::shared_ptr<const Ssg> truth_;
    std::uint64_t seed_;
    std::vector<SampledRow> rows_;  // indexed by node; empty for non-average nodes
    Ssg estimate_;
    std::int64_t pulls_ = 0;
};

// Smallest n with entries * 2 exp(-2 eps^2 n) <= delta.
std::int64_t bernstein_sample_size(double eps, double delta, std::int64_t entries);

struct PowerSeries {
    double c0 = 0.1;
    double p = 2.0;
    double operator()(std::int64_t i) const;
};

struct GuaranteeSchedule {
    PowerSeries gamma{0.5, 2.0};
    PowerSeries delta{0.1, 2.0};

    void validate() const;
    nlohmann::json to_json() const;
    static GuaranteeSchedule from_json(const nlohmann::json& j);
};

struct Alg1Config {
    GuaranteeSchedule schedule;
    std::uint64_t seed = 42;
    std::int64_t steps = 2000;
    // Added to the running iterate norm to get the value probe bound.
    double bound_slack = 1.0;

    static Alg1Config from_json(const nlohmann::json& j);
};

IterationTrace algorithm1(const MannScheme& scheme, SampledModel& model, const GuaranteeSchedule& g,
                          std::int64_t steps, double bound_slack = 1.0, const IterationOptions& opt = {});

// Dampened Mann iteration over f_{n_i} with a caller-chosen pull schedule.
// reset_every > 0 restarts from x0 every that many steps.
IterationTrace sampled_mann_iterate(const MannScheme& scheme, SampledModel& model,
                                    const std::function<std::int64_t(std::int64_t)>& pulls, const Vec& x0,
                                    const StopRule& stop, const IterationOptions& opt = {},
                                    std::int64_t reset_every = 0);

}  // namespace fixmann
