#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/harness.hpp"
#include "fixmann/sampling.hpp"
#include "fixmann/ssg.hpp"

namespace fixmann {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

StopRule stop_from_json(const json& j) {
    StopRule s;
    s.max_steps = j.value("max_steps", s.max_steps);
    s.update_tol = j.value("update_tol", s.update_tol);
    if (j.contains("residual_tol") && !j["residual_tol"].is_null()) s.residual_tol = j["residual_tol"].get<double>();
    s.validate();
    return s;
}

MannScheme scheme_from(const json& j) {
    if (j.is_string() && j.get<std::string>() == "kleene") return kleene_scheme();
    return MannScheme::from_json(j);
}

// Mann iteration over a sequence that restarts from x0 every k steps while
// the approximation index keeps advancing.
IterationTrace resetting_mann(const MannScheme& s, const MapSequence& seq, const Vec& x0, const StopRule& stop,
                              std::int64_t every, const IterationOptions& opt) {
    IterationTrace t;
    TraceRecorder rec(t, opt, x0.size());
    Vec x = x0, fx, next;
    double last_update = kNaN;
    std::int64_t n = s.start_index;
    for (std::int64_t i = 0; i < stop.max_steps; ++i, ++n) {
        if (i > 0 && i % every == 0) x = x0;
        seq.apply(n, x, fx);
        rec.push(n, x, last_update, sup_dist(fx, x));
        mann_combine(s, n, x, fx, next);
        last_update = sup_dist(next, x);
        x.swap(next);
        ++t.steps;
        if (exceeds_guard(x, opt.divergence_guard)) {
            t.diverged = true;
            t.stop_reason = StopReason::Diverged;
            ++n;
            break;
        }
    }
    rec.finish(n, x, last_update, kNaN);
    t.metadata["scheme"] = s.to_json();
    t.metadata["reset_every"] = every;
    t.metadata["stop_reason"] = to_string(t.stop_reason);
    return t;
}

IterationTrace run_on_sequence(const RunSpec& r, const MapSequence& seq, const Vec& x0, const StopRule& stop) {
    IterationOptions opt;
    opt.allow_invalid_scheme = true;
    if (r.reset_every > 0) return resetting_mann(r.scheme, seq, x0, stop, r.reset_every, opt);
    return mann_iterate(r.scheme, seq, x0, stop, opt);
}

struct Instance {
    std::optional<MapSequence> seq;
    std::shared_ptr<const Mdp> mdp;
    std::shared_ptr<const Ssg> game;
    Vec reference;
    std::uint64_t seed = 0;
    json meta = json::object();
};

Vec reference_by_kleene(const MonotoneMap& f) {
    StopRule s;
    s.max_steps = 10000000;
    s.update_tol = 1e-15;
    return kleene_iterate(f, Vec(f.dim(), 0.0), s).final_point();
}

std::vector<Instance> build_instances(const ExperimentConfig& cfg) {
    std::vector<Instance> out;
    const json& in = cfg.instance;
    if (cfg.kind == "exact_fn") {
        MonotoneMap f = in.is_string() && in.get<std::string>() == "piecewise"
                            ? fixtures::piecewise_map()
                            : MonotoneMap::from_json(in, cfg.base_dir);
        Instance i;
        i.reference = cfg.extra.contains("reference") ? cfg.extra["reference"].get<Vec>() : reference_by_kleene(f);
        i.seq = MapSequence::constant(f);
        out.push_back(std::move(i));
    } else if (cfg.kind == "exact_mdp" || cfg.kind == "sampled_mdp") {
        auto m = std::make_shared<const Mdp>(fixtures::mdp_by_name(in.get<std::string>(), cfg.base_dir));
        const Vec ref = solve_value(*m).v;
        if (cfg.kind == "exact_mdp") {
            Instance i;
            i.mdp = m;
            i.reference = ref;
            i.seq = MapSequence::constant(MonotoneMap::bellman(m, BellmanKind::State));
            out.push_back(std::move(i));
        } else {
            for (std::uint64_t seed : cfg.seeds) {
                Instance i;
                i.mdp = m;
                i.reference = ref;
                i.seed = seed;
                out.push_back(std::move(i));
            }
        }
    } else if (cfg.kind == "approx_fn") {
        fixtures::ApproxFamily fam = fixtures::approx_family(in);
        Instance i;
        i.reference = fam.reference;
        i.seq = fam.seq;
        out.push_back(std::move(i));
    } else if (cfg.kind == "sampled_ssg") {
        auto g = std::make_shared<const Ssg>(fixtures::ssg_by_name(in.get<std::string>(), cfg.base_dir));
        const Vec ref = brute_force_value(*g);
        for (std::uint64_t seed : cfg.seeds) {
            Instance i;
            i.game = g;
            i.reference = ref;
            i.seed = seed;
            out.push_back(std::move(i));
        }
    } else if (cfg.kind == "random_bench") {
        const int n_states = in.value("n_states", 50);
        const int mec_count = in.value("mec_count", 5);
        const bool normalize = in.value("normalize", true);
        const auto kinds = in.value("kinds", std::vector<std::string>{"chain", "chain_with_mecs", "simple_mdp",
                                                                      "mdp_with_mecs"});
        for (std::uint64_t seed : cfg.seeds)
            for (const auto& ks : kinds) {
                const RandomKind k = random_kind_from_string(ks);
                const bool mecs = k == RandomKind::ChainWithMecs || k == RandomKind::MdpWithMecs;
                auto m = std::make_shared<const Mdp>(gen_random_mdp(n_states, k, mecs ? mec_count : 0, seed, normalize));
                Instance i;
                i.mdp = m;
                i.reference = solve_value(*m).v;
                i.seed = seed;
                i.meta = json{{"kind", ks}, {"seed", seed}, {"reward_distribution", "uniform[0,1] before scaling"}};
                i.seq = MapSequence::constant(MonotoneMap::bellman(m, BellmanKind::State));
                out.push_back(std::move(i));
            }
    } else {
        throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
    }
    return out;
}

IterationTrace run_sampled(const ExperimentConfig& cfg, const RunSpec& r, const Instance& inst, const Vec& x0) {
    std::unique_ptr<SampledModel> model;
    if (inst.mdp)
        model = std::make_unique<MdpSampler>(inst.mdp, inst.seed);
    else
        model = std::make_unique<SsgSampler>(inst.game, inst.seed);
    const json pulls = cfg.extra.value("pulls", json("alg1"));
    IterationOptions opt;
    opt.allow_invalid_scheme = true;
    if (pulls.is_string() && pulls.get<std::string>() == "linear") {
        auto sched = [](std::int64_t i) { return i; };
        return sampled_mann_iterate(r.scheme, *model, sched, x0, cfg.stop, opt, r.reset_every);
    }
    const GuaranteeSchedule g = cfg.extra.contains("schedule") ? GuaranteeSchedule::from_json(cfg.extra["schedule"])
                                                               : GuaranteeSchedule{};
    return algorithm1(r.scheme, *model, g, cfg.stop.max_steps, cfg.extra.value("bound_slack", 1.0), opt);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir) {
    ExperimentConfig c;
    c.base_dir = base_dir;
    try {
        c.kind = j.at("kind").get<std::string>();
        c.instance = j.value("instance", json());
        for (const auto& r : j.at("runs")) {
            RunSpec s;
            s.name = r.at("name").get<std::string>();
            const json& sj = r.at("scheme");
            s.kleene = sj.is_string() && sj.get<std::string>() == "kleene";
            s.scheme = scheme_from(sj);
            if (r.contains("start_index")) s.scheme.start_index = r["start_index"].get<std::int64_t>();
            s.reset_every = r.value("reset_every", std::int64_t{0});
            if (s.reset_every < 0) throw ConfigError("reset_every must be >= 0");
            c.runs.push_back(std::move(s));
        }
        if (j.contains("x0")) c.x0 = j["x0"].get<Vec>();
        if (j.contains("stop")) c.stop = stop_from_json(j["stop"]);
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        for (const char* k : {"pulls", "schedule", "bound_slack", "threshold", "reference"})
            if (j.contains(k)) c.extra[k] = j[k];
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    if (c.runs.empty()) throw ConfigError("experiment has no runs");
    if ((c.kind == "sampled_mdp" || c.kind == "sampled_ssg" || c.kind == "random_bench") && c.seeds.empty())
        throw ConfigError(c.kind + " needs explicit seeds");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return from_json(j, std::filesystem::path(path).parent_path().string());
}

const RunReport& ExperimentReport::run(const std::string& name) const {
    for (const auto& r : runs)
        if (r.name == name) return r;
    throw ConfigError("no run named '" + name + "'");
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    const std::vector<Instance> instances = build_instances(cfg);
    const double threshold = cfg.extra.value("threshold", 1e-6);
    ExperimentReport rep;
    rep.kind = cfg.kind;
    rep.metadata["threshold"] = threshold;
    rep.metadata["stop"] = {{"max_steps", cfg.stop.max_steps}, {"update_tol", cfg.stop.update_tol}};
    json inst_meta = json::array();
    for (const auto& i : instances) {
        rep.references.push_back(i.reference);
        inst_meta.push_back(i.meta);
    }
    rep.metadata["instances"] = inst_meta;

    for (const RunSpec& r : cfg.runs) {
        RunReport rr;
        rr.name = r.name;
        for (const Instance& inst : instances) {
            const Vec x0 = cfg.x0 ? *cfg.x0 : Vec(inst.reference.size(), 0.0);
            IterationTrace t;
            try {
                if (x0.size() != inst.reference.size()) throw ShapeError("x0 has the wrong dimension");
                t = inst.seq ? run_on_sequence(r, *inst.seq, x0, cfg.stop) : run_sampled(cfg, r, inst, x0);
            } catch (const Error& e) {
                rr.failures.push_back(e.what());
                continue;
            }
            std::vector<double> err;
            std::int64_t reach = -1;
            for (std::size_t k = 0; k < t.points.size(); ++k) {
                err.push_back(sup_dist(t.points[k], inst.reference));
                if (reach < 0 && err.back() < threshold) reach = t.index[k];
            }
            rr.final_errors.push_back(err.back());
            rr.steps.push_back(t.steps);
            rr.stop_reasons.push_back(to_string(t.stop_reason));
            rr.reach_index.push_back(reach);
            rr.errors.push_back(std::move(err));
            rr.traces.push_back(std::move(t));
        }
        rep.runs.push_back(std::move(rr));
    }
    return rep;
}

json ExperimentReport::summary() const {
    json runs_j = json::array();
    for (const auto& r : runs) {
        json j{{"name", r.name},
               {"steps", r.steps},
               {"stop_reasons", r.stop_reasons},
               {"reach_index", r.reach_index},
               {"failures", r.failures},
               {"partial", !r.failures.empty()}};
        json fe = json::array();
        for (double e : r.final_errors) fe.push_back(e);
        j["final_errors"] = fe;
        if (!r.final_errors.empty()) {
            const Bands b = aggregate(r.final_errors);
            j["final_error_bands"] = {{"mean", b.mean}, {"p10", b.p10}, {"p90", b.p90}, {"min", b.min}, {"max", b.max}};
        }
        runs_j.push_back(j);
    }
    json refs = json::array();
    for (const auto& v : references) refs.push_back(v);
    return json{{"kind", kind}, {"references", refs}, {"runs", runs_j}, {"metadata", metadata}};
}

void write_report(const ExperimentReport& r, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const std::filesystem::path dir(out_dir);
    for (const auto& run : r.runs) {
        std::size_t longest = 0;
        for (std::size_t k = 0; k < run.traces.size(); ++k) {
            emit_trace(run.traces[k], (dir / (run.name + "_" + std::to_string(k) + ".csv")).string(), TraceFormat::Csv);
            if (run.traces[k].points.size() > run.traces[longest].points.size()) longest = k;
        }
        if (run.traces.empty()) continue;
        // Shorter traces contribute their final error after they stopped.
        std::ostringstream os;
        os << "n,mean,p10,p90,min,max\n";
        const auto& idx = run.traces[longest].index;
        for (std::size_t row = 0; row < idx.size(); ++row) {
            std::vector<double> col;
            for (const auto& e : run.errors) col.push_back(e[std::min(row, e.size() - 1)]);
            const Bands b = aggregate(col);
            os << idx[row] << ',' << format_double(b.mean) << ',' << format_double(b.p10) << ','
               << format_double(b.p90) << ',' << format_double(b.min) << ',' << format_double(b.max) << '\n';
        }
        std::ofstream out(dir / (run.name + "_errors.csv"), std::ios::binary);
        if (!out) throw IoError("cannot write error bands for " + run.name);
        out << os.str();
    }
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out) throw IoError("cannot write summary.json");
    out << r.summary().dump(2) << '\n';
}

}  // namespace fixmann
