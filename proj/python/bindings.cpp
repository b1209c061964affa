#include <memory>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/harness.hpp"
#include "fixmann/sampling.hpp"
#include "fixmann/ssg.hpp"

namespace py = pybind11;
using namespace fixmann;
using nlohmann::json;

namespace {

// Python objects cross the boundary as JSON text.
json to_json(const py::object& o) {
    const std::string s = py::module_::import("json").attr("dumps")(o).cast<std::string>();
    return json::parse(s);
}

py::object from_json(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Mdp mdp_arg(const py::object& o) {
    if (py::isinstance<py::str>(o)) return fixtures::mdp_by_name(o.cast<std::string>(), "");
    return Mdp::from_json(to_json(o));
}

Ssg ssg_arg(const py::object& o) {
    if (py::isinstance<py::str>(o)) return fixtures::ssg_by_name(o.cast<std::string>(), "");
    return Ssg::from_json(to_json(o));
}

MannScheme scheme_arg(const py::object& o) {
    if (o.is_none()) return build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1, 2), 1);
    return MannScheme::from_json(to_json(o));
}

StopRule stop_rule(std::int64_t max_steps, double tol) {
    StopRule s;
    s.max_steps = max_steps;
    s.update_tol = tol;
    return s;
}

py::dict trace_dict(const IterationTrace& t) {
    py::dict d;
    d["final"] = t.final_point();
    d["steps"] = t.steps;
    d["stop_reason"] = to_string(t.stop_reason);
    d["diverged"] = t.diverged;
    d["index"] = t.index;
    d["points"] = t.points;
    if (t.has_alg1_columns()) {
        d["pulls"] = t.pulls;
        d["total_samples"] = t.total_samples;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dampened Mann iteration for monotone non-expansive maps, MDPs and stochastic games";

    // Later registrations are tried first, so the base class goes first.
    py::register_exception<Error>(m, "FixmannError", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);

    m.def(
        "classify_scheme",
        [](const py::object& scheme) {
            const SchemeClass c = classify_scheme(scheme_arg(scheme));
            py::dict d;
            d["tag"] = to_string(c.tag);
            d["reason"] = c.reason;
            d["exact"] = c.exact();
            return d;
        },
        py::arg("scheme"), "Classify a scheme given as a JSON-like dict.");

    m.def(
        "iterate",
        [](const py::object& fn, const py::object& scheme, std::vector<double> x0, std::int64_t max_steps,
           double tol) {
            const MonotoneMap f = MonotoneMap::from_json(to_json(fn));
            const MannScheme s = scheme_arg(scheme);
            if (x0.empty()) x0.assign(f.dim(), 0.0);
            IterationOptions opt;
            opt.allow_invalid_scheme = true;
            return trace_dict(mann_iterate(s, MapSequence::constant(f), x0, stop_rule(max_steps, tol), opt));
        },
        py::arg("fn"), py::arg("scheme") = py::none(), py::arg("x0") = std::vector<double>{},
        py::arg("max_steps") = 100000, py::arg("tol") = 1e-6,
        "Run a Mann scheme (or 'kleene') on a map expression.");

    m.def(
        "solve_mdp",
        [](const py::object& model) {
            const Mdp mdp = mdp_arg(model);
            const Solution s = solve_value(mdp);
            py::dict d;
            d["v"] = s.v;
            d["policy"] = s.policy;
            d["states"] = mdp.state_names();
            return d;
        },
        py::arg("model"), "Optimal total reward; model is a dict, a fixture name or a path.");

    m.def(
        "mann_mdp",
        [](const py::object& model, const py::object& scheme, std::vector<double> x0, std::int64_t max_steps,
           double tol) {
            auto mdp = std::make_shared<const Mdp>(mdp_arg(model));
            if (x0.empty()) x0.assign(mdp->num_states(), 0.0);
            const MonotoneMap f = MonotoneMap::bellman(mdp, BellmanKind::State);
            IterationOptions opt;
            opt.allow_invalid_scheme = true;
            return trace_dict(mann_iterate(scheme_arg(scheme), MapSequence::constant(f), x0, stop_rule(max_steps, tol), opt));
        },
        py::arg("model"), py::arg("scheme") = py::none(), py::arg("x0") = std::vector<double>{},
        py::arg("max_steps") = 100000, py::arg("tol") = 1e-6);

    m.def(
        "bellman",
        [](const py::object& model, const std::vector<double>& v) { return bellman_state(mdp_arg(model), v); },
        py::arg("model"), py::arg("v"));

    m.def(
        "mecs",
        [](const py::object& model) {
            std::vector<std::vector<int>> out;
            for (const Mec& e : compute_mecs(mdp_arg(model)).mecs) out.push_back(e.states);
            return out;
        },
        py::arg("model"), "State sets of the maximal end components.");

    m.def(
        "solve_ssg",
        [](const py::object& game, const py::object& scheme, std::int64_t max_steps, double tol) {
            const SsgResult r = solve_ssg(ssg_arg(game), scheme_arg(scheme), stop_rule(max_steps, tol));
            return trace_dict(r.trace);
        },
        py::arg("game"), py::arg("scheme") = py::none(), py::arg("max_steps") = 1000000, py::arg("tol") = 1e-8);

    m.def(
        "ssg_brute_force",
        [](const py::object& game) { return brute_force_value(ssg_arg(game)); }, py::arg("game"));

    m.def("bernstein_sample_size", &bernstein_sample_size, py::arg("eps"), py::arg("delta"), py::arg("entries"));

    m.def(
        "algorithm1",
        [](const py::object& model, const py::object& config, const py::object& scheme) {
            auto mdp = std::make_shared<const Mdp>(mdp_arg(model));
            const Alg1Config cfg = Alg1Config::from_json(config.is_none() ? json::object() : to_json(config));
            MdpSampler sampler(mdp, cfg.seed);
            return trace_dict(algorithm1(scheme_arg(scheme), sampler, cfg.schedule, cfg.steps, cfg.bound_slack));
        },
        py::arg("model"), py::arg("config") = py::none(), py::arg("scheme") = py::none(),
        "algorithm1 on a sampled MDP.");

    m.def(
        "random_mdp",
        [](int n_states, const std::string& kind, int mec_count, std::uint64_t seed, bool normalize) {
            return from_json(gen_random_mdp(n_states, random_kind_from_string(kind), mec_count, seed, normalize).to_json());
        },
        py::arg("n_states"), py::arg("kind"), py::arg("mec_count") = 0, py::arg("seed") = 0,
        py::arg("normalize") = false);

    m.def(
        "run_experiment",
        [](const std::string& config_path, const std::string& out_dir) {
            const ExperimentReport r = run_experiment(ExperimentConfig::load(config_path));
            if (!out_dir.empty()) write_report(r, out_dir);
            return from_json(r.summary());
        },
        py::arg("config_path"), py::arg("out_dir") = "");
}
