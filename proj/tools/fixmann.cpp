#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/harness.hpp"
#include "fixmann/sampling.hpp"
#include "fixmann/ssg.hpp"

using namespace fixmann;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kDiverged = 3;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Inline JSON, the word "kleene", or a path to a JSON file.
MannScheme parse_scheme(const std::string& arg) {
    if (arg == "kleene") return kleene_scheme();
    json j;
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '"')) {
        try {
            j = json::parse(arg);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad scheme JSON: ") + e.what());
        }
    } else {
        j = read_json_file(arg);
    }
    return MannScheme::from_json(j);
}

MannScheme default_scheme() { return build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1.0, 2.0), 1); }

Vec parse_csv(const std::string& s) {
    Vec out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + tok + "' in vector");
        }
    }
    return out;
}

void maybe_emit(const IterationTrace& t, const std::string& out) {
    if (out.empty()) return;
    const bool as_json = std::filesystem::path(out).extension() == ".json";
    emit_trace(t, out, as_json ? TraceFormat::Json : TraceFormat::Csv);
}

void print_trace_result(const IterationTrace& t, const std::vector<std::string>* names) {
    const Vec& x = t.final_point();
    for (std::size_t i = 0; i < x.size(); ++i)
        std::cout << (names ? (*names)[i] : "x" + std::to_string(i)) << " " << format_double(x[i]) << "\n";
    std::cout << "steps " << t.steps << "\nstop " << to_string(t.stop_reason) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dampened Mann iteration for monotone non-expansive maps, MDPs and stochastic games"};
    app.require_subcommand(1);

    std::string file, scheme_arg, x0_arg, out, fn_arg, mdp_arg, alg1_arg, cfg_arg;
    double tol = 1e-6;
    std::int64_t steps = 100000;
    std::uint64_t seed = 0;
    bool brute = false, state_action = false;

    auto* solve_mdp = app.add_subcommand("solve-mdp", "Optimal values of an MDP");
    solve_mdp->add_option("file", file, "MDP JSON file")->required();
    solve_mdp->add_option("--scheme", scheme_arg, "Mann scheme (JSON, file or 'kleene'); default: exact solver");
    solve_mdp->add_option("--tol", tol, "Stopping tolerance");
    solve_mdp->add_option("--x0", x0_arg, "Start vector as comma separated values");
    solve_mdp->add_option("--max-steps", steps, "Step limit for scheme runs");
    solve_mdp->add_flag("--state-action", state_action, "Iterate the state-action operator");
    solve_mdp->add_option("--out", out, "Trace output (.csv or .json)");

    auto* solve_ssg_cmd = app.add_subcommand("solve-ssg", "Value vector of a simple stochastic game");
    solve_ssg_cmd->add_option("file", file, "SSG JSON file")->required();
    solve_ssg_cmd->add_option("--scheme", scheme_arg, "Mann scheme (JSON or file)");
    solve_ssg_cmd->add_option("--tol", tol, "Stopping tolerance");
    solve_ssg_cmd->add_option("--max-steps", steps, "Step limit");
    solve_ssg_cmd->add_flag("--brute-force", brute, "Also print the enumeration value");
    solve_ssg_cmd->add_option("--out", out, "Trace output (.csv or .json)");

    auto* iterate = app.add_subcommand("iterate", "Run a scheme on a map expression");
    iterate->add_option("--fn", fn_arg, "Map expression JSON file")->required();
    iterate->add_option("--scheme", scheme_arg, "Mann scheme (JSON, file or 'kleene')")->required();
    iterate->add_option("--steps", steps, "Step limit");
    iterate->add_option("--tol", tol, "Stopping tolerance");
    iterate->add_option("--x0", x0_arg, "Start vector as comma separated values");
    iterate->add_option("--out", out, "Trace output (.csv or .json)");

    auto* sample = app.add_subcommand("sample", "algorithm1 on a sampled MDP");
    sample->add_option("--mdp", mdp_arg, "MDP JSON file")->required();
    sample->add_option("--alg1", alg1_arg, "Schedule config JSON file")->required();
    auto* seed_opt = sample->add_option("--seed", seed, "Master seed (overrides the config)");
    sample->add_option("--scheme", scheme_arg, "Mann-Kleene scheme (JSON or file)");
    sample->add_option("--out", out, "Trace output (.csv or .json)");

    auto* experiment = app.add_subcommand("experiment", "Run an experiment config");
    experiment->add_option("config", cfg_arg, "Experiment JSON")->required();
    experiment->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        StopRule stop;
        stop.max_steps = steps;
        stop.update_tol = tol;

        if (*solve_mdp) {
            auto m = std::make_shared<const Mdp>(Mdp::load(file));
            if (scheme_arg.empty() && x0_arg.empty() && !state_action) {
                const Solution sol = solve_value(*m, std::min(tol, 1e-10));
                for (std::size_t s = 0; s < m->num_states(); ++s) {
                    std::cout << m->state_names()[s] << " " << format_double(sol.v[s]);
                    if (sol.policy[s] >= 0) std::cout << " " << m->action_names()[sol.policy[s]];
                    std::cout << "\n";
                }
                return kOk;
            }
            const BellmanKind kind = state_action ? BellmanKind::StateAction : BellmanKind::State;
            const MonotoneMap f = MonotoneMap::bellman(m, kind);
            const MannScheme s = scheme_arg.empty() ? default_scheme() : parse_scheme(scheme_arg);
            const Vec x0 = x0_arg.empty() ? Vec(f.dim(), 0.0) : parse_csv(x0_arg);
            IterationOptions opt;
            opt.allow_invalid_scheme = true;
            const IterationTrace t = mann_iterate(s, MapSequence::constant(f), x0, stop, opt);
            maybe_emit(t, out);
            print_trace_result(t, state_action ? nullptr : &m->state_names());
            return t.diverged ? kDiverged : kOk;
        }
        if (*solve_ssg_cmd) {
            const Ssg g = Ssg::load(file);
            const MannScheme s = scheme_arg.empty() ? default_scheme() : parse_scheme(scheme_arg);
            const SsgResult r = solve_ssg(g, s, stop);
            maybe_emit(r.trace, out);
            print_trace_result(r.trace, &g.names);
            if (brute) {
                const Vec b = brute_force_value(g);
                for (std::size_t v = 0; v < g.size(); ++v)
                    std::cout << "brute " << g.names[v] << " " << format_double(b[v]) << "\n";
            }
            return r.trace.diverged ? kDiverged : kOk;
        }
        if (*iterate) {
            const MonotoneMap f =
                MonotoneMap::from_json(read_json_file(fn_arg), std::filesystem::path(fn_arg).parent_path().string());
            const MannScheme s = parse_scheme(scheme_arg);
            const Vec x0 = x0_arg.empty() ? Vec(f.dim(), 0.0) : parse_csv(x0_arg);
            IterationOptions opt;
            opt.allow_invalid_scheme = true;
            const IterationTrace t = mann_iterate(s, MapSequence::constant(f), x0, stop, opt);
            maybe_emit(t, out);
            print_trace_result(t, nullptr);
            return t.diverged ? kDiverged : kOk;
        }
        if (*sample) {
            auto m = std::make_shared<const Mdp>(Mdp::load(mdp_arg));
            Alg1Config cfg = Alg1Config::from_json(read_json_file(alg1_arg));
            if (seed_opt->count() > 0) cfg.seed = seed;
            const MannScheme s = scheme_arg.empty() ? default_scheme() : parse_scheme(scheme_arg);
            MdpSampler sampler(m, cfg.seed);
            const IterationTrace t = algorithm1(s, sampler, cfg.schedule, cfg.steps, cfg.bound_slack);
            maybe_emit(t, out);
            print_trace_result(t, &m->state_names());
            std::cout << "total_samples " << sampler.total_samples() << "\n";
            return t.diverged ? kDiverged : kOk;
        }
        if (*experiment) {
            const ExperimentReport r = run_experiment(ExperimentConfig::load(cfg_arg));
            write_report(r, out);
            bool diverged = false, partial = false;
            for (const auto& run : r.runs) {
                for (const auto& t : run.traces) diverged = diverged || t.diverged;
                partial = partial || !run.failures.empty();
                std::cout << run.name;
                for (double e : run.final_errors) std::cout << " " << format_double(e);
                std::cout << "\n";
            }
            if (partial) std::cerr << "some runs failed; see summary.json\n";
            return diverged ? kDiverged : kOk;
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kInvalid;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kInvalid;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
