#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "fixmann/errors.hpp"
#include "fixmann/fixtures.hpp"
#include "fixmann/harness.hpp"
#include "fixmann/sampling.hpp"
#include "oracles.hpp"

using namespace fixmann;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("random generator kinds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Mdp chain = gen_random_mdp(15, RandomKind::Chain, 0, seed, false);
        CHECK(validate_mdp(chain).ok);
        CHECK(compute_mecs(chain).mecs.empty());
        for (int s = 0; s < 15; ++s) CHECK(chain.enabled_actions(s).size() <= 1);

        const Mdp simple = gen_random_mdp(15, RandomKind::SimpleMdp, 0, seed, false);
        CHECK(compute_mecs(simple).mecs.empty());
        CHECK_NOTHROW(rank_and_witness(simple));

        for (int mecs : {1, 3}) {
            const Mdp cm = gen_random_mdp(20, RandomKind::ChainWithMecs, mecs, seed, false);
            CHECK(compute_mecs(cm).mecs.size() == static_cast<std::size_t>(mecs));
            const Mdp mm = gen_random_mdp(20, RandomKind::MdpWithMecs, mecs, seed, false);
            CHECK(compute_mecs(mm).mecs.size() == static_cast<std::size_t>(mecs));
            CHECK(check_finite_value(mm));
        }
    }
    CHECK(gen_random_mdp(12, RandomKind::MdpWithMecs, 2, 5, false).to_json() ==
          gen_random_mdp(12, RandomKind::MdpWithMecs, 2, 5, false).to_json());
    CHECK_THROWS_AS(gen_random_mdp(10, RandomKind::Chain, 2, 1, false), ConfigError);
    CHECK_THROWS_AS(gen_random_mdp(10, RandomKind::MdpWithMecs, 0, 1, false), ConfigError);
    CHECK(random_kind_from_string(to_string(RandomKind::MdpWithMecs)) == RandomKind::MdpWithMecs);
}

TEST_CASE("normalisation gives unit value norm") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        for (RandomKind k : {RandomKind::SimpleMdp, RandomKind::MdpWithMecs}) {
            const Mdp m = gen_random_mdp(10, k, k == RandomKind::SimpleMdp ? 0 : 2, seed, true);
            CHECK(sup_norm(oracle::policy_enumeration_value(m)) == doctest::Approx(1.0).epsilon(1e-6));
        }
}

TEST_CASE("percentiles and bands") {
    CHECK(percentile({3.0, 1.0, 2.0, 4.0, 5.0}, 0.5) == 3.0);
    CHECK(percentile({0.0, 10.0}, 0.1) == doctest::Approx(1.0));
    const Bands b = aggregate({1.0, 2.0, 3.0, 4.0});
    CHECK(b.mean == 2.5);
    CHECK(b.min == 1.0);
    CHECK(b.max == 4.0);
    CHECK(b.p10 == doctest::Approx(1.3));
    CHECK(b.p90 == doctest::Approx(3.7));
}

TEST_CASE("trace serialisation") {
    IterationOptions opt;
    const MannScheme s = build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1, 2), 1);
    StopRule stop;
    stop.max_steps = 50;
    stop.update_tol = 1e-300;
    const IterationTrace t = mann_iterate(s, MapSequence::constant(fixtures::flip_map()), {0.0, 1.0}, stop, opt);
    const IterationTrace r = trace_from_json(trace_to_json(t));
    CHECK(r.index == t.index);
    CHECK(r.points == t.points);
    CHECK(r.steps == t.steps);
    CHECK(r.stop_reason == t.stop_reason);
    CHECK(std::isnan(r.update_norms.front()));
    CHECK(trace_csv(r) == trace_csv(t));
    CHECK(first_line(trace_csv(t)) == "n,x0,x1,update,residual");

    IterationTrace bare;
    bare.index = {0, 1};
    bare.points = {{1.0}, {2.0}};
    bare.update_norms = {std::nan(""), std::nan("")};
    bare.residuals = {std::nan(""), std::nan("")};
    CHECK(first_line(trace_csv(bare)) == "n,x0");

    const auto dir = std::filesystem::temp_directory_path() / "fixmann_trace_test";
    std::filesystem::create_directories(dir);
    emit_trace(t, (dir / "t.json").string(), TraceFormat::Json);
    CHECK(load_trace_json((dir / "t.json").string()).points == t.points);
    emit_trace(t, (dir / "t.csv").string(), TraceFormat::Csv);
    std::ifstream in(dir / "t.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == trace_csv(t));
    std::filesystem::remove_all(dir);
}

TEST_CASE("algorithm1 traces carry sampling columns") {
    auto m = std::make_shared<const Mdp>(fixtures::fig1_mdp());
    MdpSampler a(m, 1), b(m, 1);
    const MannScheme s = build_scheme(ParamSeq::zero(), ParamSeq::harmonic(1, 2), 1);
    const IterationTrace ta = algorithm1(s, a, GuaranteeSchedule{}, 100);
    const IterationTrace tb = algorithm1(s, b, GuaranteeSchedule{}, 100);
    CHECK(trace_csv(ta) == trace_csv(tb));
    CHECK(first_line(trace_csv(ta)) == "n,x0,x1,x2,x3,update,residual,n_i,gamma_i,delta_i,total_samples");
    CHECK(trace_from_json(trace_to_json(ta)).pulls == ta.pulls);
}

TEST_CASE("piecewise experiment: Kleene is faster than the dampened scheme") {
    const ExperimentReport r = run_experiment(ExperimentConfig::load(std::string(FIXMANN_DATA_DIR) + "/exp_piecewise.json"));
    CHECK(r.references.front()[0] == doctest::Approx(1.0).epsilon(1e-9));
    const RunReport& k = r.run("kleene");
    const RunReport& m = r.run("mann_damped");
    REQUIRE(k.reach_index.front() >= 0);
    CHECK((m.reach_index.front() < 0 || k.reach_index.front() < m.reach_index.front()));
    CHECK(k.final_errors.front() < 1e-6);
}

TEST_CASE("end-component experiment separates dampened and undampened runs") {
    const ExperimentReport r = run_experiment(ExperimentConfig::load(std::string(FIXMANN_DATA_DIR) + "/exp_fig4.json"));
    CHECK(sup_dist(r.references.front(), {2.0, 2.0, 2.0, 3.0, 2.5, 0.0, 0.0}) < 1e-9);
    CHECK(r.run("kleene").final_errors.front() > 0.5);
    CHECK(r.run("mann").final_errors.front() > 0.5);
    CHECK(r.run("kleene_damped").final_errors.front() < 1e-2);
    CHECK(r.run("mann_damped").final_errors.front() < 1e-2);

    const auto dir = std::filesystem::temp_directory_path() / "fixmann_report_test";
    write_report(r, dir.string());
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "kleene_0.csv"));
    CHECK(std::filesystem::exists(dir / "mann_damped_errors.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("experiment configs are validated") {
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"kind", "exact_fn"}, {"runs", nlohmann::json::array()}}),
                    ConfigError);
    nlohmann::json j{{"kind", "sampled_mdp"},
                     {"instance", "fig1"},
                     {"runs", {{{"name", "k"}, {"scheme", "kleene"}}}}};
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), IoError);
}
