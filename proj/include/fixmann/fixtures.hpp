#pragma once

#include <memory>
#include <string>

#include "fixmann/funcspace.hpp"
#include "fixmann/mdp.hpp"
#include "fixmann/ssg.hpp"

namespace fixmann::fixtures {

// Four-state example with actions b, c; v* = (5, 5, 3, 0).
Mdp fig1_mdp();
// End-component example with s1 as a final state; v* = (0, 2, 2, 0).
Mdp fig2_mdp();
// Same, with the unlabelled zero-reward self-loop at s1 kept as action "loop".
Mdp fig2_mdp_with_loop();
// Seven states s1..s5, sF, sG with one MEC {s1, s2, s3}.
Mdp fig4_mdp();

// m1 -> {x1, t0}, x1 -> {a1, t1}, a1 -> t0/t1 with 1/2 each, w = (0, 1).
Ssg ssg_example();

// x -> min(max(x/2 + 1/2, x), x/2 + 1) on [0, inf); least fixpoint 1.
MonotoneMap piecewise_map();
// (x, y) -> (y, x) on [0,1]^2.
MonotoneMap flip_map();

// f_n(x) = (1 - 1/m) x + 1/m on [0,1] with m = n^speedup.
MapSequence intro_family(int speedup = 1);
// f_n = flip for even n, (y - 2/n, x + 2/n) truncated to [0,1] for odd n.
MapSequence flip_perturbation();
// f_n(x) = max(x, (1 - a) x^n + a) componentwise on [0,1]^d.
MapSequence approx_max_family(const Vec& a);

// Sequence named in experiment configs: "intro", "flip", "approx_max".
struct ApproxFamily {
    MapSequence seq;
    Vec reference;  // least fixpoint of the limit
};
ApproxFamily approx_family(const nlohmann::json& family);

// Resolves "fig1" / "fig2" / "fig2_loop" / "fig4" or a file path.
Mdp mdp_by_name(const std::string& name, const std::string& base_dir = "");
Ssg ssg_by_name(const std::string& name, const std::string& base_dir = "");

}  // namespace fixmann::fixtures
