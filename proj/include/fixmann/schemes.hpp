#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "fixmann/vec.hpp"

namespace fixmann {

class MonotoneMap;

enum class Family { Zero, Constant, Harmonic, PowerHarmonic, Complement, Custom };

// Lazily evaluated parameter sequence n -> value in [0,1).
//   Harmonic(s, o):         s / (n + o - 1)
//   PowerHarmonic(s, o, p): s / (n + o - 1)^p
//   Complement(g):          1 - g(n)
class ParamSeq {
public:
    static ParamSeq zero();
    static ParamSeq constant(double c);
    static ParamSeq harmonic(double scale, double offset);
    static ParamSeq power_harmonic(double scale, double offset, double p);
    static ParamSeq complement(const ParamSeq& inner);
    static ParamSeq custom(std::function<double(std::int64_t)> fn);

    double operator()(std::int64_t n) const;

    Family family() const { return family_; }
    double scale() const { return scale_; }
    double offset() const { return offset_; }
    double exponent() const { return p_; }
    const ParamSeq* inner() const { return inner_.get(); }

    bool is_zero() const { return family_ == Family::Zero; }
    // True for Zero and Constant(0).
    bool identically_zero() const;

    nlohmann::json to_json() const;
    static ParamSeq from_json(const nlohmann::json& j);

private:
    ParamSeq() = default;
    ParamSeq retag_harmonic() const;
    Family family_ = Family::Zero;
    double scale_ = 0.0;
    double offset_ = 1.0;
    double p_ = 1.0;
    std::shared_ptr<const ParamSeq> inner_;
    std::function<double(std::int64_t)> fn_;
};

struct MannScheme {
    ParamSeq alpha = ParamSeq::zero();
    ParamSeq beta = ParamSeq::zero();
    std::int64_t start_index = 1;

    nlohmann::json to_json() const;
    static MannScheme from_json(const nlohmann::json& j);
};

enum class SchemeTag { MannKleene, RelaxedMannKleene, ContractionOnly, Invalid };

struct SchemeClass {
    SchemeTag tag = SchemeTag::Invalid;
    double alpha_limit = 0.0;
    std::string reason;

    bool valid() const { return tag != SchemeTag::Invalid; }
    // Mann-Kleene or relaxed Mann-Kleene.
    bool exact() const {
        return tag == SchemeTag::MannKleene || tag == SchemeTag::RelaxedMannKleene;
    }
};

std::string to_string(SchemeTag t);

MannScheme build_scheme(const ParamSeq& alpha, const ParamSeq& beta, std::int64_t start_index);
SchemeClass classify_scheme(const MannScheme& s);

// Undampened Kleene scheme: alpha = beta = 0.
MannScheme kleene_scheme();

Vec mann_step(const MannScheme& s, std::int64_t n, const MonotoneMap& f, const Vec& x);
// Combine an already evaluated image fx = f(x) into the step at index n.
void mann_combine(const MannScheme& s, std::int64_t n, const Vec& x, const Vec& fx, Vec& out);

}  // namespace fixmann
