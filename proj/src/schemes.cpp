#include "fixmann/schemes.hpp"

#include <cmath>
#include <sstream>

#include "fixmann/errors.hpp"
#include "fixmann/funcspace.hpp"

namespace fixmann {

using nlohmann::json;

ParamSeq ParamSeq::zero() { return ParamSeq(); }

ParamSeq ParamSeq::constant(double c) {
    if (!(c >= 0.0 && c < 1.0)) throw RangeError("constant parameter must lie in [0,1)");
    ParamSeq s;
    s.family_ = Family::Constant;
    s.scale_ = c;
    return s;
}

ParamSeq ParamSeq::harmonic(double scale, double offset) {
    return power_harmonic(scale, offset, 1.0).retag_harmonic();
}

ParamSeq ParamSeq::power_harmonic(double scale, double offset, double p) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw RangeError("harmonic scale must be positive");
    if (!(offset >= 1.0) || !std::isfinite(offset)) throw RangeError("harmonic offset must be >= 1");
    if (!(p > 0.0) || !std::isfinite(p)) throw RangeError("harmonic exponent must be positive");
    ParamSeq s;
    s.family_ = Family::PowerHarmonic;
    s.scale_ = scale;
    s.offset_ = offset;
    s.p_ = p;
    return s;
}

ParamSeq ParamSeq::retag_harmonic() const {
    ParamSeq s = *this;
    s.family_ = Family::Harmonic;
    return s;
}

ParamSeq ParamSeq::complement(const ParamSeq& inner) {
    if (inner.family_ != Family::Constant && inner.family_ != Family::Harmonic &&
        inner.family_ != Family::PowerHarmonic)
        throw RangeError("complement requires a constant or harmonic inner sequence");
    if (inner.family_ == Family::Constant && inner.scale_ <= 0.0)
        throw RangeError("complement of zero is 1, outside [0,1)");
    ParamSeq s;
    s.family_ = Family::Complement;
    s.inner_ = std::make_shared<const ParamSeq>(inner);
    return s;
}

ParamSeq ParamSeq::custom(std::function<double(std::int64_t)> fn) {
    if (!fn) throw RangeError("custom sequence needs a callable");
    ParamSeq s;
    s.family_ = Family::Custom;
    s.fn_ = std::move(fn);
    return s;
}

double ParamSeq::operator()(std::int64_t n) const {
    switch (family_) {
    case Family::Zero: return 0.0;
    case Family::Constant: return scale_;
    case Family::Harmonic: return scale_ / (static_cast<double>(n) + offset_ - 1.0);
    case Family::PowerHarmonic:
        return scale_ / std::pow(static_cast<double>(n) + offset_ - 1.0, p_);
    case Family::Complement: return 1.0 - (*inner_)(n);
    case Family::Custom: return fn_(n);
    }
    return 0.0;
}

bool ParamSeq::identically_zero() const {
    return family_ == Family::Zero || (family_ == Family::Constant && scale_ == 0.0);
}

json ParamSeq::to_json() const {
    switch (family_) {
    case Family::Zero: return json{{"family", "zero"}};
    case Family::Constant: return json{{"family", "constant"}, {"value", scale_}};
    case Family::Harmonic:
        return json{{"family", "harmonic"}, {"scale", scale_}, {"offset", offset_}};
    case Family::PowerHarmonic:
        return json{{"family", "power_harmonic"}, {"scale", scale_}, {"offset", offset_}, {"p", p_}};
    case Family::Complement: return json{{"family", "complement"}, {"inner", inner_->to_json()}};
    case Family::Custom: return json{{"family", "custom"}};
    }
    return json{};
}

ParamSeq ParamSeq::from_json(const json& j) {
    if (j.is_number()) return j.get<double>() == 0.0 ? zero() : constant(j.get<double>());
    if (!j.is_object() || !j.contains("family")) throw ConfigError("parameter sequence needs a family");
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "zero") return zero();
    if (fam == "constant") return constant(j.value("value", j.value("c", 0.0)));
    if (fam == "harmonic") return harmonic(j.value("scale", 1.0), j.value("offset", 1.0));
    if (fam == "power_harmonic")
        return power_harmonic(j.value("scale", 1.0), j.value("offset", 1.0), j.value("p", 1.0));
    if (fam == "complement") return complement(from_json(j.at("inner")));
    if (fam == "custom") throw ConfigError("custom sequences cannot be loaded from JSON");
    throw ConfigError("unknown sequence family: " + fam);
}

namespace {

void check_range(const ParamSeq& s, std::int64_t start, const char* name) {
    if (s.family() == Family::Custom) return;
    // Every closed-form family is monotone in n, so both ends of the tail bound it.
    const double first = s(start);
    if (!(first >= 0.0 && first < 1.0)) {
        std::ostringstream os;
        os << name << " term at index " << start << " is " << first << ", outside [0,1)";
        throw RangeError(os.str());
    }
}

double seq_limit(const ParamSeq& s) {
    switch (s.family()) {
    case Family::Zero: return 0.0;
    case Family::Constant: return s.scale();
    case Family::Harmonic:
    case Family::PowerHarmonic: return 0.0;
    case Family::Complement: return 1.0 - seq_limit(*s.inner());
    case Family::Custom: return 0.0;
    }
    return 0.0;
}

// Sum of a non-negative closed-form sequence diverges.
bool seq_sum_diverges(const ParamSeq& s) {
    switch (s.family()) {
    case Family::Zero: return false;
    case Family::Constant: return s.scale() > 0.0;
    case Family::Harmonic: return true;
    case Family::PowerHarmonic: return s.exponent() <= 1.0;
    case Family::Complement: return true;
    case Family::Custom: return false;
    }
    return false;
}

// Decay exponent of a harmonic-type sequence (terms ~ scale / n^p).
double decay_exponent(const ParamSeq& s) {
    if (s.family() == Family::Harmonic) return 1.0;
    if (s.family() == Family::PowerHarmonic) return s.exponent();
    return 0.0;
}

}  // namespace

std::string to_string(SchemeTag t) {
    switch (t) {
    case SchemeTag::MannKleene: return "MannKleene";
    case SchemeTag::RelaxedMannKleene: return "RelaxedMannKleene";
    case SchemeTag::ContractionOnly: return "ContractionOnly";
    case SchemeTag::Invalid: return "Invalid";
    }
    return "Invalid";
}

MannScheme build_scheme(const ParamSeq& alpha, const ParamSeq& beta, std::int64_t start_index) {
    if (start_index < 1) throw RangeError("start index must be >= 1");
    check_range(alpha, start_index, "alpha");
    check_range(beta, start_index, "beta");
    return MannScheme{alpha, beta, start_index};
}

MannScheme kleene_scheme() { return MannScheme{ParamSeq::zero(), ParamSeq::zero(), 1}; }

SchemeClass classify_scheme(const MannScheme& s) {
    SchemeClass c;
    if (s.alpha.family() == Family::Custom || s.beta.family() == Family::Custom) {
        c.reason = "unverifiable";
        return c;
    }
    const double blim = seq_limit(s.beta);
    if (blim != 0.0) {
        c.reason = "lim beta != 0";
        return c;
    }
    if (s.beta.family() == Family::Zero || s.beta.identically_zero() || !seq_sum_diverges(s.beta)) {
        c.reason = "Σβ finite";
        return c;
    }
    const double alim = seq_limit(s.alpha);
    c.alpha_limit = alim;
    if (alim == 0.0) {
        c.tag = SchemeTag::MannKleene;
        return c;
    }
    if (alim < 1.0) {
        c.tag = SchemeTag::RelaxedMannKleene;
        return c;
    }
    // alpha -> 1: only Complement of a vanishing inner sequence gets here.
    const ParamSeq& inner = *s.alpha.inner();
    if (!seq_sum_diverges(inner)) {
        c.reason = "Σ(1-α) finite";
        return c;
    }
    if (!(decay_exponent(s.beta) > decay_exponent(inner))) {
        c.reason = "β/(1-α) does not vanish";
        return c;
    }
    c.tag = SchemeTag::ContractionOnly;
    return c;
}

void mann_combine(const MannScheme& s, std::int64_t n, const Vec& x, const Vec& fx, Vec& out) {
    const double a = s.alpha(n);
    const double b = s.beta(n);
    out.resize(x.size());
    if (a == 0.0 && b == 0.0) {
        out = fx;
        return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (1.0 - b) * (a * x[i] + (1.0 - a) * fx[i]);
}

Vec mann_step(const MannScheme& s, std::int64_t n, const MonotoneMap& f, const Vec& x) {
    if (n < s.start_index) throw RangeError("step index precedes the scheme start index");
    if (!all_finite_nonneg(x)) throw DomainError("iterate has a negative or non-finite component");
    Vec fx = f(x);
    Vec out;
    mann_combine(s, n, x, fx, out);
    return out;
}

json MannScheme::to_json() const {
    return json{{"alpha", alpha.to_json()}, {"beta", beta.to_json()}, {"start", start_index}};
}

MannScheme MannScheme::from_json(const json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "kleene") return kleene_scheme();
        throw ConfigError("unknown scheme name: " + name);
    }
    ParamSeq a = j.contains("alpha") ? ParamSeq::from_json(j.at("alpha")) : ParamSeq::zero();
    ParamSeq b = j.contains("beta") ? ParamSeq::from_json(j.at("beta")) : ParamSeq::zero();
    return build_scheme(a, b, j.value("start", std::int64_t{1}));
}

}  // namespace fixmann
