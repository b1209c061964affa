#include <charconv>
#include <cstdio>
#include <fstream>

#include "fixmann/errors.hpp"
#include "fixmann/mdp.hpp"

namespace fixmann {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_vec(const Vec& x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ", ";
        s += format_double(x[i]);
    }
    return s + ")";
}

namespace {

double parse_number_text(const std::string& text) {
    auto parse = [&](const std::string& t) {
        double v = 0.0;
        const char* b = t.data();
        const char* e = b + t.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e) throw ValidationError("not a number: '" + text + "'");
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse(text);
    const double num = parse(text.substr(0, slash));
    const double den = parse(text.substr(slash + 1));
    if (den == 0.0) throw ValidationError("zero denominator in '" + text + "'");
    return num / den;
}

}  // namespace

double parse_probability(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_number_text(j.get<std::string>());
    throw ValidationError("probability must be a number or a decimal string");
}

json Mdp::to_json() const {
    json tr = json::array();
    for (int s = 0; s < static_cast<int>(num_states()); ++s)
        for (int a = 0; a < static_cast<int>(num_actions()); ++a)
            for (const auto& t : row(s, a))
                tr.push_back(json{{"from", states_[s]}, {"action", actions_[a]}, {"to", states_[t.to]}, {"p", t.p},
                                  {"r", t.r}});
    return json{{"states", states_}, {"actions", actions_}, {"transitions", tr}};
}

Mdp Mdp::from_json(const json& j) {
    Mdp m;
    try {
        m = Mdp(j.at("states").get<std::vector<std::string>>(), j.at("actions").get<std::vector<std::string>>());
        for (const auto& t : j.at("transitions")) {
            const std::string from = t.at("from").get<std::string>();
            const std::string act = t.at("action").get<std::string>();
            const std::string to = t.at("to").get<std::string>();
            const int s = m.state_index(from), a = m.action_index(act), d = m.state_index(to);
            if (s < 0 || d < 0) throw ValidationError("unknown state in transition " + from + " -> " + to);
            if (a < 0) throw ValidationError("unknown action " + act);
            const double p = parse_probability(t.at("p"));
            const double r = t.contains("r") ? parse_probability(t.at("r")) : 0.0;
            m.add_transition(s, a, d, p, r);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed MDP JSON: ") + e.what());
    }
    const ValidationReport rep = validate_mdp(m);
    if (!rep.ok) throw ValidationError("invalid MDP: " + rep.problems.front());
    return m;
}

Mdp Mdp::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace fixmann
