#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fixmann/errors.hpp"
#include "fixmann/harness.hpp"

namespace fixmann {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool any_finite(const std::vector<double>& xs) {
    for (double v : xs)
        if (!std::isnan(v)) return true;
    return false;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json nums(const Vec& xs) {
    json a = json::array();
    for (double v : xs) a.push_back(num(v));
    return a;
}

double get_num(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Vec get_nums(const json& j) {
    Vec out;
    for (const auto& v : j) out.push_back(get_num(v));
    return out;
}

}  // namespace

std::string trace_csv(const IterationTrace& t) {
    const std::size_t d = t.points.empty() ? 0 : t.points.front().size();
    const bool diag = any_finite(t.update_norms) || any_finite(t.residuals);
    const bool alg1 = t.has_alg1_columns();
    std::ostringstream os;
    os << "n";
    for (std::size_t i = 0; i < d; ++i) os << ",x" << i;
    if (diag) os << ",update,residual";
    if (alg1) os << ",n_i,gamma_i,delta_i,total_samples";
    os << '\n';
    for (std::size_t k = 0; k < t.points.size(); ++k) {
        os << t.index[k];
        for (double v : t.points[k]) os << ',' << format_double(v);
        if (diag) os << ',' << format_double(t.update_norms[k]) << ',' << format_double(t.residuals[k]);
        if (alg1)
            os << ',' << t.pulls[k] << ',' << format_double(t.gammas[k]) << ',' << format_double(t.deltas[k]) << ','
               << t.total_samples[k];
        os << '\n';
    }
    return os.str();
}

json trace_to_json(const IterationTrace& t) {
    json pts = json::array();
    for (const auto& p : t.points) pts.push_back(nums(p));
    return json{{"schema", "fixmann.trace"},
                {"version", 1},
                {"index", t.index},
                {"points", pts},
                {"update_norms", nums(t.update_norms)},
                {"residuals", nums(t.residuals)},
                {"pulls", t.pulls},
                {"gammas", nums(t.gammas)},
                {"deltas", nums(t.deltas)},
                {"total_samples", t.total_samples},
                {"stop_reason", to_string(t.stop_reason)},
                {"final_index", t.final_index},
                {"steps", t.steps},
                {"diverged", t.diverged},
                {"strided", t.strided},
                {"tail_min", nums(t.tail_min)},
                {"tail_max", nums(t.tail_max)},
                {"metadata", t.metadata}};
}

IterationTrace trace_from_json(const json& j) {
    IterationTrace t;
    try {
        if (j.value("schema", std::string()) != "fixmann.trace") throw IoError("not a trace document");
        t.index = j.at("index").get<std::vector<std::int64_t>>();
        for (const auto& p : j.at("points")) t.points.push_back(get_nums(p));
        t.update_norms = get_nums(j.at("update_norms"));
        t.residuals = get_nums(j.at("residuals"));
        t.pulls = j.at("pulls").get<std::vector<std::int64_t>>();
        t.gammas = get_nums(j.at("gammas"));
        t.deltas = get_nums(j.at("deltas"));
        t.total_samples = j.at("total_samples").get<std::vector<std::int64_t>>();
        t.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
        t.final_index = j.at("final_index").get<std::int64_t>();
        t.steps = j.at("steps").get<std::int64_t>();
        t.diverged = j.at("diverged").get<bool>();
        t.strided = j.at("strided").get<bool>();
        t.tail_min = get_nums(j.at("tail_min"));
        t.tail_max = get_nums(j.at("tail_max"));
        t.metadata = j.at("metadata");
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed trace JSON: ") + e.what());
    }
    if (t.index.size() != t.points.size()) throw IoError("trace columns have different lengths");
    return t;
}

void emit_trace(const IterationTrace& t, const std::string& path, TraceFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    if (format == TraceFormat::Csv)
        out << trace_csv(t);
    else
        out << trace_to_json(t).dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

IterationTrace load_trace_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return trace_from_json(j);
}

}  // namespace fixmann
