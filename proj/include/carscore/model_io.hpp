#pragma once

// Fitted-model persistence as JSON:
//
//   {
//     "format": "carscore-model", "version": 1,
//     "names": [...], "selected": [...],          // 0-based column indices
//     "intercept": a, "coefficients": [...],
//     "r_squared": .., "r_squared_adj": .., "dof_residual": .., "n": ..,
//     "tss": .., "rss": .., "ess": ..,
//     "moments": {"means": [...], "sds": [...], "y_mean": .., "y_sd": ..},
//     "estimator": {"kind": "empirical" | "shrinkage" | "population", "lambda": ..}
//   }
//
// Numbers are written in shortest round-trip form (at most 17 significant
// digits), so load(save(m)) reproduces every double bit for bit.

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "carscore/error.hpp"
#include "carscore/regress.hpp"

namespace carscore {

namespace detail {

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_eigen(const std::vector<double>& v) {
    Vector out(static_cast<Index>(v.size()));
    for (Index i = 0; i < out.size(); ++i) out(i) = v[static_cast<std::size_t>(i)];
    return out;
}

inline EstimatorKind estimator_kind_from(const std::string& s) {
    if (s == "empirical") return EstimatorKind::Empirical;
    if (s == "shrinkage") return EstimatorKind::Shrinkage;
    if (s == "population") return EstimatorKind::Population;
    fail(ErrorCode::ParseError, "unknown estimator kind '" + s + "'");
}

}  // namespace detail

inline nlohmann::json model_to_json(const FittedModel& m) {
    nlohmann::json j;
    j["format"] = "carscore-model";
    j["version"] = 1;
    j["names"] = m.names;
    j["selected"] = m.selected;
    j["intercept"] = m.intercept;
    j["coefficients"] = detail::to_std(m.coefficients);
    j["r_squared"] = m.r_squared;
    j["r_squared_adj"] = m.r_squared_adj;
    j["dof_residual"] = m.dof_residual;
    j["n"] = m.n;
    j["tss"] = m.tss;
    j["rss"] = m.rss;
    j["ess"] = m.ess;
    j["moments"] = {{"means", detail::to_std(m.moments.means)},
                    {"sds", detail::to_std(m.moments.sds)},
                    {"y_mean", m.moments.y_mean},
                    {"y_sd", m.moments.y_sd}};
    j["estimator"] = {{"kind", to_string(m.estimator.kind)}, {"lambda", m.estimator.lambda}};
    return j;
}

inline FittedModel model_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "carscore-model", ErrorCode::ParseError, "not a model file");
        require(j.at("version").get<int>() == 1, ErrorCode::ParseError, "unsupported model version");
        FittedModel m;
        m.names = j.at("names").get<std::vector<std::string>>();
        m.selected = j.at("selected").get<std::vector<Index>>();
        m.intercept = j.at("intercept").get<double>();
        m.coefficients = detail::to_eigen(j.at("coefficients").get<std::vector<double>>());
        m.r_squared = j.at("r_squared").get<double>();
        m.r_squared_adj = j.at("r_squared_adj").get<double>();
        m.dof_residual = j.at("dof_residual").get<Index>();
        m.n = j.at("n").get<Index>();
        m.tss = j.at("tss").get<double>();
        m.rss = j.at("rss").get<double>();
        m.ess = j.at("ess").get<double>();
        const auto& mo = j.at("moments");
        m.moments.means = detail::to_eigen(mo.at("means").get<std::vector<double>>());
        m.moments.sds = detail::to_eigen(mo.at("sds").get<std::vector<double>>());
        m.moments.y_mean = mo.at("y_mean").get<double>();
        m.moments.y_sd = mo.at("y_sd").get<double>();
        m.estimator.kind = detail::estimator_kind_from(j.at("estimator").at("kind").get<std::string>());
        m.estimator.lambda = j.at("estimator").at("lambda").get<double>();
        const auto d = static_cast<Index>(m.names.size());
        require(m.coefficients.size() == d && m.moments.means.size() == d && m.moments.sds.size() == d,
                ErrorCode::ParseError, "model fields disagree on dimension");
        for (Index s : m.selected) require(s >= 0 && s < d, ErrorCode::ParseError, "selected index out of range");
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const FittedModel& m, std::ostream& out) { out << model_to_json(m).dump(2) << '\n'; }

inline FittedModel load_model(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

inline void save_model_file(const FittedModel& m, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::IoError, "cannot write '" + path + "'");
    save_model(m, out);
    require(static_cast<bool>(out), ErrorCode::IoError, "write to '" + path + "' failed");
}

inline FittedModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + path + "'");
    return load_model(in);
}

/// Field-by-field bitwise equality.
inline bool identical(const FittedModel& a, const FittedModel& b) {
    auto same = [](const Vector& x, const Vector& y) {
        return x.size() == y.size() && (x.size() == 0 || x.cwiseEqual(y).all());
    };
    return a.intercept == b.intercept && same(a.coefficients, b.coefficients) && a.selected == b.selected &&
           a.r_squared == b.r_squared && a.r_squared_adj == b.r_squared_adj && a.dof_residual == b.dof_residual &&
           a.n == b.n && same(a.moments.means, b.moments.means) && same(a.moments.sds, b.moments.sds) &&
           a.moments.y_mean == b.moments.y_mean && a.moments.y_sd == b.moments.y_sd && a.names == b.names &&
           a.estimator.kind == b.estimator.kind && a.estimator.lambda == b.estimator.lambda && a.tss == b.tss &&
           a.rss == b.rss && a.ess == b.ess;
}

}  // namespace carscore
