#pragma once

// Command-line front end. `run` parses argv, executes one subcommand and
// returns the process exit status; all output goes to the given streams.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "carscore/car.hpp"
#include "carscore/csv.hpp"
#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/inference.hpp"
#include "carscore/model_io.hpp"
#include "carscore/parallel.hpp"
#include "carscore/regress.hpp"
#include "carscore/selection.hpp"
#include "carscore/simulate.hpp"

namespace carscore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

inline int exit_code(ErrorCode code) {
    switch (category(code)) {
        case ErrorCategory::Usage: return kExitUsage;
        case ErrorCategory::Data: return kExitData;
        case ErrorCategory::Numerical: return kExitNumerical;
    }
    return kExitUsage;
}

struct CriterionSpec {
    Criterion kind = Criterion::Bic;
    double alpha = 0.05;
    Index folds = 5;
    Index repeats = 1;
    Index k = 0;
    std::string text = "bic";
};

enum class Measure { Car, Genizi, HoffmanPratt, Marginal, Partial, BetaStd };

struct RunConfig {
    std::string command;
    std::string data_path;
    std::string response_col;
    std::string response_path;
    std::string model_path;
    std::string estimator_text;
    std::string criterion_text;
    std::string measure_text = "car";
    std::string scenario = "ex1";
    std::optional<Index> n;
    std::optional<double> sigma;
    std::string method_text = "car_empirical";
    Index reps = 200;
    std::optional<std::uint64_t> seed;
    std::string output = "csv";
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidConfig, "cannot parse " + what + " '" + s + "'");
}

inline Index parse_index(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos == s.size()) return static_cast<Index>(v);
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidConfig, "cannot parse " + what + " '" + s + "'");
}

inline std::string fmt(double v) { return csv::format_double(v); }

}  // namespace detail

inline EstimatorChoice parse_estimator(const std::string& text) {
    if (text == "empirical") return EstimatorChoice::empirical();
    if (text == "shrinkage") return EstimatorChoice::shrinkage();
    if (text.rfind("shrinkage:", 0) == 0) {
        const double lam = detail::parse_double(text.substr(10), "shrinkage intensity");
        require(lam >= 0.0 && lam <= 1.0, ErrorCode::LambdaOutOfRange, "shrinkage intensity outside [0, 1]");
        return EstimatorChoice::shrinkage(lam);
    }
    fail(ErrorCode::InvalidConfig, "unknown estimator '" + text + "' (empirical, shrinkage, shrinkage:LAMBDA)");
}

inline CriterionSpec parse_criterion(const std::string& text) {
    CriterionSpec c;
    c.text = text;
    const auto parts = detail::split(text, ':');
    require(!parts.empty(), ErrorCode::InvalidCriterion, "empty criterion");
    const std::string& head = parts[0];
    auto arity = [&](std::size_t lo, std::size_t hi) {
        require(parts.size() >= lo && parts.size() <= hi, ErrorCode::InvalidCriterion,
                "malformed criterion '" + text + "'");
    };
    if (head == "aic" || head == "cp" || head == "bic" || head == "ric") {
        arity(1, 1);
        c.kind = head == "aic" ? Criterion::Aic : head == "cp" ? Criterion::Cp : head == "bic" ? Criterion::Bic
                                                                                               : Criterion::Ric;
    } else if (head == "pvalue") {
        arity(1, 2);
        c.kind = Criterion::PValue;
        if (parts.size() == 2) c.alpha = detail::parse_double(parts[1], "alpha");
        require(c.alpha > 0.0 && c.alpha <= 1.0, ErrorCode::InvalidAlpha, "alpha outside (0, 1]");
    } else if (head == "cv") {
        arity(1, 3);
        c.kind = Criterion::Cv;
        if (parts.size() >= 2) c.folds = detail::parse_index(parts[1], "folds");
        if (parts.size() == 3) c.repeats = detail::parse_index(parts[2], "repeats");
    } else if (head == "fixed") {
        arity(2, 2);
        c.kind = Criterion::FixedK;
        c.k = detail::parse_index(parts[1], "k");
    } else {
        fail(ErrorCode::InvalidCriterion, "unknown criterion '" + text + "'");
    }
    return c;
}

inline std::vector<Measure> parse_measures(const std::string& text) {
    std::vector<Measure> out;
    for (const auto& m : detail::split(text, ',')) {
        if (m == "car") out.push_back(Measure::Car);
        else if (m == "genizi") out.push_back(Measure::Genizi);
        else if (m == "hoffman-pratt") out.push_back(Measure::HoffmanPratt);
        else if (m == "marginal") out.push_back(Measure::Marginal);
        else if (m == "partial") out.push_back(Measure::Partial);
        else if (m == "betastd") out.push_back(Measure::BetaStd);
        else if (m == "all")
            out.insert(out.end(), {Measure::Car, Measure::Genizi, Measure::HoffmanPratt, Measure::Marginal,
                                   Measure::Partial, Measure::BetaStd});
        else
            fail(ErrorCode::InvalidConfig, "unknown measure '" + m + "'");
    }
    require(!out.empty(), ErrorCode::InvalidConfig, "no measure given");
    return out;
}

inline std::string to_string(Measure m) {
    switch (m) {
        case Measure::Car: return "car";
        case Measure::Genizi: return "genizi";
        case Measure::HoffmanPratt: return "hoffman-pratt";
        case Measure::Marginal: return "marginal";
        case Measure::Partial: return "partial";
        case Measure::BetaStd: return "betastd";
    }
    return "unknown";
}

/// Empirical estimates when n > 2d, automatic shrinkage otherwise.
inline EstimatorChoice default_estimator(Index n, Index d) {
    return n > 2 * d ? EstimatorChoice::empirical() : EstimatorChoice::shrinkage();
}

class Runner {
public:
    Runner(RunConfig cfg, std::ostream& out) : cfg_(std::move(cfg)), out_(out) {}

    void execute() {
        as_table_ = cfg_.output == "table";
        require(cfg_.output == "csv" || as_table_, ErrorCode::InvalidConfig, "output must be csv or table");
        if (cfg_.command == "simulate") return simulate();
        if (cfg_.command == "predict") return predict_cmd();
        load_data();
        if (cfg_.command == "rank") return rank();
        if (cfg_.command == "select") return select();
        if (cfg_.command == "fit") return fit();
        if (cfg_.command == "importance") return importance();
        fail(ErrorCode::InvalidConfig, "unknown command '" + cfg_.command + "'");
    }

private:
    RunConfig cfg_;
    std::ostream& out_;
    bool as_table_ = false;
    Dataset data_;
    EstimatorChoice estimator_;

    void load_data() {
        require(!cfg_.data_path.empty(), ErrorCode::InvalidConfig, "--data is required");
        require(cfg_.response_col.empty() != cfg_.response_path.empty(), ErrorCode::InvalidConfig,
                "give exactly one of --response-col and --response-file");
        const csv::Table table = csv::read_file(cfg_.data_path);
        data_ = cfg_.response_col.empty()
                    ? csv::dataset_from_files(table, csv::read_file(cfg_.response_path))
                    : csv::dataset_from_column(table, cfg_.response_col);
        data_.validate();
        estimator_ = cfg_.estimator_text.empty() ? default_estimator(data_.rows(), data_.cols())
                                                 : parse_estimator(cfg_.estimator_text);
    }

    std::vector<std::pair<std::string, std::string>> base_config() const {
        std::vector<std::pair<std::string, std::string>> c{{"command", cfg_.command}};
        if (!cfg_.data_path.empty()) c.emplace_back("data", cfg_.data_path);
        if (!cfg_.response_col.empty()) c.emplace_back("response_col", cfg_.response_col);
        if (!cfg_.response_path.empty()) c.emplace_back("response_file", cfg_.response_path);
        if (data_.x.size() > 0) {
            c.emplace_back("n", std::to_string(data_.rows()));
            c.emplace_back("d", std::to_string(data_.cols()));
            c.emplace_back("estimator", estimator_.describe());
        }
        if (!cfg_.model_path.empty()) c.emplace_back("model", cfg_.model_path);
        if (cfg_.seed) c.emplace_back("seed", std::to_string(*cfg_.seed));
        c.emplace_back("output", cfg_.output);
        return c;
    }

    static void add_model_info(std::vector<std::pair<std::string, std::string>>& c, const CarAnalysis& a) {
        c.emplace_back("estimator_kind", to_string(a.kind));
        c.emplace_back("lambda", detail::fmt(a.lambda));
        c.emplace_back("r_squared", detail::fmt(a.r_squared));
    }

    std::string p_value_cell(const CarAnalysis& a, Index j) const {
        if (a.kind != EstimatorKind::Empirical) return "NA";
        return detail::fmt(p_value(NullSpec::car(data_.rows()), std::clamp(a.omega(j), -1.0, 1.0)));
    }

    void rank() {
        const CarAnalysis a = analyze(estimate(data_, estimator_));
        auto cfg = base_config();
        add_model_info(cfg, a);
        csv::write_config_header(out_, cfg);
        csv::Writer w({"name", "omega", "omega_sq", "rank", "p_value"});
        for (std::size_t r = 0; r < a.ranking.size(); ++r) {
            const Index j = a.ranking[r];
            w.add({data_.names[static_cast<std::size_t>(j)], detail::fmt(a.omega(j)), detail::fmt(a.importance(j)),
                   std::to_string(r + 1), p_value_cell(a, j)});
        }
        w.write(out_, as_table_);
    }

    SelectionResult run_selection(const CriterionSpec& c, const CarAnalysis& a) const {
        switch (c.kind) {
            case Criterion::Aic:
            case Criterion::Cp:
            case Criterion::Bic:
            case Criterion::Ric: return threshold_select(a, c.kind, data_.rows(), data_.cols());
            case Criterion::FixedK: return fixed_select(a, c.k);
            case Criterion::PValue: return pvalue_select(a, c.alpha, data_.rows());
            case Criterion::Cv: {
                require(cfg_.seed.has_value(), ErrorCode::InvalidConfig, "--seed is required for cv");
                CvOptions opt;
                opt.folds = c.folds;
                opt.repeats = c.repeats;
                opt.seed = *cfg_.seed;
                opt.estimator = estimator_;
                return cv_select(data_, opt);
            }
        }
        fail(ErrorCode::InvalidCriterion, "unsupported criterion");
    }

    void select() {
        const CriterionSpec c = parse_criterion(cfg_.criterion_text.empty() ? "bic" : cfg_.criterion_text);
        const CarAnalysis a = analyze(estimate(data_, estimator_));
        const SelectionResult s = run_selection(c, a);
        auto cfg = base_config();
        cfg.emplace_back("criterion", c.text);
        add_model_info(cfg, a);
        cfg.emplace_back("r_squared_used", detail::fmt(s.r_squared_used));
        cfg.emplace_back("threshold", detail::fmt(s.threshold_used));
        cfg.emplace_back("selected", std::to_string(s.size()));
        csv::write_config_header(out_, cfg);
        if (c.kind == Criterion::Cv)
            for (std::size_t g = 0; g < s.cv.k_grid.size(); ++g)
                out_ << "# cv k=" << s.cv.k_grid[g] << " mean_error=" << detail::fmt(s.cv.mean_error[g])
                     << " std_error=" << detail::fmt(s.cv.std_error[g]) << '\n';
        csv::Writer w({"name", "omega", "omega_sq", "rank", "p_value", "selected"});
        for (std::size_t r = 0; r < a.ranking.size(); ++r) {
            const Index j = a.ranking[r];
            const bool in = r < s.selected.size();
            w.add({data_.names[static_cast<std::size_t>(j)], detail::fmt(a.omega(j)), detail::fmt(a.importance(j)),
                   std::to_string(r + 1), p_value_cell(a, j), in ? "1" : "0"});
        }
        w.write(out_, as_table_);
    }

    void fit() {
        require(!cfg_.model_path.empty(), ErrorCode::InvalidConfig, "--model is required for fit");
        std::vector<Index> selected;
        std::string criterion = "none";
        if (cfg_.criterion_text.empty()) {
            for (Index j = 0; j < data_.cols(); ++j) selected.push_back(j);
        } else {
            const CriterionSpec c = parse_criterion(cfg_.criterion_text);
            criterion = c.text;
            selected = run_selection(c, analyze(estimate(data_, estimator_))).selected;
        }
        const FittedModel m = fit_subset(data_, selected, estimator_);
        save_model_file(m, cfg_.model_path);
        auto cfg = base_config();
        cfg.emplace_back("criterion", criterion);
        cfg.emplace_back("r_squared", detail::fmt(m.r_squared));
        cfg.emplace_back("r_squared_adj", detail::fmt(m.r_squared_adj));
        cfg.emplace_back("fit_lambda", detail::fmt(m.estimator.lambda));
        csv::write_config_header(out_, cfg);
        csv::Writer w({"name", "coefficient", "selected"});
        w.add({"(intercept)", detail::fmt(m.intercept), "1"});
        for (Index j = 0; j < m.dimension(); ++j)
            w.add({m.names[static_cast<std::size_t>(j)], detail::fmt(m.coefficients(j)),
                   std::find(selected.begin(), selected.end(), j) != selected.end() ? "1" : "0"});
        w.write(out_, as_table_);
    }

    void predict_cmd() {
        require(!cfg_.model_path.empty(), ErrorCode::InvalidConfig, "--model is required for predict");
        require(!cfg_.data_path.empty(), ErrorCode::InvalidConfig, "--data is required");
        const FittedModel m = load_model_file(cfg_.model_path);
        const csv::Table t = csv::read_file(cfg_.data_path);
        std::vector<Index> cols;
        for (const auto& name : m.names) cols.push_back(t.column(name));
        const Vector yhat = predict(m, csv::to_matrix(t, cols));
        csv::write_config_header(out_, {{"command", "predict"},
                                        {"data", cfg_.data_path},
                                        {"model", cfg_.model_path},
                                        {"rows", std::to_string(yhat.size())},
                                        {"output", cfg_.output}});
        csv::Writer w({"prediction"});
        for (Index i = 0; i < yhat.size(); ++i) w.add({detail::fmt(yhat(i))});
        w.write(out_, as_table_);
    }

    void importance() {
        const std::vector<Measure> measures = parse_measures(cfg_.measure_text);
        const CorrelationModel cm = estimate(data_, estimator_);
        const CarAnalysis a = analyze(cm, true);
        const CompetitorMeasures& c = *a.competitors;
        auto values = [&](Measure m) -> Vector {
            switch (m) {
                case Measure::Car: return a.importance;
                case Measure::Genizi: return c.genizi;
                case Measure::HoffmanPratt: return c.hoffman_pratt;
                case Measure::Marginal: return c.marginal;
                case Measure::Partial: return c.partial;
                case Measure::BetaStd: return c.b_std;
            }
            return {};
        };
        auto cfg = base_config();
        cfg.emplace_back("measure", cfg_.measure_text);
        add_model_info(cfg, a);
        cfg.emplace_back("dof", std::to_string(c.dof));
        for (Measure m : measures) {
            if (m != Measure::Car && m != Measure::Genizi && m != Measure::HoffmanPratt) continue;
            const double sum = values(m).sum();
            const bool ok = std::abs(sum - a.r_squared) <= 1e-10 * std::max(1.0, a.r_squared);
            cfg.emplace_back("sum_" + to_string(m), detail::fmt(sum));
            cfg.emplace_back("decomposition_" + to_string(m), ok ? "ok" : "mismatch");
        }
        csv::write_config_header(out_, cfg);
        std::vector<std::string> header{"name"};
        for (Measure m : measures) header.push_back(to_string(m));
        csv::Writer w(header);
        std::vector<Vector> cols;
        for (Measure m : measures) cols.push_back(values(m));
        for (Index j = 0; j < data_.cols(); ++j) {
            std::vector<std::string> row{data_.names[static_cast<std::size_t>(j)]};
            for (const auto& v : cols) row.push_back(detail::fmt(v(j)));
            w.add(std::move(row));
        }
        w.write(out_, as_table_);
    }

    void simulate() {
        require(cfg_.seed.has_value(), ErrorCode::InvalidConfig, "--seed is required for simulate");
        const Scenario base = Scenario::by_name(cfg_.scenario);
        const Index n = cfg_.n.value_or(50);
        const double sigma = cfg_.sigma.value_or(base.sigma());
        std::optional<EstimatorChoice> override_est;
        if (!cfg_.estimator_text.empty()) override_est = parse_estimator(cfg_.estimator_text);
        std::vector<SimulationReport> reports;
        std::vector<std::string> unavailable;
        std::vector<std::string> methods = detail::split(cfg_.method_text, ',');
        for (const auto& name : methods) {
            const Method method = method_from_string(name);
            try {
                reports.push_back(run_experiment(base, n, sigma, method, cfg_.reps, *cfg_.seed, override_est));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::MethodUnavailable || methods.size() == 1) throw;
                unavailable.push_back(name);
            }
        }
        csv::write_config_header(out_, {{"command", "simulate"},
                                        {"scenario", cfg_.scenario},
                                        {"n", std::to_string(n)},
                                        {"sigma", detail::fmt(sigma)},
                                        {"method", cfg_.method_text},
                                        {"reps", std::to_string(cfg_.reps)},
                                        {"seed", std::to_string(*cfg_.seed)},
                                        {"output", cfg_.output}});
        for (const auto& u : unavailable) out_ << "# unavailable: " << u << '\n';
        csv::Writer w({"scenario", "n", "sigma", "method", "estimator", "reps", "seed", "rme_x1000", "sd_x1000",
                       "tp_fp", "mean_tp", "mean_fp", "median_size"});
        for (const auto& r : aggregate(reports))
            w.add({r.scenario, std::to_string(r.n), detail::fmt(r.sigma), r.method, r.estimator,
                   std::to_string(r.reps), std::to_string(r.seed), detail::fmt(r.rme_x1000), detail::fmt(r.sd_x1000),
                   r.tp_fp, detail::fmt(r.mean_tp), detail::fmt(r.mean_fp), detail::fmt(r.median_size)});
        w.write(out_, as_table_);
    }
};

/// Parses argv and runs. Diagnostics are one line on `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"CAR-score variable ranking, selection and regression"};
    app.require_subcommand(1, 1);
    RunConfig cfg;

    auto data_opts = [&](CLI::App* sub) {
        sub->add_option("--data", cfg.data_path, "predictor CSV (header row first)");
        sub->add_option("--response-col", cfg.response_col, "response column inside --data");
        sub->add_option("--response-file", cfg.response_path, "single-column response CSV");
        sub->add_option("--estimator", cfg.estimator_text, "empirical | shrinkage | shrinkage:LAMBDA");
        sub->add_option("--output", cfg.output, "csv | table");
        sub->add_option("--seed", cfg.seed, "random seed");
    };

    auto* rank = app.add_subcommand("rank", "rank variables by squared CAR score");
    data_opts(rank);
    auto* sel = app.add_subcommand("select", "select variables by a criterion");
    data_opts(sel);
    sel->add_option("--criterion", cfg.criterion_text, "aic | cp | bic | ric | pvalue:A | cv:F:R | fixed:K");
    auto* fit = app.add_subcommand("fit", "fit and save a regression model");
    data_opts(fit);
    fit->add_option("--criterion", cfg.criterion_text, "selection criterion; default keeps all variables");
    fit->add_option("--model", cfg.model_path, "output model file")->required();
    auto* pred = app.add_subcommand("predict", "predict from a saved model");
    pred->add_option("--data", cfg.data_path, "CSV containing the model's predictor columns")->required();
    pred->add_option("--model", cfg.model_path, "model file")->required();
    pred->add_option("--output", cfg.output, "csv | table");
    auto* imp = app.add_subcommand("importance", "variable importance measures");
    data_opts(imp);
    imp->add_option("--measure", cfg.measure_text,
                    "comma list of car, genizi, hoffman-pratt, marginal, partial, betastd, or all");
    auto* sim = app.add_subcommand("simulate", "simulation benchmark");
    sim->add_option("--scenario", cfg.scenario, "ex1 | ex2 | ex3 | ex4");
    sim->add_option("--n", cfg.n, "training and validation sample size");
    sim->add_option("--sigma", cfg.sigma, "noise standard deviation");
    sim->add_option("--method", cfg.method_text, "comma list of methods");
    sim->add_option("--reps", cfg.reps, "replicates");
    sim->add_option("--seed", cfg.seed, "random seed");
    sim->add_option("--estimator", cfg.estimator_text, "override the ranking estimator");
    sim->add_option("--output", cfg.output, "csv | table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    try {
        std::ostringstream buffer;
        Runner(cfg, buffer).execute();
        out << buffer.str();
        return kExitOk;
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace carscore::cli
