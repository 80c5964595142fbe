// Command-line front end: estimation on CSV data, normal-theory closed
// forms, benchmark table reproduction, feasibility checks, the variance
// pathology study, and config-driven Monte Carlo runs.
//
// Exit codes: 0 success, 2 usage or input-format problems, 3 domain
// invariant violations.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oos/oos.hpp"

namespace {

std::string fixed(double x, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
    return std::string(buf);
}

std::string full(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

/// Accepts "0.25" or "1/4"; fractions keep shares like 1/3 exact enough to
/// satisfy the sum-to-one invariant.
double number_or_fraction(const std::string& text) {
    const auto slash = text.find('/');
    auto to_double = [&](const std::string& part) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(part, &used);
        } catch (const std::exception&) {
            throw oos::InputError("bad number '" + text + "'");
        }
        if (used != part.size()) throw oos::InputError("bad number '" + text + "'");
        return value;
    };
    if (slash == std::string::npos) return to_double(text);
    const double num = to_double(text.substr(0, slash));
    const double den = to_double(text.substr(slash + 1));
    if (den == 0.0) throw oos::InputError("zero denominator in '" + text + "'");
    return num / den;
}

std::vector<double> numbers_or_fractions(const std::vector<std::string>& texts) {
    std::vector<double> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(number_or_fraction(t));
    return out;
}

struct EstimateOptions {
    std::string data_path;
    std::string loss = "squared";
    std::string rule = "mean";
    std::size_t bootstrap = 0;
    std::uint64_t seed = 42;
    std::string format = "text";
    int precision = 4;
};

void run_estimate(const EstimateOptions& opt) {
    const auto dataset = oos::read_dataset_csv_file(opt.data_path);
    const auto loss_kind = oos::parse_loss_kind(opt.loss);
    const auto rule_kind = oos::parse_rule_kind(opt.rule);

    oos::OosEstimate estimate = oos::with_loss(loss_kind, [&](auto loss) {
        return oos::with_rule(rule_kind, [&](auto rule) {
            return oos::oos_estimate(dataset, rule, loss);
        });
    });
    std::optional<double> boot_var;
    if (opt.bootstrap > 0) {
        boot_var = oos::with_loss(loss_kind, [&](auto loss) {
            return oos::with_rule(rule_kind, [&](auto rule) {
                return oos::bootstrap_variance(dataset, rule, loss, opt.bootstrap, opt.seed);
            });
        });
    }

    const std::size_t k = dataset.source_count();
    if (opt.format == "csv") {
        std::cout << "metric,test,train,value\n";
        std::cout << "total,,," << full(estimate.total) << '\n';
        for (std::size_t j = 0; j < k; ++j)
            std::cout << "per_source," << dataset.label(j) << ",," << full(estimate.per_source[j])
                      << '\n';
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l)
                if (l != j)
                    std::cout << "pairwise," << dataset.label(j) << ',' << dataset.label(l) << ','
                              << full(estimate.pairwise.at(j, l)) << '\n';
        if (boot_var) std::cout << "bootstrap_variance,,," << full(*boot_var) << '\n';
        return;
    }
    if (opt.format == "json") {
        nlohmann::json out;
        out["total"] = nlohmann::json::parse(full(estimate.total));
        out["labels"] = nlohmann::json::array();
        out["per_source"] = nlohmann::json::array();
        for (std::size_t j = 0; j < k; ++j) {
            out["labels"].push_back(dataset.label(j));
            out["per_source"].push_back(nlohmann::json::parse(full(estimate.per_source[j])));
        }
        out["pairwise"] = nlohmann::json::array();
        for (std::size_t j = 0; j < k; ++j) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t l = 0; l < k; ++l)
                row.push_back(l == j ? nlohmann::json(nullptr)
                                     : nlohmann::json::parse(full(estimate.pairwise.at(j, l))));
            out["pairwise"].push_back(std::move(row));
        }
        if (boot_var) {
            out["bootstrap"] = {{"replicates", opt.bootstrap},
                                {"seed", opt.seed},
                                {"variance", nlohmann::json::parse(full(*boot_var))}};
        }
        std::cout << out.dump(2) << '\n';
        return;
    }

    std::cout << "sources:";
    for (std::size_t j = 0; j < k; ++j)
        std::cout << ' ' << dataset.label(j) << " (n=" << dataset.source_size(j) << ')';
    std::cout << "\nloss: " << oos::to_string(loss_kind) << ", rule: " << oos::to_string(rule_kind)
              << '\n';
    std::cout << "mu_os_hat = " << fixed(estimate.total, opt.precision) << '\n';
    std::cout << "per-source errors:\n";
    for (std::size_t j = 0; j < k; ++j)
        std::cout << "  " << dataset.label(j) << "  " << fixed(estimate.per_source[j], opt.precision)
                  << '\n';
    std::cout << "pairwise errors (row = test source, column = training source):\n";
    for (std::size_t j = 0; j < k; ++j) {
        std::cout << "  " << dataset.label(j);
        for (std::size_t l = 0; l < k; ++l) {
            std::cout << "  ";
            std::cout << (l == j ? std::string("-") : fixed(estimate.pairwise.at(j, l), opt.precision));
        }
        std::cout << '\n';
    }
    if (boot_var)
        std::cout << "bootstrap variance (B=" << opt.bootstrap << ", seed=" << opt.seed
                  << ") = " << fixed(*boot_var, opt.precision) << '\n';
}

struct TheoryOptions {
    std::vector<double> means;
    std::vector<double> vars;
    std::vector<std::string> p;
    std::size_t n = 0;
    std::string loss = "squared";
    bool components = false;
    int precision = 4;
};

void run_theory(const TheoryOptions& opt) {
    const auto shares = oos::Proportions::from_probabilities(numbers_or_fractions(opt.p));
    const oos::NormalSourceParams params(opt.means, opt.vars, shares, opt.n);
    const auto loss_kind = oos::parse_loss_kind(opt.loss);

    const double mu_os = loss_kind == oos::LossKind::squared ? oos::normal_oos_squared(params)
                                                             : oos::normal_oos_absolute(params);
    std::cout << "mu_os (" << oos::to_string(loss_kind) << ") = " << fixed(mu_os, opt.precision)
              << '\n';

    if (!opt.components) return;
    if (loss_kind != oos::LossKind::squared)
        throw oos::InvalidConfigError(
            "closed-form variance components exist for squared loss only; "
            "use the bootstrap for other losses");

    const auto c = oos::normal_components_squared(params);
    const std::size_t k = params.source_count();
    std::cout << "second-moment components (1-based indices):\n";
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l)
            if (l != j)
                std::cout << "  V[" << j + 1 << ';' << l + 1 << "] = " << fixed(c.v(j, l), opt.precision)
                          << "   C_same[" << j + 1 << ';' << l + 1
                          << "] = " << fixed(c.c_same(j, l), opt.precision) << '\n';
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t lp = 0; lp < k; ++lp)
                if (j != l && j != lp && l != lp)
                    std::cout << "  C_rule[" << j + 1 << ';' << l + 1 << ',' << lp + 1
                              << "] = " << fixed(c.c_rule(j, l, lp), opt.precision) << '\n';
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t jp = 0; jp < k; ++jp) {
            if (jp == j) continue;
            for (std::size_t l = 0; l < k; ++l)
                if (l != j && l != jp)
                    std::cout << "  C_cross[" << j + 1 << ',' << jp + 1 << ';' << l + 1
                              << "] = " << fixed(c.c_cross(j, jp, l), opt.precision)
                              << "   C_entangled[" << j + 1 << ',' << jp + 1 << ';' << l + 1
                              << "] = " << fixed(c.c_entangled(j, jp, l), opt.precision) << '\n';
            std::cout << "  C_mutual[" << j + 1 << ',' << jp + 1
                      << "] = " << fixed(c.c_mutual(j, jp), opt.precision) << '\n';
        }
    std::cout << "variance of the estimator = "
              << fixed(oos::theoretical_variance(c, shares, opt.n), opt.precision) << '\n';
}

struct ReproduceOptions {
    int table = 0;
    std::size_t reps = 10000;
    std::uint64_t seed = 42;
    std::string format = "text";
    std::string out_path;
    int precision = 4;
};

void write_report(const oos::SimulationReport& report, const std::string& format,
                  const std::string& out_path, int precision) {
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw oos::FileError("cannot write '" + out_path + "'");
        out << oos::report_csv(report);
    }
    if (format == "csv")
        std::cout << oos::report_csv(report);
    else if (format == "json")
        std::cout << oos::report_json(report).dump(2) << '\n';
    else
        std::cout << oos::format_report_table(report, precision);
}

void run_reproduce(const ReproduceOptions& opt) {
    const auto report = oos::reproduce_table(opt.table, opt.reps, opt.seed);
    write_report(report, opt.format, opt.out_path, opt.precision);
}

struct FeasibilityOptions {
    std::string t_sigma = "0";
    std::string t_c = "0";
    std::string t_mu = "0";
    bool var_xbar = false;
    std::size_t n = 0;
    int precision = 4;
};

void run_feasibility(const FeasibilityOptions& opt) {
    oos::MomentTarget target;
    if (opt.var_xbar) {
        if (opt.n < 2)
            throw oos::InvalidConfigError("--var-xbar needs --n >= 2");
        const double n = static_cast<double>(opt.n);
        target = {1.0 / n, (n - 1.0) / n, 0.0};
    } else {
        target = {number_or_fraction(opt.t_sigma), number_or_fraction(opt.t_c),
                  number_or_fraction(opt.t_mu)};
    }
    std::cout << "target: " << fixed(target.t_sigma, opt.precision) << "*sigma^2 + "
              << fixed(target.t_c, opt.precision) << "*C + " << fixed(target.t_mu, opt.precision)
              << "*mu^2\n";
    const auto result = oos::moment_feasibility(target);
    if (result.feasible) {
        std::cout << "feasible: a = " << fixed(result.coefficients->first, opt.precision)
                  << ", b = " << fixed(result.coefficients->second, opt.precision)
                  << "  (weights on sum X_j^2 and sum X_j X_j')\n";
    } else {
        std::cout << "infeasible: no unbiased quadratic estimator exists "
                     "(requires t_mu = t_sigma + t_c)\n";
    }
}

struct PathologyOptions {
    std::vector<std::size_t> n_grid = {10, 40, 160};
    std::size_t reps = 10000;
    double sigma2 = 2.0;
    double c = 1.0;
    double mu = 0.0;
    std::uint64_t seed = 42;
    int precision = 4;
};

void run_pathology(const PathologyOptions& opt) {
    const auto rows =
        oos::variance_growth_study(opt.n_grid, opt.reps, opt.sigma2, opt.c, opt.mu, opt.seed);
    if (opt.c == 0.0)
        std::cout << "iid normal control (c = 0): var(s^2) should decay like 2*sigma2^2/(n-1)\n";
    else
        std::cout << "exchangeable sequence with common covariance c = " << opt.c
                  << ": var(s^2) grows with n\n";
    std::cout << "n        mean(s^2)      var(s^2)\n";
    for (const auto& row : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-8zu %-14s %s\n", row.n,
                      fixed(row.mean_s2, opt.precision).c_str(),
                      fixed(row.var_s2, opt.precision).c_str());
        std::cout << buf;
    }
}

struct SimulateOptions {
    std::string config_path;
    std::string format = "text";
    std::string out_path;
    int precision = 4;
};

void run_simulate(const SimulateOptions& opt) {
    const auto config = oos::parse_scenario_file(opt.config_path);
    const auto report = oos::run_monte_carlo(config);
    write_report(report, opt.format, opt.out_path, opt.precision);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"out-of-source error estimation for multi-source data"};
    app.require_subcommand(1);

    EstimateOptions est;
    auto* cmd_estimate = app.add_subcommand("estimate", "estimate the out-of-source error from a CSV file");
    cmd_estimate->add_option("--data", est.data_path, "CSV file with header 'source,value'")->required();
    cmd_estimate->add_option("--loss", est.loss)->check(CLI::IsMember({"squared", "absolute"}));
    cmd_estimate->add_option("--rule", est.rule)->check(CLI::IsMember({"mean"}));
    cmd_estimate->add_option("--bootstrap", est.bootstrap, "bootstrap replicates (0 = off)");
    cmd_estimate->add_option("--seed", est.seed);
    cmd_estimate->add_option("--format", est.format)->check(CLI::IsMember({"text", "csv", "json"}));
    cmd_estimate->add_option("--precision", est.precision)->check(CLI::Range(0, 17));
    cmd_estimate->callback([&] { run_estimate(est); });

    TheoryOptions theory;
    auto* cmd_theory = app.add_subcommand("theory", "closed-form error for normal sources");
    cmd_theory->add_option("--means", theory.means, "per-source means")->required()->expected(-1);
    cmd_theory->add_option("--vars", theory.vars, "per-source variances")->required()->expected(-1);
    cmd_theory->add_option("--p", theory.p, "per-source shares (decimals or fractions like 1/3)")
        ->required()
        ->expected(-1);
    cmd_theory->add_option("--n", theory.n, "total sample size")->required();
    cmd_theory->add_option("--loss", theory.loss)->check(CLI::IsMember({"squared", "absolute"}));
    cmd_theory->add_flag("--components", theory.components,
                         "also print the second-moment components and the estimator variance");
    cmd_theory->add_option("--precision", theory.precision)->check(CLI::Range(0, 17));
    cmd_theory->callback([&] { run_theory(theory); });

    ReproduceOptions rep;
    auto* cmd_reproduce = app.add_subcommand("reproduce", "rerun a benchmark table");
    cmd_reproduce->add_option("--table", rep.table, "table id")->required()->check(CLI::Range(1, 4));
    cmd_reproduce->add_option("--reps", rep.reps, "Monte Carlo replicates");
    cmd_reproduce->add_option("--seed", rep.seed);
    cmd_reproduce->add_option("--format", rep.format)->check(CLI::IsMember({"text", "csv", "json"}));
    cmd_reproduce->add_option("--out", rep.out_path, "also write the CSV report here");
    cmd_reproduce->add_option("--precision", rep.precision)->check(CLI::Range(0, 17));
    cmd_reproduce->callback([&] { run_reproduce(rep); });

    FeasibilityOptions feas;
    auto* cmd_feasibility =
        app.add_subcommand("feasibility", "can a quadratic estimator hit a second-moment target?");
    cmd_feasibility->add_option("--t-sigma", feas.t_sigma, "coefficient of sigma^2");
    cmd_feasibility->add_option("--t-c", feas.t_c, "coefficient of the common covariance C");
    cmd_feasibility->add_option("--t-mu", feas.t_mu, "coefficient of mu^2");
    cmd_feasibility->add_flag("--var-xbar", feas.var_xbar,
                              "use the variance-of-the-mean target (1/n, (n-1)/n, 0)");
    cmd_feasibility->add_option("--n", feas.n, "sample size for --var-xbar");
    cmd_feasibility->add_option("--precision", feas.precision)->check(CLI::Range(0, 17));
    cmd_feasibility->callback([&] { run_feasibility(feas); });

    PathologyOptions path;
    auto* cmd_pathology =
        app.add_subcommand("pathology", "growth of var(s^2) on exchangeable sequences");
    cmd_pathology->add_option("--n-grid", path.n_grid)->expected(-1);
    cmd_pathology->add_option("--reps", path.reps);
    cmd_pathology->add_option("--sigma2", path.sigma2);
    cmd_pathology->add_option("--c", path.c, "common covariance; 0 runs the iid normal control");
    cmd_pathology->add_option("--mu", path.mu);
    cmd_pathology->add_option("--seed", path.seed);
    cmd_pathology->add_option("--precision", path.precision)->check(CLI::Range(0, 17));
    cmd_pathology->callback([&] { run_pathology(path); });

    SimulateOptions sim;
    auto* cmd_simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario from a config file");
    cmd_simulate->add_option("--config", sim.config_path, "scenario config file")->required();
    cmd_simulate->add_option("--format", sim.format)->check(CLI::IsMember({"text", "csv", "json"}));
    cmd_simulate->add_option("--out", sim.out_path, "also write the CSV report here");
    cmd_simulate->add_option("--precision", sim.precision)->check(CLI::Range(0, 17));
    cmd_simulate->callback([&] { run_simulate(sim); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    } catch (const oos::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const oos::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
