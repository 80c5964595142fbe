#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oos/simulation.hpp"

namespace oos {

namespace detail {

/// Shortest round-trippable decimal form, used by both CSV and JSON writers
/// so the two encodings carry identical numbers.
inline std::string full_precision(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

inline std::string fixed(double x, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
    return std::string(buf);
}

}  // namespace detail

/// CSV serialization with columns table,loss,n,reps,mean,var,se,mu_os,bias2,mse.
/// The table and closed-form fields are empty when absent.
inline std::string report_csv(const SimulationReport& report) {
    std::ostringstream out;
    out << "table,loss,n,reps,mean,var,se,mu_os,bias2,mse\n";
    for (const auto& row : report.rows) {
        if (row.table) out << *row.table;
        out << ',' << to_string(row.loss) << ',' << row.n << ',' << row.reps << ','
            << detail::full_precision(row.mean) << ',' << detail::full_precision(row.variance)
            << ',' << detail::full_precision(row.se) << ',';
        if (row.mu_os) out << detail::full_precision(*row.mu_os);
        out << ',';
        if (row.bias2) out << detail::full_precision(*row.bias2);
        out << ',';
        if (row.mse) out << detail::full_precision(*row.mse);
        out << '\n';
    }
    return out.str();
}

/// JSON mirror of the CSV rows. Numbers are serialized from the same
/// full-precision decimal strings the CSV uses.
inline nlohmann::json report_json(const SimulationReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        if (row.table) r["table"] = *row.table;
        r["loss"] = std::string(to_string(row.loss));
        r["n"] = row.n;
        r["reps"] = row.reps;
        r["mean"] = nlohmann::json::parse(detail::full_precision(row.mean));
        r["var"] = nlohmann::json::parse(detail::full_precision(row.variance));
        r["se"] = nlohmann::json::parse(detail::full_precision(row.se));
        if (row.mu_os) r["mu_os"] = nlohmann::json::parse(detail::full_precision(*row.mu_os));
        if (row.bias2) r["bias2"] = nlohmann::json::parse(detail::full_precision(*row.bias2));
        if (row.mse) r["mse"] = nlohmann::json::parse(detail::full_precision(*row.mse));
        rows.push_back(std::move(r));
    }
    nlohmann::json out;
    out["rows"] = std::move(rows);
    out["warnings"] = report.warnings;
    return out;
}

/// Human-readable table, one block per loss, n across the columns and the
/// statistics down the rows (closed-form value, mean, bias^2, var, mse).
inline std::string format_report_table(const SimulationReport& report, int precision = 4) {
    std::ostringstream out;
    const LossKind losses[] = {LossKind::squared, LossKind::absolute};
    const int width = precision + 9;
    for (LossKind loss : losses) {
        std::vector<const SimulationRow*> rows;
        for (const auto& row : report.rows)
            if (row.loss == loss) rows.push_back(&row);
        if (rows.empty()) continue;

        out << "loss: " << to_string(loss) << '\n';
        auto line = [&](const std::string& name, auto getter) {
            bool any = false;
            for (const auto* row : rows)
                if (getter(*row)) any = true;
            if (!any) return;
            out << "  " << name;
            for (std::size_t i = name.size(); i < 14; ++i) out << ' ';
            for (const auto* row : rows) {
                const auto value = getter(*row);
                std::string cell = value ? detail::fixed(*value, precision) : std::string("-");
                for (std::size_t i = cell.size(); i < static_cast<std::size_t>(width); ++i)
                    out << ' ';
                out << cell;
            }
            out << '\n';
        };

        out << "  n             ";
        for (const auto* row : rows) {
            std::string cell = std::to_string(row->n);
            for (std::size_t i = cell.size(); i < static_cast<std::size_t>(width); ++i) out << ' ';
            out << cell;
        }
        out << '\n';
        using Opt = std::optional<double>;
        line("mu_os", [](const SimulationRow& r) -> Opt { return r.mu_os; });
        line("mean", [](const SimulationRow& r) -> Opt { return r.mean; });
        line("bias^2", [](const SimulationRow& r) -> Opt { return r.bias2; });
        line("var", [](const SimulationRow& r) -> Opt { return r.variance; });
        line("mse", [](const SimulationRow& r) -> Opt { return r.mse; });
        out << "  reps          ";
        for (const auto* row : rows) {
            std::string cell = std::to_string(row->reps);
            for (std::size_t i = cell.size(); i < static_cast<std::size_t>(width); ++i) out << ' ';
            out << cell;
        }
        out << '\n';
    }
    for (const auto& warning : report.warnings) out << "warning: " << warning << '\n';
    return out.str();
}

}  // namespace oos
