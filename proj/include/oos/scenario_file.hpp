#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>

#include "oos/errors.hpp"
#include "oos/simulation.hpp"

namespace oos {

/// Parses the declarative scenario format:
///
///   [sources]
///   source = normal(0, 9)  0.2
///   source = normal(2, 1)  0.3
///   source = normal(5, 5)  0.5
///
///   [run]
///   loss = squared          # or absolute
///   rule = mean
///   n_grid = 100 200 500
///   reps = 1000
///   seed = 42
///   allocation = strict     # or lenient
///
/// '#' starts a comment; blank lines are ignored. Unknown sections or keys
/// and malformed values are rejected with their line number. loss, rule,
/// seed and allocation are optional (defaults above); sources, n_grid and
/// reps are required.
inline ScenarioConfig parse_scenario_file(std::istream& in) {
    ScenarioConfig config;
    config.loss = LossKind::squared;
    config.rule = RuleKind::mean;
    config.master_seed = 42;

    enum class Section { none, sources, run } section = Section::none;
    std::string line;
    std::size_t line_no = 0;
    bool have_reps = false;

    auto fail = [&](const std::string& what) -> void {
        throw ConfigFormatError("line " + std::to_string(line_no) + ": " + what);
    };
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos)
            text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;

        if (text.front() == '[') {
            if (text.back() != ']') fail("unterminated section header");
            const std::string_view name = trim(text.substr(1, text.size() - 2));
            if (name == "sources")
                section = Section::sources;
            else if (name == "run")
                section = Section::run;
            else
                fail("unknown section '" + std::string(name) + "'");
            continue;
        }

        const auto eq = text.find('=');
        if (eq == std::string_view::npos) fail("expected 'key = value'");
        const std::string_view key = trim(text.substr(0, eq));
        const std::string_view value = trim(text.substr(eq + 1));
        if (value.empty()) fail("empty value for '" + std::string(key) + "'");

        if (section == Section::sources) {
            if (key != "source") fail("unknown key '" + std::string(key) + "' in [sources]");
            // distribution expression followed by the proportion
            const auto close = value.rfind(')');
            if (close == std::string_view::npos) fail("expected 'dist(args) proportion'");
            const std::string_view dist_text = trim(value.substr(0, close + 1));
            const std::string_view prop_text = trim(value.substr(close + 1));
            if (prop_text.empty()) fail("missing proportion after distribution");
            double proportion = 0.0;
            const auto [ptr, ec] =
                std::from_chars(prop_text.data(), prop_text.data() + prop_text.size(), proportion);
            if (ec != std::errc{} || ptr != prop_text.data() + prop_text.size())
                fail("bad proportion '" + std::string(prop_text) + "'");
            try {
                config.sources.push_back({parse_distribution(dist_text), proportion});
            } catch (const InvalidDistributionError& e) {
                fail(e.what());
            }
        } else if (section == Section::run) {
            try {
                if (key == "loss") {
                    config.loss = parse_loss_kind(value);
                } else if (key == "rule") {
                    config.rule = parse_rule_kind(value);
                } else if (key == "n_grid") {
                    std::string_view rest = value;
                    while (!rest.empty()) {
                        const auto space = rest.find_first_of(" \t,");
                        const std::string_view token = rest.substr(0, space);
                        std::size_t n = 0;
                        const auto [ptr, ec] =
                            std::from_chars(token.data(), token.data() + token.size(), n);
                        if (ec != std::errc{} || ptr != token.data() + token.size() || n == 0)
                            fail("bad sample size '" + std::string(token) + "'");
                        config.n_grid.push_back(n);
                        if (space == std::string_view::npos) break;
                        rest = trim(rest.substr(space + 1));
                    }
                } else if (key == "reps") {
                    std::size_t reps = 0;
                    const auto [ptr, ec] =
                        std::from_chars(value.data(), value.data() + value.size(), reps);
                    if (ec != std::errc{} || ptr != value.data() + value.size())
                        fail("bad replicate count '" + std::string(value) + "'");
                    config.reps = reps;
                    have_reps = true;
                } else if (key == "seed") {
                    std::uint64_t seed = 0;
                    const auto [ptr, ec] =
                        std::from_chars(value.data(), value.data() + value.size(), seed);
                    if (ec != std::errc{} || ptr != value.data() + value.size())
                        fail("bad seed '" + std::string(value) + "'");
                    config.master_seed = seed;
                } else if (key == "allocation") {
                    if (value == "strict")
                        config.allocation = AllocationMode::strict_integral;
                    else if (value == "lenient")
                        config.allocation = AllocationMode::largest_remainder;
                    else
                        fail("allocation must be 'strict' or 'lenient'");
                } else {
                    fail("unknown key '" + std::string(key) + "' in [run]");
                }
            } catch (const InvalidConfigError& e) {
                fail(e.what());
            }
        } else {
            fail("key outside any section");
        }
    }

    if (config.sources.empty()) throw ConfigFormatError("missing [sources] section");
    if (config.n_grid.empty()) throw ConfigFormatError("missing n_grid in [run]");
    if (!have_reps) throw ConfigFormatError("missing reps in [run]");
    return config;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open '" + path + "'");
    return parse_scenario_file(in);
}

}  // namespace oos
