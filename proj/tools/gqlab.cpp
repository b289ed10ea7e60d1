// gqlab: command-line workbench around the gchoquet library.
//
// Subcommands: solve, capacity, choquet, compare, suite, check.
// Exit codes: 0 on success / PASS verdicts, 1 on FAIL verdicts, 2 on
// configuration or runtime errors.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gchoquet/gchoquet.hpp>

namespace {

using namespace gchoquet;

struct CommonArgs {
    std::string generator;
    std::string claim;
    int dimension = 1;
    double horizon = 1.0;
    std::string steps = "200";
    std::string out;
    std::string format = "csv";
};

std::vector<int> parse_steps(const std::string& s) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? s.size() - pos : comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw std::invalid_argument("--steps: bad entry '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("--steps: empty");
    return out;
}

int single_steps(const std::string& s) {
    const auto v = parse_steps(s);
    if (v.size() != 1) throw std::invalid_argument("--steps: this subcommand takes a single value");
    return v[0];
}

// One BSDE solve per distinct claim value; keep an eye on the total.
void warn_capacity_cost(int distinct_values, int steps, int dimension) {
    const double per_solve = dimension == 1 ? 0.5 * static_cast<double>(steps) * steps
                                            : static_cast<double>(steps) * steps * steps / 3.0;
    const double total = distinct_values * per_solve;
    constexpr double kBudget = 2e8;
    if (total > kBudget)
        std::cerr << "warning: capacity curve needs " << distinct_values
                  << " solves at N=" << steps << " (~" << total
                  << " node updates); consider a coarser ladder\n";
}

void maybe_write(const SuiteReport& report, const CommonArgs& args) {
    const auto fmt = report_format_from_string(args.format);
    if (args.out.empty())
        emit_report(report, std::cout, fmt);
    else
        emit_report(report, args.out, fmt);
}

int cmd_solve(const CommonArgs& args) {
    const int n = single_steps(args.steps);
    const auto parsed = parse_generator(args.generator, args.horizon);
    const auto model = build_lattice(args.dimension, args.horizon, n);
    const auto xi = claim_from_spec(args.claim);
    const auto sol = solve_bsde(model, parsed.generator, xi);
    std::printf("e_g      = %.17g\n", sol.g_expectation());
    std::printf("z(0)     = %.17g", sol.z(0, 0, 0));
    if (args.dimension == 2) std::printf(", %.17g", sol.z(0, 0, 1));
    std::printf("\n");
    return 0;
}

int cmd_capacity(const CommonArgs& args) {
    const int n = single_steps(args.steps);
    const auto parsed = parse_generator(args.generator, args.horizon);
    const auto model = build_lattice(args.dimension, args.horizon, n);
    const auto xi = claim_from_spec(args.claim);
    const auto values = terminal_values(model, xi);
    warn_capacity_cost(static_cast<int>(detail::cluster_values(values, 1e-12).first.size()), n,
                       args.dimension);
    const auto curve = capacity_curve(model, parsed.generator, xi);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!args.out.empty()) {
        file.open(args.out);
        if (!file) throw std::runtime_error("cannot open '" + args.out + "' for writing");
        os = &file;
    }
    if (args.format == "json") {
        nlohmann::json j;
        j["generator"] = curve.generator_label;
        j["claim"] = curve.claim_label;
        j["values"] = curve.values;
        j["capacities"] = curve.capacities;
        *os << j.dump(2) << '\n';
    } else {
        *os << "value,capacity\n";
        for (std::size_t k = 0; k < curve.size(); ++k)
            *os << detail::format_17g(curve.values[k]) << ','
                << detail::format_17g(curve.capacities[k]) << '\n';
    }
    return 0;
}

int cmd_choquet(const CommonArgs& args) {
    const int n = single_steps(args.steps);
    const auto parsed = parse_generator(args.generator, args.horizon);
    const auto model = build_lattice(args.dimension, args.horizon, n);
    const auto xi = claim_from_spec(args.claim);
    warn_capacity_cost(
        static_cast<int>(detail::cluster_values(terminal_values(model, xi), 1e-12).first.size()),
        n, args.dimension);
    const auto r = choquet_expectation(model, parsed.generator, xi);
    std::printf("c_g      = %.17g\n", r.value);
    for (std::size_t k = 0; k < r.layer_terms.size(); ++k)
        std::printf("layer %-3zu v=%.17g V=%.17g term=%.17g\n", k, r.curve.values[k],
                    r.curve.capacities[k], r.layer_terms[k]);
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const int n = single_steps(args.steps);
    const auto parsed = parse_generator(args.generator, args.horizon);
    const auto model = build_lattice(args.dimension, args.horizon, n);
    const auto xi = claim_from_spec(args.claim);
    const double e = g_expectation(model, parsed.generator, xi);
    const double c = choquet_expectation(model, parsed.generator, xi).value;
    std::printf("e_g = %.17g\nc_g = %.17g\ngap = %.17g\n", e, c, e - c);
    return 0;
}

int cmd_suite(const std::string& kind, const std::string& config_path, bool print_defaults,
              CommonArgs& args, bool have_g, bool have_claim, bool have_dim, bool have_T,
              bool have_steps, bool have_format) {
    if (print_defaults) {
        std::cout << to_json(default_config(kind)).dump(2) << '\n';
        return 0;
    }
    SuiteConfig config = config_path.empty() ? default_config(kind) : load_config(config_path);
    config.suite = kind;
    if (have_g) config.generator = args.generator;
    if (have_claim) config.claims = {args.claim};
    if (have_dim) config.dimension = args.dimension;
    if (have_T) config.horizon = args.horizon;
    if (have_steps) config.ladder = parse_steps(args.steps);
    if (!args.out.empty()) config.out_path = args.out;
    if (have_format || config.format.empty()) config.format = args.format;

    const SuiteReport report = run_suite(config);
    const auto fmt = report_format_from_string(config.format);
    if (!config.out_path.empty()) {
        emit_report(report, config.out_path, fmt);
        std::cerr << "wrote " << report.rows.size() << " rows to " << config.out_path << '\n';
    } else {
        emit_report(report, std::cout, fmt);
    }
    std::cerr << (report.all_pass ? "PASS" : "FAIL") << '\n';
    return report.all_pass ? 0 : 1;
}

int cmd_check_generator(const std::string& spec, int dimension, double horizon) {
    const auto parsed = parse_generator(spec, horizon);
    const Generator& g = parsed.generator;
    const auto grid = default_probe_grid(g.dimension(), horizon);
    const auto hyp = check_hypotheses(g, grid);
    const double hom = probe_positive_homogeneity(g, grid);
    const auto add = probe_additivity(g, grid);
    (void)dimension;

    std::printf("generator            : %s (dimension %d, declared K=%.17g)\n", g.label().c_str(),
                g.dimension(), g.lipschitz());
    std::printf("h3 max violation     : %.17g\n", hyp.h3_max_violation);
    std::printf("lipschitz estimate   : %.17g (%s)\n", hyp.lipschitz_estimate,
                hyp.ok() ? "within declared K" : "EXCEEDS declared K");
    std::printf("homogeneity deviation: %.17g\n", hom);
    std::printf("additivity deviation : %.17g\n", add.max_deviation);
    for (const auto& [t, h] : add.h) std::printf("h(t=%-8.6g)         : %.17g\n", t, h);
    return hyp.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lattice workbench for nonlinear (BSDE-driven) and Choquet expectations"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string config_path;
    bool print_defaults = false;

    auto add_common = [&](CLI::App* cmd, bool need_claim) {
        cmd->add_option("--g", args.generator, "generator spec, e.g. linear:0.3 or abs:0.5");
        auto* claim = cmd->add_option("--claim", args.claim, "claim spec, e.g. ind(w1>=-1)");
        if (need_claim) claim->required();
        cmd->add_option("--dim", args.dimension, "model dimension (1 or 2)");
        cmd->add_option("--T", args.horizon, "time horizon");
        cmd->add_option("--steps", args.steps, "step count, or comma ladder for suites");
        cmd->add_option("--out", args.out, "output path (default: stdout)");
        cmd->add_option("--format", args.format, "csv or json");
    };

    auto* solve = app.add_subcommand("solve", "solve one terminal claim");
    add_common(solve, true);
    solve->get_option("--g")->required();

    auto* capacity = app.add_subcommand("capacity", "dump the capacity curve of a claim");
    add_common(capacity, true);
    capacity->get_option("--g")->required();

    auto* choquet = app.add_subcommand("choquet", "Choquet expectation with layer decomposition");
    add_common(choquet, true);
    choquet->get_option("--g")->required();

    auto* compare = app.add_subcommand("compare", "nonlinear expectation vs Choquet expectation");
    add_common(compare, true);
    compare->get_option("--g")->required();

    auto* suite = app.add_subcommand("suite", "run a full experiment suite");
    std::string suite_kind;
    suite->add_option("kind", suite_kind, "equivalence | divergence | rotation")->required();
    suite->add_option("--config", config_path, "JSON config path");
    suite->add_flag("--print-defaults", print_defaults, "print the default config and exit");
    add_common(suite, false);

    auto* check = app.add_subcommand("check", "hypothesis and structure probes");
    std::string check_what;
    check->add_option("what", check_what, "what to check (generator)")->required();
    check->add_option("--g", args.generator, "generator spec")->required();
    check->add_option("--dim", args.dimension, "dimension hint");
    check->add_option("--T", args.horizon, "time horizon");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(args);
        if (capacity->parsed()) return cmd_capacity(args);
        if (choquet->parsed()) return cmd_choquet(args);
        if (compare->parsed()) return cmd_compare(args);
        if (suite->parsed())
            return cmd_suite(suite_kind, config_path, print_defaults, args,
                             suite->get_option("--g")->count() > 0,
                             suite->get_option("--claim")->count() > 0,
                             suite->get_option("--dim")->count() > 0,
                             suite->get_option("--T")->count() > 0,
                             suite->get_option("--steps")->count() > 0,
                             suite->get_option("--format")->count() > 0);
        if (check->parsed()) {
            if (check_what != "generator")
                throw std::invalid_argument("check: only 'generator' is supported");
            return cmd_check_generator(args.generator, args.dimension, args.horizon);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
