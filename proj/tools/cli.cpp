#include "cli.hpp"

#include "mts/bilevel.hpp"
#include "mts/casestudies.hpp"
#include "mts/errors.hpp"
#include "mts/integrate.hpp"
#include "mts/io.hpp"
#include "mts/parallel.hpp"
#include "mts/registry.hpp"
#include "mts/stability.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace mts::cli {

namespace fs = std::filesystem;

namespace {

struct StackSource {
    std::string builtin;
    std::string json_path;
};

struct LoadedStack {
    SystemStack stack;
    Vector initial_state;
    std::optional<Vector> equilibrium;
    std::string label;
};

LoadedStack load_stack(const StackSource& src) {
    if (src.builtin.empty() == src.json_path.empty())
        throw ConfigError("give exactly one of --stack or --stack-json");
    if (!src.builtin.empty()) {
        auto b = builtin_stack(src.builtin);
        return {std::move(b.stack), std::move(b.initial_state), std::move(b.equilibrium), b.name};
    }
    std::ifstream in(src.json_path);
    if (!in) throw ConfigError("cannot open " + src.json_path);
    io::Json j;
    try {
        in >> j;
    } catch (const io::Json::exception& e) {
        throw ConfigError(src.json_path + ": " + e.what());
    }
    auto stack = io::parse_linear_stack(j);
    const auto n = static_cast<Eigen::Index>(stack.total_dim());
    return {std::move(stack), Vector::Zero(n), std::nullopt, src.json_path};
}

Vector parse_point(const std::string& text, std::size_t n, const char* flag) {
    const auto v = parse_real_list(text);
    if (v.size() != n)
        throw ConfigError(std::string(flag) + " needs " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    return f;
}

void add_stack_options(CLI::App* cmd, StackSource& src) {
    cmd->add_option("--stack", src.builtin, "builtin stack: r2, tracking, linear3, cascade, rlc, bilevel-example");
    cmd->add_option("--stack-json", src.json_path, "linear stack definition (JSON)");
}

Method parse_method(const std::string& m) {
    if (m == "rk4") return Method::RK4;
    if (m == "euler") return Method::ExplicitEuler;
    throw ConfigError("unknown integration method '" + m + "' (rk4 | euler)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-time-scale stack simulation and analysis"};
    app.require_subcommand(1);
    std::string out_dir = ".";
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "integrate a conditioned stack");
    StackSource sim_src;
    std::string sim_scheme = "plain", sim_x0, sim_method = "rk4";
    double sim_dt = 1e-3, sim_t_end = 1.0, sim_threshold = 1e6;
    int sim_every = 1;
    add_stack_options(sim, sim_src);
    sim->add_option("--scheme", sim_scheme)->capture_default_str();
    sim->add_option("--x0", sim_x0, "comma-separated initial state");
    sim->add_option("--dt", sim_dt)->capture_default_str();
    sim->add_option("--t-end", sim_t_end)->capture_default_str();
    sim->add_option("--method", sim_method, "rk4 | euler")->capture_default_str();
    sim->add_option("--divergence-threshold", sim_threshold)->capture_default_str();
    sim->add_option("--record-every", sim_every)->capture_default_str();
    sim->add_option("--out", out_dir);

    // stability
    auto* stab = app.add_subcommand("stability", "local stability at a steady state");
    StackSource stab_src;
    std::string stab_scheme = "plain", stab_point, stab_mode = "analytic";
    add_stack_options(stab, stab_src);
    stab->add_option("--scheme", stab_scheme)->capture_default_str();
    stab->add_option("--point", stab_point, "steady state (default: builtin equilibrium or Newton from 0)");
    stab->add_option("--jacobian", stab_mode, "analytic | fd")->capture_default_str();
    stab->add_option("--out", out_dir);

    // cascade
    auto* casc = app.add_subcommand("cascade", "closed-loop cascade PI matrices");
    CascadeParams cp;
    std::string ff = "state";
    casc->add_option("--a1", cp.a1)->capture_default_str();
    casc->add_option("--b1", cp.b1)->capture_default_str();
    casc->add_option("--a2", cp.a2)->capture_default_str();
    casc->add_option("--b2", cp.b2)->capture_default_str();
    casc->add_option("--kp1", cp.kp1)->capture_default_str();
    casc->add_option("--ki1", cp.ki1)->capture_default_str();
    casc->add_option("--kp2", cp.kp2)->capture_default_str();
    casc->add_option("--ki2", cp.ki2)->capture_default_str();
    casc->add_option("--x1-ref", cp.x1_ref)->capture_default_str();
    casc->add_option("--feed-forward", ff, "state | reference | none")->capture_default_str();
    casc->add_option("--out", out_dir);

    // rlc
    auto* rlc = app.add_subcommand("rlc", "converter black start");
    RlcParams rp;
    BlackStartSettings bs;
    std::string rlc_scheme = "predsens";
    bool sweep = false;
    rlc->add_option("--scheme", rlc_scheme, "plain | predsens | ...")->capture_default_str();
    rlc->add_option("--kpi", rp.kpi)->capture_default_str();
    rlc->add_option("--kii", rp.kii)->capture_default_str();
    rlc->add_option("--dt", bs.dt)->capture_default_str();
    rlc->add_option("--t-end", bs.t_end)->capture_default_str();
    rlc->add_option("--record-every", bs.record_every)->capture_default_str();
    rlc->add_flag("--sweep", sweep, "run gains 50/100, 100/200, 250/500 under plain and predsens");
    rlc->add_option("--out", out_dir);

    // bilevel
    auto* bil = app.add_subcommand("bilevel", "discrete bilevel descent");
    std::string example = "scaled", bil_method = "ps", bil_x0 = "2,2";
    DiscreteSolveOptions dso;
    double bil_eps = 0.5;
    bil->add_option("--example", example, "scaled")->capture_default_str();
    bil->add_option("--method", bil_method, "ps | gda")->capture_default_str();
    bil->add_option("--eps", bil_eps, "time-scale ratio for gda")->capture_default_str();
    bil->add_option("--tau", dso.tau)->capture_default_str();
    bil->add_option("--x0", bil_x0)->capture_default_str();
    bil->add_option("--iters", dso.max_iterations)->capture_default_str();
    bil->add_option("--tol", dso.tol)->capture_default_str();
    bil->add_option("--out", out_dir);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    try {
        if (sim->parsed()) {
            auto ls = load_stack(sim_src);
            const Scheme s = parse_scheme(sim_scheme, ls.stack, ls.equilibrium.value_or(ls.initial_state));
            const Vector x0 = sim_x0.empty() ? ls.initial_state : parse_point(sim_x0, ls.stack.total_dim(), "--x0");
            IntegrationSettings is;
            is.method = parse_method(sim_method);
            is.dt = sim_dt;
            is.t_end = sim_t_end;
            is.divergence_threshold = sim_threshold;
            is.record_every = sim_every;
            const auto traj = integrate_ode(ls.stack, s, x0, is);
            const auto dir = prepare_out(out_dir);
            auto csv = open_out(dir / "trajectory.csv");
            io::write_trajectory_csv(csv, traj);
            auto j = io::trajectory_summary(traj);
            j["stack"] = ls.label;
            j["scheme"] = scheme_name(s);
            auto js = open_out(dir / "metrics.json");
            io::write_json(js, j);
            io::write_json(out, j);
        } else if (stab->parsed()) {
            auto ls = load_stack(stab_src);
            Vector point;
            if (!stab_point.empty())
                point = parse_point(stab_point, ls.stack.total_dim(), "--point");
            else if (ls.equilibrium)
                point = *ls.equilibrium;
            else
                point = steady_state_solve(ls.stack, 0, ls.initial_state).state;
            const Scheme s = parse_scheme(stab_scheme, ls.stack, point);
            StabilityOptions opts;
            if (stab_mode == "fd") {
                opts.mode = JacobianMode::FiniteDifference;
            } else if (stab_mode != "analytic") {
                throw ConfigError("unknown --jacobian '" + stab_mode + "' (analytic | fd)");
            }
            const auto report = classify_local_stability(ls.stack, s, point, opts);
            auto j = io::to_json(report);
            j["stack"] = ls.label;
            auto f = open_out(prepare_out(out_dir) / "stability.json");
            io::write_json(f, j);
            io::write_json(out, j);
        } else if (casc->parsed()) {
            if (ff == "state")
                cp.feed_forward = FeedForward::State;
            else if (ff == "reference")
                cp.feed_forward = FeedForward::Reference;
            else if (ff == "none")
                cp.feed_forward = FeedForward::None;
            else
                throw ConfigError("unknown --feed-forward '" + ff + "' (state | reference | none)");
            const auto m = cascade_matrices(cp);
            auto j = io::to_json(m);
            j["feed_forward"] = to_string(cp.feed_forward);
            j["separated_loops_stable"] = cascade_separated_loops_stable(cp);
            j["equilibrium"] = io::to_json(Matrix(cascade_equilibrium(cp).transpose()))[0];
            auto f = open_out(prepare_out(out_dir) / "cascade.json");
            io::write_json(f, j);
            io::write_json(out, j);
        } else if (rlc->parsed()) {
            const auto dir = prepare_out(out_dir);
            struct Case {
                RlcParams params;
                std::string scheme;
            };
            std::vector<Case> cases;
            if (sweep) {
                for (auto [kpi, kii] : {std::pair{50.0, 100.0}, {100.0, 200.0}, {250.0, 500.0}})
                    for (const char* sc : {"plain", "predsens"}) cases.push_back({RlcParams::table(kpi, kii), sc});
            } else {
                cases.push_back({rp, rlc_scheme});
            }
            const auto probe = rlc_stack(rp);
            std::vector<Scheme> schemes;
            for (const auto& c : cases) schemes.push_back(parse_scheme(c.scheme, probe, rlc_equilibrium(c.params)));
            std::vector<std::size_t> idx(cases.size());
            for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
            const auto results = par::map_points(idx, [&](std::size_t k) {
                return run_black_start(cases[k].params, schemes[k], bs);
            });
            io::Json summary = io::Json::array();
            for (std::size_t k = 0; k < cases.size(); ++k) {
                const auto& c = cases[k];
                const std::string stem = sweep ? "black_start_" + c.scheme + "_" + io::format_number(c.params.kpi) +
                                                     "_" + io::format_number(c.params.kii)
                                               : "black_start";
                auto csv = open_out(dir / (stem + ".csv"));
                io::write_black_start_csv(csv, results[k].trajectory, results[k].metrics);
                auto j = io::to_json(results[k].metrics);
                j["scheme"] = c.scheme;
                j["kpi"] = c.params.kpi;
                j["kii"] = c.params.kii;
                auto js = open_out(dir / (stem + ".json"));
                io::write_json(js, j);
                summary.push_back(std::move(j));
            }
            io::write_json(out, sweep ? summary : summary[0]);
        } else if (bil->parsed()) {
            if (example != "scaled") throw ConfigError("unknown --example '" + example + "' (scaled)");
            const auto p = bilevel_example_problem();
            BilevelMethod method;
            if (bil_method == "ps")
                method = bilevel_method::PredictiveSensitivity{};
            else if (bil_method == "gda")
                method = bilevel_method::EpsGDA{bil_eps};
            else
                throw ConfigError("unknown --method '" + bil_method + "' (ps | gda)");
            const Vector x0 = parse_point(bil_x0, p.n1 + p.n2, "--x0");
            const auto log = solve_discrete(p, method, x0.head(p.n1), x0.tail(p.n2), dso);
            const auto dir = prepare_out(out_dir);
            auto csv = open_out(dir / "iterates.csv");
            io::write_iterate_csv(csv, log);
            auto j = io::iterate_summary(log);
            j["method"] = method_name(method);
            auto js = open_out(dir / "bilevel.json");
            io::write_json(js, j);
            io::write_json(out, j);
        }
    } catch (const InputError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PreconditionError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace mts::cli
