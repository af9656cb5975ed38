// macrospin: command-line front end for the simulator and its diagnostics
#include <macrospin/analysis.hpp>
#include <macrospin/classical.hpp>
#include <macrospin/dicke.hpp>
#include <macrospin/feigenbaum.hpp>
#include <macrospin/lyapunov.hpp>
#include <macrospin/spectrum.hpp>
#include <macrospin/symmetry.hpp>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace macrospin;

namespace {

// section -> key -> raw value; sections are params, integrator, task, output
using Sections = std::map<std::string, ConfigSection>;

struct Resolved {
    std::string command;
    Sections s;
    unsigned threads{0};

    const ConfigSection& task() const { return s.at("task"); }
    std::string str(const std::string& key) const { return task().at(key); }
    double num(const std::string& key) const { return parse_double(key, str(key)); }
    int integer(const std::string& key) const { return parse_int(key, str(key)); }
    bool flag(const std::string& key) const {
        const auto v = str(key);
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw ValidationError("key '" + key + "': expected a boolean, got '" + v + "'");
    }

    ModelParams params() const { return params_from_section(s.at("params")); }
    IntegratorSpec integrator() const {
        IntegratorSpec spec;
        for (const auto& [k, v] : s.at("integrator")) {
            if (k == "order") spec.order = parse_int(k, v);
            else if (k == "dt") spec.dt = parse_double(k, v);
            else throw ValidationError("unknown integrator key '" + k + "'");
        }
        steps_per_period(spec);
        return spec;
    }

    // One comment line with every result-affecting setting (threads and paths excluded)
    std::string comment() const {
        std::string out = "cmd=" + command;
        for (const char* sec : {"params", "integrator", "task"}) {
            for (const auto& [k, v] : s.at(sec)) {
                if (v.empty()) continue;
                out += ' ';
                out += sec;
                out += '.' + k + '=' + v;
            }
        }
        return out;
    }
};

std::vector<std::string> split(const std::string& text, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

std::vector<double> number_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& t : split(text)) out.push_back(parse_double(key, t));
    return out;
}

std::pair<double, double> range(const Resolved& r, const std::string& key) {
    const auto v = number_list(key, r.str(key));
    if (v.size() != 2 || !(v[0] <= v[1])) throw ValidationError("key '" + key + "': expected 'lo,hi' with lo <= hi");
    return {v[0], v[1]};
}

SphericalAngle parse_init(const std::string& text) {
    const double h = std::numbers::pi / 2;
    if (text == "x") return {h, 0.0};
    if (text == "-x") return {h, std::numbers::pi};
    if (text == "y") return {h, h};
    if (text == "-y") return {h, 3 * h};
    if (text == "z") return {0.0, 0.0};
    if (text == "-z") return {std::numbers::pi, 0.0};
    const auto v = number_list("init", text);
    if (v.size() != 2) throw ValidationError("init must be x|y|z|-x|-y|-z or 'theta,phi', got '" + text + "'");
    SphericalAngle a{v[0], v[1]};
    validate(a);
    return a;
}

// Output stream chosen by output.path ("-" is stdout)
struct Sink {
    std::unique_ptr<std::ofstream> file;
    std::ostream* os{&std::cout};

    explicit Sink(const std::string& path) {
        if (path.empty() || path == "-") return;
        file = std::make_unique<std::ofstream>(path);
        if (!*file) throw ValidationError("cannot open output file '" + path + "'");
        os = file.get();
    }
    std::ostream& operator*() { return *os; }
    std::ostream* operator->() { return os; }
};

void progress(const std::string& msg) { std::cerr << "macrospin: " << msg << '\n'; }

// ----------------------------------------------------------------------------------------------
// subcommands

int run_classical(const Resolved& r) {
    const auto p = r.params();
    SamplingPolicy pol{r.flag("strobe"), r.integer("stride"), r.num("record_from")};
    const auto tr = integrate(angle_to_vector(parse_init(r.str("init"))), p, r.integrator(), r.num("t_end"), pol);
    Sink out(r.s.at("output").at("path"));
    write_trajectory_csv(*out, tr, r.comment());
    if (!tr.ok()) {
        std::cerr << "error: " << tr.failure->message << " at t=" << tr.failure->time << " (partial trajectory written)\n";
        return 2;
    }
    return 0;
}

int run_quantum(const Resolved& r) {
    const auto p = r.params();
    const auto spec = r.integrator();
    QuantumSampling smp{r.num("interval"), {}, r.flag("full_matrix")};
    if (!r.str("snapshots").empty()) smp.snapshot_times = number_list("snapshots", r.str("snapshots"));
    const std::string prefix = r.str("snapshot_prefix");
    if (!smp.snapshot_times.empty() && prefix.empty())
        throw ValidationError("snapshots requested but snapshot_prefix is empty");
    progress("quantum N=" + std::to_string(p.n_spins) + " t_end=" + r.str("t_end"));
    const auto run = evolve_quantum(initial_product_state(p.n_spins, parse_init(r.str("init"))), p, spec, r.num("t_end"), smp);
    Sink out(r.s.at("output").at("path"));
    write_observables_csv(*out, run, r.comment());
    for (const auto& snap : run.snapshots) {
        Sink f(prefix + "_t" + format_double(snap.time) + ".csv");
        write_snapshot_csv(*f, snap, r.comment());
        if (snap.min_eigenvalue < -1e-8)
            std::cerr << "warning: snapshot t=" << snap.time << " has eigenvalue " << snap.min_eigenvalue << '\n';
    }
    progress("dt_used=" + format_double(run.dt_used) + (run.dt_halved ? " (halved)" : "") +
             " max_trace_err=" + format_double(run.max_trace_err) + " min_purity=" + format_double(run.min_purity));
    return 0;
}

int run_compare(const Resolved& r) {
    std::vector<int> ns;
    for (double v : number_list("n_list", r.str("n_list"))) {
        if (v != std::floor(v) || v < 1) throw ValidationError("n_list entries must be positive integers");
        ns.push_back(static_cast<int>(v));
    }
    progress("compare over " + std::to_string(ns.size()) + " system sizes");
    const auto es = quantum_classical_error(r.params(), parse_init(r.str("init")), ns, r.num("t_end"), r.integrator(),
                                            r.num("interval"), r.threads);
    Sink out(r.s.at("output").at("path"));
    *out << "# " << r.comment() << '\n' << "n,t,error\n";
    out->precision(12);
    for (const auto& e : es)
        for (std::size_t i = 0; i < e.times.size(); ++i) *out << e.n_spins << ',' << e.times[i] << ',' << e.error[i] << '\n';
    return 0;
}

LyapunovOptions lyapunov_options(const Resolved& r) {
    return {r.num("t_total"), r.num("renorm"), r.num("transient")};
}

int run_mle(const Resolved& r) {
    const auto res = lyapunov_spectrum(angle_to_vector(parse_init(r.str("init"))), r.params(), r.integrator(),
                                       lyapunov_options(r));
    Sink out(r.s.at("output").at("path"));
    *out << "# " << r.comment() << '\n' << "lambda_max,lambda_2,lambda_3,trace_average,classification\n";
    out->precision(8);
    *out << res.exponents[0] << ',' << res.exponents[1] << ',' << res.exponents[2] << ',' << res.trace_average << ','
         << to_string(classify_mle(res.max())) << '\n';
    if (!r.str("series").empty()) {
        Sink f(r.str("series"));
        *f << "# " << r.comment() << '\n' << "t,lambda_max\n";
        f->precision(10);
        const double ren = res.renorm_interval, t0 = r.num("transient");
        for (std::size_t i = 0; i < res.converged_series.size(); ++i)
            *f << std::min(t0 + ren * static_cast<double>(i + 1), res.t_total) << ',' << res.converged_series[i] << '\n';
    }
    return 0;
}

int run_mle_map(const Resolved& r) {
    const auto [g0, g1] = range(r, "gamma_range");
    const auto [k0, k1] = range(r, "kappa_range");
    const auto gs = linspace(g0, g1, r.integer("gamma_n"));
    const auto ks = linspace(k0, k1, r.integer("kappa_n"));
    const std::string fmt = r.str("format");
    if (fmt != "csv" && fmt != "grid") throw ValidationError("format must be csv or grid");
    progress("mle-map " + std::to_string(gs.size() * ks.size()) + " cells");
    const auto d = mle_phase_diagram(gs, ks, r.params(), angle_to_vector(parse_init(r.str("init"))), r.integrator(),
                                     lyapunov_options(r), r.threads);
    for (const auto& msg : d.diagnostics) std::cerr << "warning: cell failed: " << msg << '\n';
    Sink out(r.s.at("output").at("path"));
    if (fmt == "csv") write_phase_diagram_csv(*out, d, r.comment());
    else write_phase_diagram_grid(*out, d, r.comment());
    return 0;
}

int run_bifurcation(const Resolved& r) {
    std::vector<double> values;
    if (!r.str("values").empty()) {
        values = number_list("values", r.str("values"));
    } else {
        const auto [lo, hi] = range(r, "range");
        values = linspace(lo, hi, r.integer("count"));
    }
    InitialPolicy pol;
    const std::string kind = r.str("policy");
    if (kind == "global") pol.kind = InitialPolicy::Kind::global;
    else if (kind != "fixed") throw ValidationError("policy must be fixed or global");
    pol.angle = parse_init(r.str("init"));
    pol.global_count = r.integer("global_count");
    progress("bifurcation over " + std::to_string(values.size()) + " values, " + pol.describe());
    const auto scan = stroboscopic_scan(r.str("control"), values, r.params(), pol, r.integrator(),
                                        {r.num("transient"), r.integer("samples")}, r.threads);
    for (const auto& msg : scan.failures) std::cerr << "warning: run failed: " << msg << '\n';
    Sink out(r.s.at("output").at("path"));
    write_bifurcation_csv(*out, scan, r.comment());
    return 0;
}

int run_basin(const Resolved& r) {
    BasinOptions opt;
    opt.seeds = r.integer("seeds");
    opt.seed_periods = r.num("seed_periods");
    opt.match_tolerance = r.num("match_tolerance");
    opt.max_periods = r.integer("max_periods");
    std::tie(opt.theta_min, opt.theta_max) = range(r, "theta_range");
    std::tie(opt.phi_min, opt.phi_max) = range(r, "phi_range");
    progress("basin " + r.str("theta_n") + " x " + r.str("phi_n"));
    const auto map = basin_map(r.params(), r.integer("theta_n"), r.integer("phi_n"), r.integrator(), opt, r.threads,
                               !r.flag("allow_coarse"));
    progress(std::to_string(map.attractors.size()) + " attractors, unresolved " +
             format_double(100.0 * map.unresolved_fraction()) + "%");
    Sink out(r.s.at("output").at("path"));
    write_basin_csv(*out, map, r.comment());
    return 0;
}

int run_spectrum(const Resolved& r) {
    const std::string ax = r.str("axis");
    const int axis = ax == "x" ? 0 : ax == "y" ? 1 : ax == "z" ? 2 : -1;
    if (axis < 0) throw ValidationError("axis must be x, y or z");
    const double t0 = r.num("t_start"), t1 = r.num("t_end");
    const auto tr = integrate(angle_to_vector(parse_init(r.str("init"))), r.params(), r.integrator(), t1,
                              {false, 1, t0});
    if (!tr.ok()) throw NumericalError(tr.failure->message, tr.failure->last_valid, tr.failure->time);
    const auto rep = fourier_spectrum(tr, axis, t0, t1, r.integer("samples_per_period"), r.num("dominance"));
    Sink out(r.s.at("output").at("path"));
    write_spectrum_csv(*out, rep, r.comment());
    return 0;
}

int run_feigenbaum(const Resolved& r) {
    FeigenbaumOptions opt;
    opt.max_doublings = r.integer("max_doublings");
    opt.resolution = r.num("resolution");
    opt.transient = r.integer("transient");
    const std::string sys = r.str("system");
    FeigenbaumEstimate est;
    if (sys == "logistic") {
        const auto [lo, hi] = r.str("range").empty() ? std::pair{3.4, 3.57} : range(r, "range");
        est = logistic_feigenbaum(lo, hi, 0.5, opt);
    } else if (sys == "macrospin") {
        const auto [lo, hi] = r.str("range").empty() ? std::pair{5.0, 5.2} : range(r, "range");
        progress("feigenbaum kappa in [" + format_double(lo) + ", " + format_double(hi) + "]");
        est = feigenbaum_estimate(r.params(), lo, hi, angle_to_vector(parse_init(r.str("init"))), r.integrator(), opt);
    } else {
        throw ValidationError("system must be macrospin or logistic");
    }
    Sink out(r.s.at("output").at("path"));
    write_feigenbaum_json(*out, est, r.comment());
    return 0;
}

int run_symmetry_check(const Resolved& r) {
    const auto p = r.params();
    SingleParticleModel m = SingleParticleModel::standard(p.gamma, p.omega);
    const bool standard = r.str("r").empty();
    if (!standard) m.r = number_list("r", r.str("r"));
    const double eps = r.num("epsilon");
    const int samples = r.integer("samples");
    if (samples < 1) throw ValidationError("samples must be >= 1");
    std::mt19937_64 rng(static_cast<std::uint64_t>(r.integer("seed")));
    std::uniform_real_distribution<double> ut(0.0, 10.0 * p.period());
    Eigen::Matrix2cd sz;
    sz << 1, 0, 0, -1;
    double eig_err = 0.0, comm = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = ut(rng);
        const Eigen::Matrix2cd h = sp_hamiltonian(t, m) + eps * sz;
        comm = std::max(comm, commutator_norm(h, glide_operator(t, m.omega)));
        if (standard) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h, Eigen::EigenvaluesOnly);
            const double e = std::abs(p.gamma * std::sin(0.5 * p.omega * t));
            eig_err = std::max({eig_err, std::abs(es.eigenvalues()[0] + e), std::abs(es.eigenvalues()[1] - e)});
        }
    }
    const double tg = gapless_time(m);
    const double gap = 2.0 * std::abs(sp_offdiag(tg, m));
    Sink out(r.s.at("output").at("path"));
    *out << "# " << r.comment() << '\n' << "check,value,threshold,pass\n";
    out->precision(6);
    bool ok = true;
    auto row = [&](const char* name, double v, double thr) {
        const bool pass = v < thr;
        ok = ok && pass;
        *out << name << ',' << v << ',' << thr << ',' << (pass ? 1 : 0) << '\n';
    };
    if (standard) row("eigenvalue_error", eig_err, 1e-12);
    row("glide_commutator", comm, 1e-12);
    row("gap_at_gapless_time", gap, 1e-10);
    *out << "gapless_time," << tg << ",,1\n";
    return ok ? 0 : 2;
}

int run_schur_weyl(const Resolved& r) {
    const auto sectors = schur_weyl_decomposition(r.integer("n"));
    Sink out(r.s.at("output").at("path"));
    write_schur_weyl_csv(*out, sectors, r.comment() + " total=" + std::to_string(schur_weyl_total(sectors)));
    return 0;
}

// ----------------------------------------------------------------------------------------------
// option plumbing

struct Command {
    CLI::App* app{nullptr};
    bool model{true};  // takes model, integrator and init flags
    ConfigSection task;
    std::function<int(const Resolved&)> run;
};

Sections g_flags;  // values given on the command line

void bind_key(CLI::App* app, const std::string& flag, const std::string& section, const std::string& key,
          const std::string& help) {
    app->add_option_function<std::string>(flag, [section, key](const std::string& v) { g_flags[section][key] = v; },
                                          help);
}

void read_ini(const std::string& path, Sections& into) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(path, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError("config file: " + std::string(e.what()));
    }
    for (const auto& [sec, body] : pt) {
        if (body.empty() && !body.data().empty())
            throw ValidationError("config file: key '" + sec + "' must sit inside a [section]");
        if (sec != "params" && sec != "integrator" && sec != "task" && sec != "output")
            throw ValidationError("config file: unknown section [" + sec + "] (expected params, integrator, task, output)");
        for (const auto& [k, v] : body) into[sec][k] = v.data();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven dissipative macrospin: classical and finite-N quantum dynamics, chaos diagnostics"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all subcommand help");
    std::string config_path;
    unsigned threads = 0;

    std::map<std::string, Command> cmds;
    auto add = [&](const std::string& name, const std::string& desc, bool model, ConfigSection task,
                   std::function<int(const Resolved&)> run) {
        Command c{app.add_subcommand(name, desc), model, std::move(task), std::move(run)};
        c.app->add_option("--config", config_path, "INI file with [params] [integrator] [task] [output] sections");
        c.app->add_option("--threads", threads, "worker threads (default: all cores)");
        bind_key(c.app, "-o,--output", "output", "path", "output file ('-' for stdout)");
        if (model) {
            bind_key(c.app, "--gamma", "params", "gamma", "drive strength");
            bind_key(c.app, "--kappa", "params", "kappa", "dissipation strength");
            bind_key(c.app, "--omega", "params", "omega", "drive frequency");
            bind_key(c.app, "--n", "params", "n_spins", "number of spins");
            c.app->add_option_function<std::string>(
                "--j",
                [](const std::string& v) {
                    const auto parts = split(v);
                    if (parts.size() != 3) throw CLI::ValidationError("--j", "expected three values 'jx,jy,jz'");
                    g_flags["params"]["jx"] = parts[0];
                    g_flags["params"]["jy"] = parts[1];
                    g_flags["params"]["jz"] = parts[2];
                },
                "interaction constants jx,jy,jz");
            bind_key(c.app, "--order", "integrator", "order", "Runge-Kutta order (2, 3, 4)");
            bind_key(c.app, "--dt", "integrator", "dt", "time step in driving periods");
        }
        for (const auto& [key, def] : c.task) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            if (model && key == "n") continue;
            bind_key(c.app, flag, "task", key, "task." + key + " (default '" + def + "')");
        }
        cmds.emplace(name, std::move(c));
    };

    const std::string pi = format_double(std::numbers::pi), two = format_double(2 * std::numbers::pi);
    add("classical", "mean-field trajectory", true,
        {{"init", "x"}, {"t_end", "100"}, {"stride", "10"}, {"strobe", "0"}, {"record_from", "0"}}, run_classical);
    add("quantum", "finite-N Dicke-basis evolution", true,
        {{"init", "x"}, {"t_end", "10"}, {"interval", "0.01"}, {"snapshots", ""}, {"snapshot_prefix", ""},
         {"full_matrix", "0"}},
        run_quantum);
    add("compare", "quantum-classical error over a list of N", true,
        {{"init", "x"}, {"t_end", "50"}, {"interval", "0.1"}, {"n_list", "100,125,150,175,200"}}, run_compare);
    add("mle", "Lyapunov spectrum at one parameter point", true,
        {{"init", "x"}, {"t_total", "2000"}, {"transient", "200"}, {"renorm", "1"}, {"series", ""}}, run_mle);
    add("mle-map", "maximal Lyapunov exponent over a (gamma, kappa) grid", true,
        {{"init", "x"}, {"t_total", "2000"}, {"transient", "200"}, {"renorm", "1"}, {"gamma_range", "0,10"},
         {"kappa_range", "0,8"}, {"gamma_n", "20"}, {"kappa_n", "20"}, {"format", "csv"}},
        run_mle_map);
    add("bifurcation", "stroboscopic bifurcation scan", true,
        {{"init", "x"}, {"control", "kappa"}, {"range", "0,8"}, {"count", "81"}, {"values", ""}, {"policy", "fixed"},
         {"global_count", "500"}, {"transient", "200"}, {"samples", "1000"}},
        run_bifurcation);
    add("basin", "basin-of-attraction map on the sphere", true,
        {{"theta_n", "200"}, {"phi_n", "400"}, {"seeds", "48"}, {"seed_periods", "600"}, {"match_tolerance", "0.001"},
         {"max_periods", "1200"}, {"theta_range", "0," + pi}, {"phi_range", "0," + two}, {"allow_coarse", "0"}},
        run_basin);
    add("spectrum", "Fourier periodicity report of a trajectory window", true,
        {{"init", "x"}, {"t_start", "150"}, {"t_end", "200"}, {"samples_per_period", "1"}, {"axis", "x"},
         {"dominance", "5"}},
        run_spectrum);
    add("feigenbaum", "period-doubling cascade and delta estimate", true,
        {{"init", "x"}, {"system", "macrospin"}, {"range", ""}, {"max_doublings", "5"}, {"resolution", "1e-8"},
         {"transient", "1000"}},
        run_feigenbaum);
    add("symmetry-check", "glide symmetry and gap checks of the single-particle family", true,
        {{"samples", "10000"}, {"seed", "1"}, {"r", ""}, {"epsilon", "0"}}, run_symmetry_check);
    add("schur-weyl", "Schur-Weyl sector table for n spins", false, {{"n", "6"}}, run_schur_weyl);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    const auto chosen = app.get_subcommands().front();
    const Command& cmd = cmds.at(chosen->get_name());
    Resolved r;
    r.command = chosen->get_name();
    r.threads = threads;
    try {
        // defaults < config file < flags
        r.s["params"] = to_section(ModelParams{});
        r.s["integrator"] = {{"order", "4"}, {"dt", "0.001"}};
        r.s["task"] = cmd.task;
        r.s["output"] = {{"path", "-"}};
        Sections file;
        if (!config_path.empty()) read_ini(config_path, file);
        for (const auto* layer : {&file, &g_flags})
            for (const auto& [sec, body] : *layer)
                for (const auto& [k, v] : body) r.s[sec][k] = v;
        for (const auto& [k, v] : r.s.at("task"))
            if (!cmd.task.count(k)) throw ValidationError("unknown task key '" + k + "' for " + r.command);
        for (const auto& [k, v] : r.s.at("output"))
            if (k != "path") throw ValidationError("unknown output key '" + k + "'");
        if (!cmd.model) {
            r.s["params"].clear();
            r.s["integrator"].clear();
        } else {
            r.params();
            r.integrator();
        }
        const auto t0 = std::chrono::steady_clock::now();
        const int code = cmd.run(r);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        progress(r.command + " finished in " + format_double(std::round(secs * 100) / 100) + " s");
        return code;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << " at t=" << e.time << '\n';
        return 2;
    } catch (const BasinFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const FeigenbaumFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
