#include "gossipfpp/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "gossipfpp/analytic_cg.hpp"
#include "gossipfpp/fpp_engine.hpp"
#include "gossipfpp/fquad.hpp"
#include "gossipfpp/lattice.hpp"
#include "gossipfpp/nash.hpp"
#include "gossipfpp/parallel.hpp"
#include "gossipfpp/quadrature.hpp"
#include "gossipfpp/rng.hpp"
#include "gossipfpp/stats.hpp"

namespace gossipfpp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".")
                                                      : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
    }
    fs::rename(tmp, path);
}

const json& need(const json& cfg, const std::string& key, const std::string& ctx) {
    if (!cfg.contains(key)) throw ConfigError(ctx + key, "missing required field");
    return cfg.at(key);
}

double need_number(const json& cfg, const std::string& key, const std::string& ctx) {
    const auto& v = need(cfg, key, ctx);
    if (!v.is_number()) throw ConfigError(ctx + key, "expected a number");
    return v.get<double>();
}

std::int64_t need_int(const json& cfg, const std::string& key, const std::string& ctx) {
    const auto& v = need(cfg, key, ctx);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number()) {  // sweep axes write grid values as doubles
        const double x = v.get<double>();
        if (x == std::floor(x)) return static_cast<std::int64_t>(x);
    }
    throw ConfigError(ctx + key, "expected an integer");
}

double opt_number(const json& cfg, const std::string& key, double fallback) {
    return cfg.contains(key) ? cfg.at(key).get<double>() : fallback;
}

std::int64_t opt_int(const json& cfg, const std::string& key, std::int64_t fallback) {
    return cfg.contains(key) ? cfg.at(key).get<std::int64_t>() : fallback;
}

Topology parse_topology(const json& cfg) {
    const auto& t = need(cfg, "topology", "");
    const auto kind = need(t, "kind", "topology.").get<std::string>();
    try {
        if (kind == "complete") {
            Topology top = Complete{need_int(t, "n", "topology.")};
            validate(top);
            return top;
        }
        if (kind == "torus_nn") {
            Topology top = TorusNN{static_cast<int>(need_int(t, "N", "topology."))};
            validate(top);
            return top;
        }
        if (kind == "torus_short_long") {
            Topology top = TorusShortLong{static_cast<int>(need_int(t, "N", "topology.")),
                                          need_number(t, "far_cost", "topology.")};
            validate(top);
            return top;
        }
        if (kind == "torus_distance_cost") {
            Topology top = TorusDistanceCost{
                static_cast<int>(need_int(t, "N", "topology.")),
                need(t, "cost", "topology.").get<std::vector<double>>()};
            validate(top);
            return top;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("topology", e.what());
    }
    throw ConfigError("topology.kind", "unknown kind '" + kind + "'");
}

RewardSpec parse_reward(const json& cfg) {
    const auto& r = need(cfg, "reward", "");
    const auto family = need(r, "family", "reward.").get<std::string>();
    try {
        if (family == "linear") return RewardSpec::linear();
        if (family == "constant") return RewardSpec::constant();
        if (family == "threshold")
            return RewardSpec::threshold(need_number(r, "u0", "reward."));
        if (family == "table")
            return RewardSpec::table(need(r, "u", "reward.").get<std::vector<double>>(),
                                     need(r, "R", "reward.").get<std::vector<double>>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("reward", e.what());
    }
    throw ConfigError("reward.family", "unknown family '" + family + "'");
}

StrategyProfile parse_strategy(const json& cfg, const Topology& top,
                               const std::string& key = "strategy") {
    const auto& s = need(cfg, key, "");
    try {
        StrategyProfile prof;
        if (s.contains("theta")) {
            prof = RateScalar{need_number(s, "theta", key + ".")};
        } else if (s.contains("near") || s.contains("far")) {
            prof = RateNearFar{need_number(s, "near", key + "."),
                               need_number(s, "far", key + ".")};
        } else if (s.contains("rates")) {
            prof = RateByDistance{need(s, "rates", key + ".").get<std::vector<double>>()};
        } else {
            throw ConfigError(key, "expected theta, near/far, or rates");
        }
        validate(top, prof);
        return prof;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

json strategy_to_json(const StrategyProfile& s) {
    json out;
    if (const auto* sc = std::get_if<RateScalar>(&s)) {
        out["theta"] = sc->theta;
    } else if (const auto* nf = std::get_if<RateNearFar>(&s)) {
        out["near"] = nf->near;
        out["far"] = nf->far;
    } else {
        out["rates"] = std::get<RateByDistance>(s).theta;
    }
    return out;
}

std::uint64_t need_seed(const json& cfg) {
    // reproducibility contract: the seed is always explicit
    if (!cfg.contains("seed"))
        throw ConfigError("seed", "missing required field (no wall-clock default)");
    if (!cfg.at("seed").is_number_integer())
        throw ConfigError("seed", "expected an integer");
    return cfg.at("seed").get<std::uint64_t>();
}

int threads_of(const json& cfg) {
    const auto t = opt_int(cfg, "threads", default_threads());
    if (t < 1) throw ConfigError("threads", "must be >= 1");
    return static_cast<int>(t);
}

// ---------------------------------------------------------------------------
// experiment runners; each returns {summary json, extra files written}

json run_simulate(const json& cfg, const fs::path& dir) {
    const auto top = parse_topology(cfg);
    const auto prof = parse_strategy(cfg, top);
    const auto seed = need_seed(cfg);
    const auto replicates = opt_int(cfg, "replicates", 1);
    if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
    const int threads = threads_of(cfg);
    const double lo = opt_number(cfg, "window_lo", 0.1);
    const double hi = opt_number(cfg, "window_hi", 0.9);

    std::optional<EgoDeviation> ego;
    if (cfg.contains("ego")) {
        const auto& e = cfg.at("ego");
        ego = EgoDeviation{need_int(e, "agent", "ego."),
                           parse_strategy(cfg, top, "ego")};
        validate(top, prof, ego);
    }

    std::vector<double> widths(replicates);
    RunResult first;
    parallel_for(replicates, threads, [&](std::int64_t rep) {
        const auto run = percolate(top, prof, ego,
                                   seed_mix({seed, static_cast<std::uint64_t>(rep)}));
        widths[rep] = spread_stats(run, lo, hi).width;
        if (rep == 0) first = run;
    });

    std::ostringstream csv;
    first.write_csv(csv);
    write_atomic(dir / "runresult.csv", csv.str());

    const auto stats0 = spread_stats(first, lo, hi);
    const auto wv = stats::mean_var(widths);
    json summary;
    summary["experiment"] = "simulate";
    summary["topology"] = cfg.at("topology");
    summary["agents"] = agent_count(top);
    summary["replicates"] = replicates;
    summary["window_lo"] = lo;
    summary["window_hi"] = hi;
    summary["window_width_mean"] = wv.mean;
    summary["window_width_stderr"] = wv.stderr_mean();
    json q;
    for (const double p : {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99})
        q[fmt17(p)] = stats0.quantile(p);
    summary["first_run_quantiles"] = q;
    summary["first_run_source"] = first.source;
    summary["metrics"] = {{"window_width", wv.mean}};
    return summary;
}

json run_analytic(const json& cfg, const fs::path&) {
    const auto quantity = need(cfg, "quantity", "").get<std::string>();
    json out;
    out["experiment"] = "analytic";
    out["quantity"] = quantity;
    try {
        if (quantity == "nash_cg") {
            const auto spec = parse_reward(cfg);
            out["value"] = analytic::nash_cg(spec);
            out["formula_id"] = "nash_cg_integral";
        } else if (quantity == "payoff_cg") {
            const auto spec = parse_reward(cfg);
            out["value"] = analytic::payoff_cg(spec, need_number(cfg, "phi", ""),
                                               need_number(cfg, "theta", ""));
            out["formula_id"] = "payoff_cg";
        } else if (quantity == "rbar") {
            out["value"] = parse_reward(cfg).rbar();
            out["formula_id"] = "rbar";
        } else if (quantity == "eval_R") {
            out["value"] = parse_reward(cfg)(need_number(cfg, "u", ""));
            out["formula_id"] = "eval_R";
        } else if (quantity == "nash_finite_k") {
            const auto got = analytic::nash_finite_k(need_int(cfg, "n", ""),
                                                     need_int(cfg, "k", ""));
            out["value"] = got.theta;
            out["payoff"] = got.payoff;
            out["formula_id"] = "finite_k_stage_races";
        } else if (quantity == "prob_second") {
            out["value"] = analytic::prob_second(need_int(cfg, "n", ""),
                                                 need_number(cfg, "phi", ""),
                                                 need_number(cfg, "theta", ""));
            out["formula_id"] = "prob_second";
        } else if (quantity == "nash_symmetric") {
            out["value"] = analytic::nash_symmetric(need_number(cfg, "theta_asy", ""));
            out["formula_id"] = "symmetric_halving";
        } else if (quantity == "nash_audience") {
            out["value"] = analytic::nash_audience(need_number(cfg, "c", ""));
            out["formula_id"] = "audience_integral";
        } else {
            throw ConfigError("quantity", "unknown quantity '" + quantity + "'");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("quantity", e.what());
    }
    out["metrics"] = {{"value", out["value"]}};
    return out;
}

json run_fquad(const json& cfg, const fs::path& dir) {
    const double lambda = opt_number(cfg, "lambda", 1.0);
    fquad::FquadSolution sol;
    if (cfg.contains("grid")) {
        const auto& g = cfg.at("grid");
        sol = fquad::solve_fquad(lambda, {need_number(g, "t_min", "grid."),
                                          need_number(g, "t_max", "grid."),
                                          need_number(g, "h", "grid.")});
    } else {
        sol = fquad::solve_fquad(lambda);
    }
    std::ostringstream csv;
    csv << "t,F\n";
    for (std::size_t j = 0; j < sol.F.size(); ++j)
        csv << fmt17(sol.t_at(j)) << ',' << fmt17(sol.F[j]) << '\n';
    write_atomic(dir / "fquad.csv", csv.str());

    json out;
    out["experiment"] = "fquad";
    out["lambda"] = lambda;
    out["residual"] = sol.residual;
    out["iterations"] = sol.iterations;
    out["tail_rate"] = sol.tail_rate;
    out["window_width"] = sol.quantile(0.9) - sol.quantile(0.1);
    out["metrics"] = {{"window_width", out["window_width"]},
                      {"residual", sol.residual}};
    return out;
}

json run_lattice(const json& cfg, const fs::path& dir) {
    const auto op = need(cfg, "operation", "").get<std::string>();
    const auto seed = need_seed(cfg);
    const int threads = threads_of(cfg);
    json out;
    out["experiment"] = "lattice";
    out["operation"] = op;

    if (op == "rank") {
        const int N = static_cast<int>(need_int(cfg, "N", ""));
        const auto replicates = opt_int(cfg, "replicates", 10000);
        const double ks = lattice::uniform_rank_check(N, replicates, seed, threads);
        out["ks"] = ks;
        out["N"] = N;
        out["replicates"] = replicates;
        out["metrics"] = {{"ks", ks}};
        return out;
    }

    // the remaining operations build on a shape estimate
    const int L = static_cast<int>(opt_int(cfg, "L", 352));
    const double s_max = opt_number(cfg, "s_max", 128.0);
    const auto shape_reps = opt_int(cfg, "shape_replicates", 8);
    const int q_N = static_cast<int>(opt_int(cfg, "q_torus_N", 96));
    const auto q_reps = opt_int(cfg, "q_replicates", 24);
    const auto shape = lattice::estimate_shape(L, s_max, static_cast<int>(shape_reps),
                                               seed_mix({seed, 1}), threads, q_N,
                                               static_cast<int>(q_reps));
    if (op == "shape") {
        std::ostringstream csv;
        csv << "s,q\n";
        for (std::size_t i = 0; i < shape.q_s.size(); ++i)
            csv << fmt17(shape.q_s[i]) << ',' << fmt17(shape.q_vals[i]) << '\n';
        write_atomic(dir / "q_table.csv", csv.str());
        out["area"] = shape.area;
        out["area_stderr"] = shape.area_stderr;
        out["area_half_time"] = shape.area_half_time;
        out["v_lower"] = shape.v_lower;
        out["v_upper"] = shape.v_upper;
        out["metrics"] = {{"area", shape.area}};
        return out;
    }

    const double r = opt_number(cfg, "r", 32.0);
    const auto tau_reps = opt_int(cfg, "tau_replicates", 2000);
    const auto taus = lattice::sample_tau(r, static_cast<int>(tau_reps), shape,
                                          seed_mix({seed, 2}), threads);
    if (op == "tau") {
        std::ostringstream csv;
        csv << "tau1,tau2,tau3,tau4,r,angle\n";
        for (const auto& t : taus) {
            csv << fmt17(t.tau[0]) << ',' << fmt17(t.tau[1]) << ',' << fmt17(t.tau[2])
                << ',' << fmt17(t.tau[3]) << ',' << fmt17(t.r) << ','
                << fmt17(t.angle) << '\n';
        }
        write_atomic(dir / "tau.csv", csv.str());
        out["replicates"] = tau_reps;
        out["r"] = r;
        out["metrics"] = json::object();
        return out;
    }

    std::vector<double> grid{0.5, 0.6, 0.8, 0.9, 1.0, 1.1, 1.2, 1.5, 2.0};
    if (cfg.contains("lambda_grid"))
        grid = cfg.at("lambda_grid").get<std::vector<double>>();
    const auto z_reps = opt_int(cfg, "z_replicates", 200000);
    const auto z = lattice::estimate_z(taus, grid, z_reps, seed_mix({seed, 3}), &shape);
    if (op == "z") {
        std::ostringstream csv;
        csv << "lambda,z,z_stderr\n";
        for (std::size_t i = 0; i < z.lambdas.size(); ++i)
            csv << fmt17(z.lambdas[i]) << ',' << fmt17(z.z[i]) << ','
                << fmt17(z.z_stderr[i]) << '\n';
        write_atomic(dir / "z_table.csv", csv.str());
        out["zprime1"] = z.zprime1;
        out["zprime1_stderr"] = z.zprime1_stderr;
        out["monotone_violations"] = z.monotone_violations;
        json bins = json::array();
        for (const auto& b : z.bins)
            bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"g", b.g},
                            {"g_stderr", b.g_stderr}, {"count", b.count}});
        out["u_bins"] = bins;
        out["metrics"] = {{"zprime1", z.zprime1}};
        return out;
    }
    if (op == "nash-nn") {
        const auto spec = parse_reward(cfg);
        const int N = static_cast<int>(need_int(cfg, "N", ""));
        const double theta = lattice::nash_torus_nn(spec, shape, z, N);
        out["N"] = N;
        out["theta"] = theta;
        out["zprime1"] = z.zprime1;
        out["area"] = shape.area;
        out["metrics"] = {{"theta", theta}};
        return out;
    }
    throw ConfigError("operation", "unknown lattice operation '" + op + "'");
}

json run_nash(const json& cfg, const fs::path& dir) {
    const auto seed = need_seed(cfg);
    const int threads = threads_of(cfg);
    json out;
    out["experiment"] = "nash";

    const auto& reward_cfg = need(cfg, "reward", "");
    const auto family = need(reward_cfg, "family", "reward.").get<std::string>();
    if (family == "finite_k") {
        const auto top = parse_topology(cfg);
        const auto* c = std::get_if<Complete>(&top);
        if (!c) throw ConfigError("topology", "finite_k rewards need the complete graph");
        const auto k = need_int(reward_cfg, "k", "reward.");
        const auto replicates = opt_int(cfg, "replicates", 4000000);
        const auto mc = nash::nash_finite_k_mc(c->n, k, replicates, seed, threads);
        out["theta"] = mc.theta;
        out["theta_stderr"] = mc.theta_stderr;
        out["payoff"] = mc.payoff;
        out["payoff_stderr"] = mc.payoff_stderr;
        out["metrics"] = {{"theta", mc.theta}, {"payoff", mc.payoff}};
        write_atomic(dir / "report.json", out.dump(2) + "\n");
        return out;
    }

    const auto top = parse_topology(cfg);
    const auto spec = parse_reward(cfg);
    const auto init = parse_strategy(cfg, top, cfg.contains("init") ? "init" : "strategy");
    nash::NashOptions opts;
    opts.replicates = opt_int(cfg, "replicates", 2000);
    opts.threads = threads;
    if (cfg.contains("search")) {
        const auto& s = cfg.at("search");
        opts.grid = static_cast<int>(opt_int(s, "grid", opts.grid));
        opts.max_iterations =
            static_cast<int>(opt_int(s, "max_iterations", opts.max_iterations));
        opts.rel_tol = opt_number(s, "rel_tol", opts.rel_tol);
        opts.damping = opt_number(s, "damping", opts.damping);
    }
    const auto est = nash::nash_fixed_point(top, spec, init, opts, seed);

    out["strategy"] = strategy_to_json(est.strategy);
    out["payoff"] = est.payoff;
    out["payoff_stderr"] = est.payoff_stderr;
    out["payoff_ci95"] = {est.payoff - 2 * est.payoff_stderr,
                          est.payoff + 2 * est.payoff_stderr};
    out["reward"] = est.reward;
    out["cost"] = est.cost;
    out["classification"] = nash::to_string(est.classification);
    out["classification_flagged"] = est.classification_flagged;
    out["br_residual"] = est.br_residual;
    json trace = json::array();
    for (const auto& r : est.trace)
        trace.push_back({{"iteration", r.iteration},
                         {"theta", r.theta},
                         {"response", r.response},
                         {"residual", r.residual}});
    out["trace"] = trace;
    double theta0 = 0.0;
    if (const auto* sc = std::get_if<RateScalar>(&est.strategy))
        theta0 = sc->theta;
    else if (const auto* nf = std::get_if<RateNearFar>(&est.strategy))
        theta0 = nf->near;
    else
        theta0 = std::get<RateByDistance>(est.strategy).theta[0];
    out["metrics"] = {{"cost", est.cost},
                      {"payoff", est.payoff},
                      {"theta", theta0}};
    write_atomic(dir / "report.json", out.dump(2) + "\n");
    return out;
}

json run_any(const json& cfg, const fs::path& dir);

json run_sweep(const json& cfg, const fs::path& dir) {
    const auto& base = need(cfg, "base", "");
    const auto& axes = need(cfg, "axes", "");
    if (!axes.is_array() || axes.empty())
        throw ConfigError("axes", "need a nonempty array of axes");

    struct Axis {
        std::string path;
        std::vector<double> values;
    };
    std::vector<Axis> ax;
    for (const auto& a : axes) {
        Axis axis;
        axis.path = need(a, "path", "axes.").get<std::string>();
        axis.values = need(a, "values", "axes.").get<std::vector<double>>();
        if (axis.values.empty()) throw ConfigError("axes.values", "empty grid");
        ax.push_back(axis);
    }
    std::int64_t total = 1;
    for (const auto& a : ax) total *= static_cast<std::int64_t>(a.values.size());

    auto set_path = [](json& obj, const std::string& path, double value) {
        json* cur = &obj;
        std::size_t pos = 0;
        for (;;) {
            const auto dot = path.find('.', pos);
            const auto key = path.substr(pos, dot == std::string::npos
                                                  ? std::string::npos
                                                  : dot - pos);
            if (dot == std::string::npos) {
                (*cur)[key] = value;
                return;
            }
            cur = &(*cur)[key];
            pos = dot + 1;
        }
    };

    json points = json::array();
    std::vector<json> state(total);
    for (std::int64_t idx = 0; idx < total; ++idx) {
        json point_cfg = base;
        std::int64_t rem = idx;
        json coords;
        for (const auto& a : ax) {
            const auto i = rem % static_cast<std::int64_t>(a.values.size());
            rem /= static_cast<std::int64_t>(a.values.size());
            set_path(point_cfg, a.path, a.values[i]);
            coords[a.path] = a.values[i];
        }
        char name[32];
        std::snprintf(name, sizeof(name), "point_%04lld", static_cast<long long>(idx));
        json entry;
        entry["index"] = idx;
        entry["coords"] = coords;
        try {
            const auto rec = run_experiment(point_cfg, (dir / name).string());
            const auto summary = json::parse(rec.summary_json);
            entry["metrics"] = summary.contains("metrics") ? summary.at("metrics")
                                                           : json::object();
        } catch (const std::exception& e) {
            entry["error"] = e.what();  // partial failures recorded per point
        }
        points.push_back(entry);
    }

    // long-format CSV: one row per point
    std::ostringstream csv;
    csv << "index";
    for (const auto& a : ax) csv << ',' << a.path;
    csv << ",metric,value,error\n";
    for (const auto& p : points) {
        std::string prefix = std::to_string(p.at("index").get<std::int64_t>());
        for (const auto& a : ax)
            prefix += ',' + fmt17(p.at("coords").at(a.path).get<double>());
        if (p.contains("error")) {
            csv << prefix << ",,," << "\"error\"\n";
            continue;
        }
        for (const auto& [k, v] : p.at("metrics").items())
            if (v.is_number())
                csv << prefix << ',' << k << ',' << fmt17(v.get<double>()) << ",\n";
    }
    write_atomic(dir / "sweep.csv", csv.str());

    json out;
    out["experiment"] = "sweep";
    out["points"] = points;

    // log-log slope fits for declared scaling hypotheses (single-axis sweeps)
    if (cfg.contains("slopes") && ax.size() == 1) {
        json fits = json::array();
        for (const auto& hyp : cfg.at("slopes")) {
            const auto metric = need(hyp, "metric", "slopes.").get<std::string>();
            std::vector<double> xs, ys;
            for (const auto& p : points) {
                if (p.contains("error") || !p.at("metrics").contains(metric)) continue;
                const double y = p.at("metrics").at(metric).get<double>();
                const double x = p.at("coords").at(ax[0].path).get<double>();
                if (x > 0.0 && y > 0.0) {
                    xs.push_back(x);
                    ys.push_back(y);
                }
            }
            json fit;
            fit["metric"] = metric;
            fit["axis"] = ax[0].path;
            fit["points_used"] = xs.size();
            if (xs.size() >= 3) {
                const auto sf = stats::log_log_slope(xs, ys);
                fit["slope"] = sf.slope;
                fit["slope_stderr"] = sf.slope_stderr;
                if (hyp.contains("expected")) fit["expected"] = hyp.at("expected");
            } else {
                fit["error"] = "not enough valid points";
            }
            fits.push_back(fit);
        }
        out["slope_fits"] = fits;
    }
    out["metrics"] = json::object();
    return out;
}

json run_any(const json& cfg, const fs::path& dir) {
    const auto kind = need(cfg, "experiment", "").get<std::string>();
    if (kind == "simulate") return run_simulate(cfg, dir);
    if (kind == "analytic") return run_analytic(cfg, dir);
    if (kind == "fquad") return run_fquad(cfg, dir);
    if (kind == "lattice") return run_lattice(cfg, dir);
    if (kind == "nash") return run_nash(cfg, dir);
    if (kind == "sweep") return run_sweep(cfg, dir);
    throw ConfigError("experiment", "unknown experiment '" + kind + "'");
}

}  // namespace

json load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open " + path);
    json cfg;
    try {
        is >> cfg;
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    return cfg;
}

json canonicalize(const json& config) {
    // nlohmann::json objects already iterate in sorted key order; rebuilding
    // normalizes number representations through the value round-trip
    return json::parse(config.dump());
}

std::string config_hash(const json& canonical) {
    // execution details (worker count, output location) are not part of the
    // experiment's identity
    json hashed = canonical;
    hashed.erase("threads");
    hashed.erase("out");
    const std::string dump = hashed.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (const unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string default_out_dir() {
    if (const char* env = std::getenv("GOSSIPFPP_OUT")) return env;
    return ".";
}

ResultRecord run_experiment(const json& config, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    const json canonical = canonicalize(config);
    (void)need(canonical, "experiment", "");
    need_seed(canonical);

    const fs::path dir(out_dir);
    json summary = run_any(canonical, dir);

    ResultRecord rec;
    rec.config_hash = config_hash(canonical);
    rec.artifact_version = kArtifactVersion;
    summary["config_hash"] = rec.config_hash;
    summary["artifact_version"] = rec.artifact_version;
    rec.summary_json = summary.dump(2) + "\n";
    const fs::path spath = dir / "summary.json";
    write_atomic(spath, rec.summary_json);
    rec.summary_path = spath.string();
    rec.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace gossipfpp::cli
