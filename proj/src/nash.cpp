#include "gossipfpp/nash.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "gossipfpp/fpp_engine.hpp"
#include "gossipfpp/parallel.hpp"
#include "gossipfpp/rng.hpp"
#include "gossipfpp/stats.hpp"

namespace gossipfpp::nash {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> flatten(const StrategyProfile& s) {
    if (const auto* sc = std::get_if<RateScalar>(&s)) return {sc->theta};
    if (const auto* nf = std::get_if<RateNearFar>(&s)) return {nf->near, nf->far};
    return std::get<RateByDistance>(s).theta;
}

StrategyProfile with_coords(const StrategyProfile& shape,
                            const std::vector<double>& coords) {
    if (std::holds_alternative<RateScalar>(shape)) return RateScalar{coords[0]};
    if (std::holds_alternative<RateNearFar>(shape))
        return RateNearFar{coords[0], coords[1]};
    return RateByDistance{coords};
}

StrategyProfile zero_like(const StrategyProfile& shape) {
    return with_coords(shape, std::vector<double>(flatten(shape).size(), 0.0));
}

// Target selection for ego's calls, per channel.
struct TargetModel {
    int kind = 0;  // 0 complete, 1 torus_nn, 2 short_long, 3 distance_cost
    std::int64_t n = 0;
    int N = 0;
    std::int64_t ego = 0;
    std::array<std::int64_t, 4> ego_nbrs{};
    std::vector<std::vector<std::pair<int, int>>> offsets;  // distance_cost

    static TargetModel make(const Topology& top, std::int64_t ego,
                            std::size_t channels) {
        TargetModel m;
        m.ego = ego;
        m.n = agent_count(top);
        if (std::holds_alternative<Complete>(top)) return m;
        m.N = std::visit(
            [](const auto& v) -> int {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Complete>)
                    return 0;
                else
                    return v.N;
            },
            top);
        const int ex = static_cast<int>(ego % m.N), ey = static_cast<int>(ego / m.N);
        m.ego_nbrs = {static_cast<std::int64_t>(ey) * m.N + ((ex + 1) % m.N),
                      static_cast<std::int64_t>(ey) * m.N + ((ex + m.N - 1) % m.N),
                      static_cast<std::int64_t>((ey + 1) % m.N) * m.N + ex,
                      static_cast<std::int64_t>((ey + m.N - 1) % m.N) * m.N + ex};
        if (std::holds_alternative<TorusNN>(top)) {
            m.kind = 1;
        } else if (std::holds_alternative<TorusShortLong>(top)) {
            m.kind = 2;
        } else {
            m.kind = 3;
            m.offsets.resize(channels + 1);
            for (std::size_t d = 1; d <= channels; ++d)
                m.offsets[d] = torus_offsets_at_distance(m.N, static_cast<int>(d));
        }
        return m;
    }

    std::int64_t draw(int channel, Rng& rng) const {
        switch (kind) {
            case 0: {
                auto j = static_cast<std::int64_t>(rng.below(n - 1));
                return j >= ego ? j + 1 : j;
            }
            case 1:
                return ego_nbrs[rng.below(4)];
            case 2: {
                if (channel == 0) return ego_nbrs[rng.below(4)];
                for (;;) {
                    const auto v = static_cast<std::int64_t>(rng.below(n));
                    if (v == ego) continue;
                    if (v == ego_nbrs[0] || v == ego_nbrs[1] || v == ego_nbrs[2] ||
                        v == ego_nbrs[3])
                        continue;
                    return v;
                }
            }
            default: {
                const auto& offs = offsets[channel + 1];
                const auto& [dx, dy] = offs[rng.below(offs.size())];
                const int ex = static_cast<int>(ego % N), ey = static_cast<int>(ego / N);
                const int vx = (ex + dx) % N, vy = (ey + dy) % N;
                return static_cast<std::int64_t>(vy) * N + vx;
            }
        }
    }

    double reachable_fraction(int channel, const std::vector<double>& receipt) const {
        switch (kind) {
            case 0: {
                std::int64_t fin = 0;
                for (std::int64_t v = 0; v < n; ++v)
                    if (v != ego && std::isfinite(receipt[v])) ++fin;
                return static_cast<double>(fin) / static_cast<double>(n - 1);
            }
            case 1: {
                int fin = 0;
                for (const auto w : ego_nbrs) fin += std::isfinite(receipt[w]) ? 1 : 0;
                return fin / 4.0;
            }
            case 2: {
                if (channel == 0) {
                    int fin = 0;
                    for (const auto w : ego_nbrs)
                        fin += std::isfinite(receipt[w]) ? 1 : 0;
                    return fin / 4.0;
                }
                std::int64_t fin = 0;
                for (std::int64_t v = 0; v < n; ++v) {
                    if (v == ego || v == ego_nbrs[0] || v == ego_nbrs[1] ||
                        v == ego_nbrs[2] || v == ego_nbrs[3])
                        continue;
                    if (std::isfinite(receipt[v])) ++fin;
                }
                return static_cast<double>(fin) / static_cast<double>(n - 5);
            }
            default: {
                const auto& offs = offsets[channel + 1];
                std::int64_t fin = 0;
                const int ex = static_cast<int>(ego % N), ey = static_cast<int>(ego / N);
                for (const auto& [dx, dy] : offs) {
                    const int vx = (ex + dx) % N, vy = (ey + dy) % N;
                    if (std::isfinite(receipt[static_cast<std::int64_t>(vy) * N + vx]))
                        ++fin;
                }
                return static_cast<double>(fin) / static_cast<double>(offs.size());
            }
        }
    }
};

// Dyadic mark bands anchored at the population rate scale: band 0 covers
// marks (0, unit], band j covers (unit 2^{j-1}, unit 2^j]. A rate-phi call
// process consists of the events with mark <= phi, so for a fixed population
// profile the call sets are nested across phi: raising any of ego's rates can
// only add calls and lower its receipt time.
struct MarkBand {
    double lo, hi;
};

MarkBand band_of(double unit, int j) {
    if (j == 0) return {0.0, unit};
    return {unit * std::ldexp(1.0, j - 1), unit * std::ldexp(1.0, j)};
}

int bands_covering(double unit, double cap) {
    int j = 0;
    while (band_of(unit, j).hi < cap && j < 64) ++j;
    return j + 1;
}

struct Step {
    double mark;
    double time;
    double reward;
};
struct Tail {
    double lo;    // mark band: contributes for phi > lo
    double hi;
    double e;     // unit exponential for the first success past the horizon
    double frac;  // fraction of the channel's targets ever informed
};
struct ChannelCurve {
    std::vector<Step> steps;  // mark ascending, time strictly descending
    std::vector<Tail> tails;
};

// One replicate: the substrate receipt times compressed, per channel, into a
// reward/time curve over ego's rate.
struct RepData {
    std::vector<ChannelCurve> curves;
    double horizon = 0.0;
    double reward_past = 0.0;   // reward when informed after the horizon
    double reward_never = 0.0;  // = R(1)
    bool fixed = false;         // ego is the source
    double fixed_reward = 0.0;

    // best candidate (time, reward) of one channel at rate phi
    void channel_candidate(int c, double phi, double& bt, double& br) const {
        const auto& cur = curves[c];
        std::size_t lo = 0, hi = cur.steps.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cur.steps[mid].mark <= phi)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo > 0 && cur.steps[lo - 1].time < bt) {
            bt = cur.steps[lo - 1].time;
            br = cur.steps[lo - 1].reward;
        }
        for (const auto& tail : cur.tails) {
            if (phi <= tail.lo || tail.frac <= 0.0) continue;
            const double rate = (std::min(phi, tail.hi) - tail.lo) * tail.frac;
            const double t = horizon + tail.e / rate;
            if (t < bt) {
                bt = t;
                br = reward_past;
            }
        }
    }

    double eval_reward(const std::vector<double>& phi) const {
        if (fixed) return fixed_reward;
        double bt = kInf, br = reward_never;
        for (std::size_t c = 0; c < curves.size(); ++c)
            channel_candidate(static_cast<int>(c), phi[c], bt, br);
        return br;
    }

    double eval_time(const std::vector<double>& phi) const {
        if (fixed) return 0.0;
        double bt = kInf, br = 0.0;
        for (std::size_t c = 0; c < curves.size(); ++c)
            channel_candidate(static_cast<int>(c), phi[c], bt, br);
        return bt;
    }
};

std::vector<double> band_units(const StrategyProfile& theta) {
    const auto base = flatten(theta);
    double fallback = 0.0;
    for (const double x : base) fallback = std::max(fallback, x);
    fallback = std::max(fallback * 0.01, 1e-12);
    std::vector<double> u;
    u.reserve(base.size());
    for (const double x : base) u.push_back(x > 0.0 ? x : fallback);
    return u;
}

RepData build_rep(const Topology& top, const RewardSpec& reward,
                  const StrategyProfile& theta, const std::vector<double>& caps,
                  std::uint64_t seed, std::int64_t rep) {
    const std::int64_t ego = 0;
    const auto channels = caps.size();
    const auto run =
        percolate(top, theta, EgoDeviation{ego, zero_like(theta)},
                  seed_mix({seed, 0x5B, static_cast<std::uint64_t>(rep)}));
    const auto n = static_cast<std::int64_t>(run.receipt.size());
    const double nd = static_cast<double>(n);

    RepData rd;
    if (run.source == ego) {
        rd.fixed = true;
        rd.fixed_reward = reward(1.0 / nd);
        return rd;
    }

    const auto tm = TargetModel::make(top, ego, channels);
    std::vector<double> sorted(run.receipt);
    std::sort(sorted.begin(), sorted.end());
    std::int64_t n_finite = 0;
    double horizon = 0.0;
    for (const double t : sorted) {
        if (std::isfinite(t)) {
            ++n_finite;
            horizon = std::max(horizon, t);
        }
    }
    rd.horizon = horizon;
    auto reward_at = [&](double t) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        const auto rank = static_cast<std::int64_t>(it - sorted.begin()) + 1;
        return reward(static_cast<double>(std::min(rank, n)) / nd);
    };
    rd.reward_past = reward(static_cast<double>(std::min(n_finite + 1, n)) / nd);
    rd.reward_never = reward(1.0);
    const bool all_reachable = (n_finite == n - 1);
    const auto units = band_units(theta);

    rd.curves.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        if (caps[c] <= 0.0) continue;
        const double frac =
            all_reachable ? 1.0
                          : tm.reachable_fraction(static_cast<int>(c), run.receipt);
        const double unit = units[c];
        auto& curve = rd.curves[c];
        std::vector<std::pair<double, double>> hits;
        const int bands = bands_covering(unit, caps[c]);
        for (int j = 0; j < bands; ++j) {
            const auto band = band_of(unit, j);
            if (band.lo >= caps[c]) break;
            const double width = band.hi - band.lo;
            Rng rng(seed_mix({seed, 0x5D, static_cast<std::uint64_t>(rep),
                              static_cast<std::uint64_t>(c),
                              static_cast<std::uint64_t>(j)}));
            double t = 0.0;
            double best_mark = kInf;  // only successes below the running
                                      // minimum mark can matter later
            for (;;) {
                t += rng.exp1() / width;
                if (t > horizon) {
                    const double e = rng.exp1();
                    curve.tails.push_back({band.lo, band.hi, e, frac});
                    break;
                }
                const double mark = band.lo + width * rng.uniform01();
                const auto target = tm.draw(static_cast<int>(c), rng);
                if (mark <= caps[c] && mark < best_mark &&
                    run.receipt[target] <= t) {
                    hits.emplace_back(mark, t);
                    best_mark = mark;
                }
            }
        }
        std::sort(hits.begin(), hits.end());
        double min_time = kInf;
        for (const auto& [mark, t] : hits) {
            if (t < min_time) {
                min_time = t;
                curve.steps.push_back({mark, t, reward_at(t)});
            }
        }
    }
    return rd;
}

std::vector<RepData> build_reps(const Topology& top, const RewardSpec& reward,
                                const StrategyProfile& theta,
                                const std::vector<double>& caps, std::uint64_t seed,
                                std::int64_t replicates, int threads) {
    std::vector<RepData> reps(replicates);
    parallel_for(replicates, threads, [&](std::int64_t rep) {
        reps[rep] = build_rep(top, reward, theta, caps, seed, rep);
    });
    return reps;
}

struct CurvePoint {
    double mean = 0.0;
    double se = 0.0;
};

CurvePoint reward_curve_at(const std::vector<RepData>& reps,
                           const std::vector<double>& phi) {
    stats::RunningStat rs;
    for (const auto& rd : reps) rs.add(rd.eval_reward(phi));
    return {rs.mean(), rs.stderr_mean()};
}

// Best response in one channel given prebuilt replicates.
BestResponse scan_channel(const Topology& topology, const StrategyProfile& theta,
                          const std::vector<RepData>& reps, int channel,
                          double hi, int grid, int refine_iters) {
    auto coords = flatten(theta);
    auto unit_cost = [&](double phi) {
        auto c = coords;
        c[channel] = phi;
        return strategy_cost(topology, with_coords(theta, c));
    };
    auto payoff = [&](double phi) {
        auto c = coords;
        c[channel] = phi;
        return reward_curve_at(reps, c).mean - unit_cost(phi);
    };

    BestResponse out;
    for (int i = 0; i < grid; ++i) {
        const double phi = hi * i / (grid - 1);
        auto c = coords;
        c[channel] = phi;
        const auto pt = reward_curve_at(reps, c);
        out.grid_phi.push_back(phi);
        out.grid_payoff.push_back(pt.mean - unit_cost(phi));
        out.grid_stderr.push_back(pt.se);
    }
    double max_se = 0.0;
    for (const double se : out.grid_stderr) max_se = std::max(max_se, se);
    out.concave = true;
    for (int i = 1; i + 1 < grid; ++i) {
        const double dd =
            out.grid_payoff[i + 1] - 2.0 * out.grid_payoff[i] + out.grid_payoff[i - 1];
        if (dd > 3.0 * max_se) out.concave = false;
    }

    int best = 0;
    for (int i = 1; i < grid; ++i)
        if (out.grid_payoff[i] > out.grid_payoff[best]) best = i;

    // Refine by locating the zero of the CRN central difference: under
    // coupling, payoff differences are far less noisy than payoff levels.
    const double step = hi / (grid - 1);
    const double delta = 0.5 * step;
    auto dpay = [&](double x) {
        const double xl = std::max(x - delta, 0.0);
        const double xr = std::min(x + delta, hi);
        return (payoff(xr) - payoff(xl)) / (xr - xl);
    };
    double a = out.grid_phi[std::max(0, best - 1)];
    double b = out.grid_phi[std::min(grid - 1, best + 1)];
    const double da = dpay(a), db = dpay(b);
    if (da <= 0.0 && best == 0) {
        out.phi_star = out.grid_phi[0];
    } else if (db >= 0.0 && best == grid - 1) {
        out.phi_star = out.grid_phi[grid - 1];
    } else if (da > 0.0 && db < 0.0) {
        for (int it = 0; it < refine_iters; ++it) {
            const double mid = 0.5 * (a + b);
            if (dpay(mid) > 0.0)
                a = mid;
            else
                b = mid;
        }
        out.phi_star = 0.5 * (a + b);
    } else {
        out.phi_star = out.grid_phi[best];  // noisy or boundary profile
    }
    auto c_star = coords;
    c_star[channel] = out.phi_star;
    const auto at_star = reward_curve_at(reps, c_star);
    out.payoff_at = at_star.mean - unit_cost(out.phi_star);
    out.payoff_stderr = at_star.se;

    const double cd = std::max(hi / (2.0 * (grid - 1)), 1e-9);
    const double pl = payoff(std::max(out.phi_star - cd, 0.0));
    const double pr = payoff(std::min(out.phi_star + cd, hi));
    out.curvature = (pr - 2.0 * out.payoff_at + pl) / (cd * cd);
    return out;
}

}  // namespace

std::string to_string(Classification c) {
    switch (c) {
        case Classification::efficient: return "efficient";
        case Classification::totally_wasteful: return "totally_wasteful";
        default: return "wasteful";
    }
}

PayoffEstimate payoff_mc(const Topology& topology, const RewardSpec& spec,
                         const StrategyProfile& theta, const StrategyProfile& phi,
                         std::int64_t replicates, std::uint64_t seed, int threads) {
    validate(topology, theta, std::optional<EgoDeviation>(EgoDeviation{0, phi}));
    if (replicates < 2) throw std::invalid_argument("payoff_mc: replicates >= 2");
    const auto coords = flatten(phi);
    const auto reps = build_reps(topology, spec, theta, coords, seed, replicates, threads);
    const auto curve = reward_curve_at(reps, coords);
    PayoffEstimate est;
    est.reward = curve.mean;
    est.reward_stderr = curve.se;
    est.cost = strategy_cost(topology, phi);
    est.payoff = est.reward - est.cost;
    est.payoff_stderr = curve.se;
    est.replicates = replicates;
    return est;
}

BestResponse best_response(const Topology& topology, const RewardSpec& spec,
                           const StrategyProfile& theta, int channel,
                           const BRSearch& search, std::uint64_t seed) {
    const auto base = flatten(theta);
    if (channel < 0 || channel >= static_cast<int>(base.size()))
        throw std::invalid_argument("best_response: channel out of range");
    if (!(search.hi > 0.0)) throw std::invalid_argument("best_response: need hi > 0");
    if (search.grid < 3) throw std::invalid_argument("best_response: grid >= 3");
    validate(topology, theta);

    auto caps = base;
    caps[channel] = search.hi;
    const auto reps =
        build_reps(topology, spec, theta, caps, seed, search.replicates, search.threads);
    return scan_channel(topology, theta, reps, channel, search.hi, search.grid,
                        search.refine_iters);
}

namespace {

// Stationarity-root equilibrium for scalar-rate profiles. The best-response
// map can hug the diagonal (on the torus its slope near the fixed point is
// close to 1), which makes plain damped iteration creep and its residual
// unreliable; the derivative of ego's payoff at phi = theta, by contrast, is
// steep in theta. Stochastic bisection on that CRN derivative localizes the
// equilibrium independently of the starting point.
double scalar_stationarity_root(const Topology& topology, const RewardSpec& spec,
                                double init, const NashOptions& opts,
                                std::uint64_t seed,
                                std::vector<IterationRecord>& trace) {
    auto h_at = [&](double th, int iter) {
        const StrategyProfile prof = RateScalar{th};
        const double delta = 0.15 * th;
        const std::vector<double> caps{th + 2.0 * delta};
        const auto reps = build_reps(
            topology, spec, prof, caps,
            seed_mix({seed, 0xA7, static_cast<std::uint64_t>(iter)}),
            opts.replicates, opts.threads);
        const double up = reward_curve_at(reps, {th + delta}).mean - (th + delta);
        const double dn = reward_curve_at(reps, {th - delta}).mean - (th - delta);
        return (up - dn) / (2.0 * delta);
    };

    double lo = init / 4.0, hi = init * 4.0;
    int iter = 0;
    // establish the bracket: h decreasing in theta, h(lo) > 0 > h(hi)
    for (int widen = 0; widen < 3; ++widen) {
        bool ok = true;
        if (h_at(lo, 1000 + iter++) <= 0.0) {
            lo /= 4.0;
            ok = false;
        }
        if (h_at(hi, 1000 + iter++) >= 0.0) {
            hi *= 4.0;
            ok = false;
        }
        if (ok) break;
        if (widen == 2)
            throw std::runtime_error(
                "nash_fixed_point: no stationarity sign change in the rate bracket");
    }

    std::vector<double> tail_mids;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double h = h_at(mid, it);
        IterationRecord rec;
        rec.iteration = it;
        rec.theta = {mid};
        rec.response = {h > 0.0 ? hi : lo};
        rec.residual = hi / lo - 1.0;
        trace.push_back(rec);
        if (h > 0.0)
            lo = mid;
        else
            hi = mid;
        tail_mids.push_back(std::sqrt(lo * hi));
        if (hi / lo - 1.0 <= std::max(0.5 * opts.rel_tol, 0.02) &&
            it + 1 >= opts.min_iterations)
            break;
    }
    // average the last few midpoints: once the bracket is inside the noise
    // region the walk is unbiased around the root
    const std::size_t keep = std::min<std::size_t>(3, tail_mids.size());
    double acc = 0.0;
    for (std::size_t i = tail_mids.size() - keep; i < tail_mids.size(); ++i)
        acc += tail_mids[i];
    return acc / static_cast<double>(keep);
}

}  // namespace

NashEstimate nash_fixed_point(const Topology& topology, const RewardSpec& spec,
                              const StrategyProfile& init, const NashOptions& opts,
                              std::uint64_t seed) {
    validate(topology, init);
    auto theta = flatten(init);
    const auto init_coords = theta;
    const auto channels = static_cast<int>(theta.size());

    NashEstimate est;
    double residual = kInf;
    bool converged = false;

    if (channels == 1) {
        theta[0] = scalar_stationarity_root(topology, spec, theta[0], opts, seed,
                                            est.trace);
        // self-consistency: the best response at the root stays at the root
        BRSearch check;
        check.hi = 4.0 * theta[0];
        check.grid = opts.grid;
        check.replicates = opts.replicates;
        check.threads = opts.threads;
        const auto br = best_response(topology, spec, RateScalar{theta[0]}, 0, check,
                                      seed_mix({seed, 0xBC}));
        residual = std::abs(br.phi_star - theta[0]) / std::max(theta[0], 1e-12);
        converged = true;
    }
    int cost_streak = 0;  // consecutive iterations with stable aggregate cost
    for (int iter = 0; !converged && iter < opts.max_iterations; ++iter) {
        double theta_max = 0.0;
        for (const double x : theta) theta_max = std::max(theta_max, x);
        std::vector<double> hi(channels), caps(channels);
        for (int c = 0; c < channels; ++c) {
            const double floor_c =
                std::max({0.5 * init_coords[c], 0.05 * theta_max, 1e-8});
            hi[c] = std::max(4.0 * theta[c], floor_c);
            caps[c] = hi[c];
        }
        const auto profile = with_coords(init, theta);
        const auto reps = build_reps(
            topology, spec, profile, caps,
            seed_mix({seed, 0xB0, static_cast<std::uint64_t>(iter)}),
            opts.replicates, opts.threads);
        std::vector<double> response(channels);
        for (int c = 0; c < channels; ++c) {
            const auto br =
                scan_channel(topology, profile, reps, c, hi[c], opts.grid, 40);
            response[c] = br.phi_star;
        }
        residual = 0.0;
        for (int c = 0; c < channels; ++c) {
            const double scale =
                std::max({theta[c], response[c], 0.05 * theta_max, 1e-8});
            residual = std::max(residual, std::abs(response[c] - theta[c]) / scale);
        }
        IterationRecord rec;
        rec.iteration = iter;
        rec.theta = theta;
        rec.response = response;
        rec.residual = residual;
        est.trace.push_back(rec);
        // Profiles with payoff-indifferent splits (e.g. a flat cost schedule
        // makes only the total rate matter) settle in aggregate cost while
        // the coordinates wander along the indifference manifold.
        const double cost_prev = strategy_cost(topology, with_coords(init, theta));
        for (int c = 0; c < channels; ++c)
            theta[c] += opts.damping * (response[c] - theta[c]);
        const double cost_now = strategy_cost(topology, with_coords(init, theta));
        const double cost_res =
            std::abs(cost_now - cost_prev) / std::max(cost_prev, 1e-8);
        cost_streak = cost_res <= 0.5 * opts.rel_tol ? cost_streak + 1 : 0;
        if (iter + 1 >= opts.min_iterations &&
            (residual <= opts.rel_tol || cost_streak >= 4)) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::string msg = "nash_fixed_point: no convergence; trace:";
        for (const auto& r : est.trace) {
            msg += " iter" + std::to_string(r.iteration) + "(";
            for (const double x : r.theta) msg += std::to_string(x) + ",";
            msg += "res=" + std::to_string(r.residual) + ")";
        }
        throw std::runtime_error(msg);
    }

    est.strategy = with_coords(init, theta);
    est.br_residual = residual;
    const std::int64_t m =
        opts.classify_replicates > 0 ? opts.classify_replicates : opts.replicates;
    const auto pe = payoff_mc(topology, spec, est.strategy, est.strategy, m,
                              seed_mix({seed, 0xC1A55}), opts.threads);
    est.payoff = pe.payoff;
    est.payoff_stderr = pe.payoff_stderr;
    est.reward = pe.reward;
    est.cost = pe.cost;

    const auto cls = classify_payoff(est.payoff, est.payoff_stderr, est.cost,
                                     spec.rbar(), opts.efficient_fraction,
                                     opts.totally_wasteful_fraction);
    est.classification = cls.classification;
    est.classification_flagged = cls.flagged;
    return est;
}

ClassifyResult classify_payoff(double payoff, double payoff_stderr, double cost,
                               double rbar, double efficient_fraction,
                               double totally_wasteful_fraction) {
    const double tw_th = std::max(totally_wasteful_fraction * rbar, 2.0 * payoff_stderr);
    const double eff_th = std::max(efficient_fraction * rbar, 2.0 * payoff_stderr);
    const bool ambiguous_tw = std::abs(payoff - tw_th) <= 2.0 * payoff_stderr;
    const bool ambiguous_eff = std::abs(cost - eff_th) <= 2.0 * payoff_stderr;
    ClassifyResult out;
    if (ambiguous_tw && ambiguous_eff) {
        out.classification = Classification::wasteful;
        out.flagged = true;
    } else if (payoff <= tw_th) {
        out.classification = Classification::totally_wasteful;
        out.flagged = ambiguous_tw;
    } else if (cost <= eff_th) {
        out.classification = Classification::efficient;
        out.flagged = ambiguous_eff;
    } else {
        out.classification = Classification::wasteful;
        out.flagged = ambiguous_tw || ambiguous_eff;
    }
    return out;
}

FiniteKNashMC nash_finite_k_mc(std::int64_t n, std::int64_t k,
                               std::int64_t replicates, std::uint64_t seed,
                               int threads) {
    if (k < 2 || k >= n) throw std::invalid_argument("nash_finite_k_mc: need 2 <= k < n");
    if (replicates < 1000)
        throw std::invalid_argument("nash_finite_k_mc: too few replicates");
    const double w = static_cast<double>(n) / static_cast<double>(k);
    const double delta = 0.05;

    // Stage races: while m agents are informed and ego is not, ego beats the
    // n - m - 1 uninformed rivals with probability phi / (phi + (n-m-1)
    // theta). With U_m uniform, ego wins stage m exactly when phi/theta
    // exceeds (n-m-1) U_m / (1 - U_m): a CRN staircase threshold, so each
    // replicate yields one ratio below which ego is among the first k.
    const int chunks = 512;
    struct Counter {
        std::int64_t lo = 0, hi = 0, one = 0, total = 0;
    };
    std::vector<Counter> counters(chunks);
    parallel_for(chunks, threads, [&](std::int64_t chunk) {
        Rng rng(seed_mix({seed, 0xF17, static_cast<std::uint64_t>(chunk)}));
        const std::int64_t base = replicates / chunks;
        const std::int64_t extra = chunk < (replicates % chunks) ? 1 : 0;
        Counter ct;
        for (std::int64_t rep = 0; rep < base + extra; ++rep) {
            double ratio;
            if (rng.uniform01() * static_cast<double>(n) < 1.0) {
                ratio = 0.0;  // ego is the source: among the first k for free
            } else {
                ratio = kInf;
                for (std::int64_t m = 1; m <= k - 1; ++m) {
                    const double u = rng.uniform01();
                    const double thresh = static_cast<double>(n - m - 1) * u /
                                          std::max(1.0 - u, 1e-300);
                    ratio = std::min(ratio, thresh);
                }
            }
            ++ct.total;
            if (ratio <= 1.0 - delta) ++ct.lo;
            if (ratio <= 1.0 + delta) ++ct.hi;
            if (ratio < 1.0) ++ct.one;
        }
        counters[chunk] = ct;
    });
    Counter all;
    for (const auto& ct : counters) {
        all.lo += ct.lo;
        all.hi += ct.hi;
        all.one += ct.one;
        all.total += ct.total;
    }
    const double m = static_cast<double>(all.total);
    const double p_window = static_cast<double>(all.hi - all.lo) / m;
    FiniteKNashMC out;
    out.theta = w * p_window / (2.0 * delta);
    out.theta_stderr = w * std::sqrt(p_window * (1.0 - p_window) / m) / (2.0 * delta);
    const double p_one = static_cast<double>(all.one) / m;
    out.payoff = w * p_one - out.theta;
    out.payoff_stderr = std::sqrt(w * w * p_one * (1.0 - p_one) / m +
                                  out.theta_stderr * out.theta_stderr);
    return out;
}

ShortLongNash nash_short_long(const RewardSpec& spec, double c_far, int N,
                              double area, double zprime1,
                              const fquad::FquadSolution& f1) {
    if (N < 3) throw std::invalid_argument("nash_short_long: N >= 3");
    const double n2 = static_cast<double>(N) * N;
    if (!(c_far > 1.0) || !(c_far < n2))
        throw std::invalid_argument(
            "nash_short_long: need 1 << c_N << N^2 (c_N outside (1, N^2))");
    if (!(area > 0.0)) throw std::invalid_argument("nash_short_long: area > 0");
    if (zprime1 == 0.0)
        throw std::invalid_argument("nash_short_long: z'(1) must be nonzero");
    if (std::abs(f1.lambda - 1.0) > 1e-9)
        throw std::invalid_argument("nash_short_long: pass the lambda = 1 solution");

    const double f_lo = f1.F.front(), f_hi = f1.F.back();
    const double a = f1.tail_rate;
    auto phi_at_quantile = [&](double y) {
        if (y <= f_lo) return y / a;  // exponential tail: integral of F is F/a
        if (y >= f_hi) return f1.integral_to(f1.t_at(f1.F.size() - 1));
        return f1.integral_to(f1.quantile(y));
    };
    auto density_at_quantile = [&](double u) {
        if (u <= f_lo) return a * u;
        if (u >= f_hi) return f1.density(f1.t_at(f1.F.size() - 1));
        return f1.density(f1.quantile(u));
    };

    ShortLongNash out;
    out.c_far = c_far;
    out.area = area;
    out.I1 = spec.integrate_r([&](double y) { return (1.0 - y) * phi_at_quantile(y); });
    out.I2 = spec.integrate_r(density_at_quantile);
    // z'(1) < 0 multiplies a positive integral in the stationarity condition;
    // the positive equilibrium uses its magnitude.
    out.Q = std::abs(zprime1) * out.I1 * out.I2;
    out.theta_near = std::sqrt(out.Q / c_far);
    out.theta_far = out.I1 * out.I1 * out.I1 / (area * out.Q * c_far * c_far);
    return out;
}

DistanceCostReport distance_cost_efficiency(const RewardSpec& spec,
                                            const std::vector<double>& cost_table,
                                            const std::vector<int>& N_grid,
                                            const NashOptions& opts,
                                            std::uint64_t seed) {
    if (N_grid.empty())
        throw std::invalid_argument("distance_cost_efficiency: empty N grid");
    DistanceCostReport report;
    for (const int N : N_grid) {
        const Topology top = TorusDistanceCost{N, cost_table};
        validate(top);
        std::size_t d_max = std::min<std::size_t>(8, cost_table.size());
        NashEstimate est;
        for (;;) {
            std::vector<double> init(d_max);
            init[0] = 2.0 / N;
            for (std::size_t d = 1; d < d_max; ++d)
                init[d] = 0.5 / (N * cost_table[d]);
            est = nash_fixed_point(top, spec, RateByDistance{init}, opts,
                                   seed_mix({seed, static_cast<std::uint64_t>(N)}));
            const auto rates = flatten(est.strategy);
            double peak = 0.0;
            for (const double x : rates) peak = std::max(peak, x);
            if (rates.back() > 0.05 * peak && d_max < cost_table.size()) {
                d_max = std::min(cost_table.size(), 2 * d_max);  // extend support
                continue;
            }
            break;
        }
        DistanceCostPoint pt;
        pt.N = N;
        pt.theta = flatten(est.strategy);
        pt.payoff = est.payoff;
        pt.payoff_stderr = est.payoff_stderr;
        pt.cost = est.cost;
        pt.classification = est.classification;
        double peak = 0.0;
        for (const double x : pt.theta) peak = std::max(peak, x);
        pt.support_max = 0;
        for (std::size_t d = 0; d < pt.theta.size(); ++d)
            if (pt.theta[d] > 0.05 * peak) pt.support_max = static_cast<int>(d + 1);
        stats::RunningStat width;
        for (int r = 0; r < 5; ++r) {
            const auto run = percolate(
                top, est.strategy, std::nullopt,
                seed_mix({seed, 0xD1, static_cast<std::uint64_t>(N),
                          static_cast<std::uint64_t>(r)}));
            width.add(spread_stats(run).width);
        }
        pt.window_width = width.mean();
        report.points.push_back(pt);
    }
    report.cost_decreasing = report.points.size() >= 2;
    report.window_growing = report.points.size() >= 2;
    int s_min = report.points.front().support_max, s_max = s_min;
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        s_min = std::min(s_min, report.points[i].support_max);
        s_max = std::max(s_max, report.points[i].support_max);
        if (i > 0) {
            if (report.points[i].cost >= report.points[i - 1].cost)
                report.cost_decreasing = false;
            if (report.points[i].window_width <= report.points[i - 1].window_width)
                report.window_growing = false;
        }
    }
    report.support_stable = (s_max - s_min) <= 1;
    return report;
}

namespace detail {

std::vector<double> ego_receipt_times(const Topology& topology,
                                      const StrategyProfile& theta,
                                      const StrategyProfile& phi,
                                      std::int64_t replicates, std::uint64_t seed) {
    const auto coords = flatten(phi);
    static const RewardSpec dummy = RewardSpec::linear();
    std::vector<double> out(replicates);
    for (std::int64_t rep = 0; rep < replicates; ++rep) {
        const auto rd = build_rep(topology, dummy, theta, coords, seed, rep);
        out[rep] = rd.eval_time(coords);
    }
    return out;
}

}  // namespace detail

}  // namespace gossipfpp::nash
