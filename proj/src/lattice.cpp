#include "gossipfpp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gossipfpp/parallel.hpp"
#include "gossipfpp/rng.hpp"

namespace gossipfpp::lattice {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Directed receipt channels (uninformed vertex, direction of an informed
// neighbor) for rate-1 nearest-neighbor FPP.
struct Frontier {
    std::vector<std::int32_t> entries;
    std::vector<std::int32_t> pos;

    void init(std::int64_t total) {
        entries.clear();
        pos.assign(static_cast<std::size_t>(total) * 4, -1);
    }
    void add(std::int64_t v, int dir) {
        const auto key = static_cast<std::int32_t>(v * 4 + dir);
        pos[key] = static_cast<std::int32_t>(entries.size());
        entries.push_back(key);
    }
    void remove_all(std::int64_t v) {
        for (int dir = 0; dir < 4; ++dir) {
            const auto key = static_cast<std::size_t>(v) * 4 + dir;
            const auto p = pos[key];
            if (p < 0) continue;
            const auto last = entries.back();
            entries[static_cast<std::size_t>(p)] = last;
            pos[last] = p;
            entries.pop_back();
            pos[key] = -1;
        }
    }
};

struct PlaneRunResult {
    std::int64_t count_half = 0;
    std::int64_t count_full = 0;
    std::vector<std::int32_t> wetted;  // indices in the (2L+1)^2 box
    std::array<double, 4> watch_times{kInf, kInf, kInf, kInf};
};

// Rate-1 FPP on a (2L+1)^2 box. Throws if the growth reaches the box border.
// Stops either at stop_time or once all four watched vertices are wetted.
PlaneRunResult plane_run(int L, std::int64_t source, std::int64_t disabled,
                         double stop_time, const std::array<std::int64_t, 4>* watch,
                         Rng& rng, bool keep_wetted) {
    const int S = 2 * L + 1;
    const std::int64_t total = static_cast<std::int64_t>(S) * S;
    std::vector<char> informed(total, 0);
    Frontier frontier;
    frontier.init(total);

    PlaneRunResult res;
    if (keep_wetted) res.wetted.reserve(1024);

    int watch_left = watch ? 4 : 0;
    double t = 0.0;
    bool half_recorded = false;
    std::int64_t count = 0;
    const double half_time = 0.5 * stop_time;

    auto inform = [&](std::int64_t v) {
        informed[v] = 1;
        ++count;
        if (keep_wetted) res.wetted.push_back(static_cast<std::int32_t>(v));
        const int x = static_cast<int>(v % S), y = static_cast<int>(v / S);
        if (x == 0 || x == S - 1 || y == 0 || y == S - 1)
            throw std::runtime_error("lattice run reached the box border; enlarge L");
        frontier.remove_all(v);
        const std::int64_t nbs[4] = {v + 1, v - 1, v + S, v - S};
        const int back[4] = {1, 0, 3, 2};
        for (int dir = 0; dir < 4; ++dir) {
            const std::int64_t w = nbs[dir];
            if (!informed[w] && w != disabled) frontier.add(w, back[dir]);
        }
        if (watch) {
            for (int i = 0; i < 4; ++i) {
                if ((*watch)[i] == v && res.watch_times[i] == kInf) {
                    res.watch_times[i] = t;
                    --watch_left;
                }
            }
        }
    };

    inform(source);
    while (!frontier.entries.empty()) {
        if (watch && watch_left == 0) break;
        t += rng.exp1() / static_cast<double>(frontier.entries.size());
        if (t > stop_time) break;
        if (!half_recorded && t > half_time) {
            res.count_half = count;
            half_recorded = true;
        }
        const auto key = frontier.entries[rng.below(frontier.entries.size())];
        inform(key >> 2);
    }
    if (!half_recorded) res.count_half = count;
    res.count_full = count;
    return res;
}

struct TorusRunResult {
    std::vector<double> times;
    std::int64_t informed_at_stop = 0;
};

// Rate-1 FPP on the N x N torus from a uniform source. Optionally stops the
// moment stop_vertex is wetted.
TorusRunResult torus_run(int N, std::uint64_t seed, std::int64_t stop_vertex,
                         bool record_times) {
    const std::int64_t total = static_cast<std::int64_t>(N) * N;
    Rng rng(seed);
    std::vector<char> informed(total, 0);
    Frontier frontier;
    frontier.init(total);

    TorusRunResult res;
    if (record_times) res.times.assign(total, kInf);
    double t = 0.0;
    std::int64_t count = 0;

    auto inform = [&](std::int64_t v) {
        informed[v] = 1;
        ++count;
        if (record_times) res.times[v] = t;
        frontier.remove_all(v);
        const int x = static_cast<int>(v % N), y = static_cast<int>(v / N);
        const std::int64_t nbs[4] = {
            static_cast<std::int64_t>(y) * N + ((x + 1) % N),
            static_cast<std::int64_t>(y) * N + ((x + N - 1) % N),
            static_cast<std::int64_t>((y + 1) % N) * N + x,
            static_cast<std::int64_t>((y + N - 1) % N) * N + x};
        const int back[4] = {1, 0, 3, 2};
        for (int dir = 0; dir < 4; ++dir) {
            const std::int64_t w = nbs[dir];
            if (!informed[w]) frontier.add(w, back[dir]);
        }
    };

    const std::int64_t source = static_cast<std::int64_t>(rng.below(total));
    inform(source);
    while (!frontier.entries.empty()) {
        if (stop_vertex >= 0 && informed[stop_vertex]) break;
        t += rng.exp1() / static_cast<double>(frontier.entries.size());
        const auto key = frontier.entries[rng.below(frontier.entries.size())];
        inform(key >> 2);
    }
    res.informed_at_stop = count;
    return res;
}

constexpr int kAngleBins = 64;

}  // namespace

double ShapeEstimate::q(double s) const { return q_spline(s); }

double ShapeEstimate::q_inv(double u) const { return q_spline.inverse(u); }

double ShapeEstimate::V(double u) const {
    const double uc = std::clamp(u, 1e-9, 1.0 - 1e-9);
    return q_spline.derivative(q_spline.inverse(uc));
}

double ShapeEstimate::rho_radius(double angle) const {
    const double tau = 2.0 * M_PI;
    double a = std::fmod(angle, tau);
    if (a < 0) a += tau;
    const double pos = a / tau * kAngleBins;
    const auto lo = static_cast<std::size_t>(pos) % kAngleBins;
    const auto hi = (lo + 1) % kAngleBins;
    const double frac = pos - std::floor(pos);
    return radius_by_angle[lo] * (1.0 - frac) + radius_by_angle[hi] * frac;
}

double ShapeEstimate::max_radius() const {
    return *std::max_element(radius_by_angle.begin(), radius_by_angle.end());
}

ShapeEstimate estimate_shape(int L, double s_max, int replicates,
                             std::uint64_t seed, int threads, int q_torus_N,
                             int q_replicates) {
    if (L < 8 || !(s_max > 0.0) || replicates < 1)
        throw std::invalid_argument("estimate_shape: bad arguments");

    const int S = 2 * L + 1;
    const std::int64_t origin = static_cast<std::int64_t>(L) * S + L;

    struct RepStats {
        double a_full = 0, a_half = 0, inner = 0, outer = 0;
        std::array<double, kAngleBins> radius{};
    };
    std::vector<RepStats> reps(replicates);
    std::vector<std::pair<double, double>> final_set;

    parallel_for(replicates, threads, [&](std::int64_t rep) {
        Rng rng(seed_mix({seed, 0x5A, static_cast<std::uint64_t>(rep)}));
        auto run = plane_run(L, origin, -1, s_max, nullptr, rng, true);
        RepStats st;
        st.a_full = static_cast<double>(run.count_full) / (s_max * s_max);
        st.a_half = static_cast<double>(run.count_half) / (0.25 * s_max * s_max);
        std::int64_t outer = 0;
        std::vector<char> occupied(static_cast<std::size_t>(S) * S, 0);
        for (const auto v : run.wetted) {
            occupied[v] = 1;
            const int x = v % S - L, y = v / S - L;
            const std::int64_t l1 = std::abs(x) + std::abs(y);
            outer = std::max(outer, l1);
            const double norm = std::hypot(static_cast<double>(x), static_cast<double>(y));
            if (norm > 0) {
                double ang = std::atan2(static_cast<double>(y), static_cast<double>(x));
                if (ang < 0) ang += 2.0 * M_PI;
                auto bin = static_cast<std::size_t>(ang / (2.0 * M_PI) * kAngleBins);
                if (bin >= kAngleBins) bin = kAngleBins - 1;
                st.radius[bin] = std::max(st.radius[bin], norm / s_max);
            }
        }
        // largest full L1 ball inside the wetted set
        std::int64_t inner = 0;
        bool full = true;
        while (full && inner <= outer) {
            const std::int64_t rad = inner + 1;
            for (std::int64_t x = -rad; x <= rad && full; ++x) {
                const std::int64_t rem = rad - std::abs(x);
                for (std::int64_t y = -rem; y <= rem; y += std::max<std::int64_t>(1, 2 * rem)) {
                    if (std::abs(x) + std::abs(y) != rad) continue;
                    if (!occupied[(L + y) * S + (L + x)]) {
                        full = false;
                        break;
                    }
                }
            }
            if (full) ++inner;
        }
        st.inner = static_cast<double>(inner) / s_max;
        st.outer = static_cast<double>(outer) / s_max;
        reps[rep] = st;
        if (rep == 0) {
            std::vector<std::pair<double, double>> pts;
            pts.reserve(run.wetted.size());
            for (const auto v : run.wetted)
                pts.emplace_back((v % S - L) / s_max, (v / S - L) / s_max);
            final_set = std::move(pts);
        }
    });

    ShapeEstimate est;
    est.L = L;
    est.s_max = s_max;
    est.final_set = std::move(final_set);
    stats::RunningStat a_full, a_half, inner, outer;
    est.radius_by_angle.assign(kAngleBins, 0.0);
    for (const auto& st : reps) {
        a_full.add(st.a_full);
        a_half.add(st.a_half);
        inner.add(st.inner);
        outer.add(st.outer);
        for (int b = 0; b < kAngleBins; ++b)
            est.radius_by_angle[b] += st.radius[b] / replicates;
    }
    est.area = a_full.mean();
    est.area_stderr = a_full.stderr_mean();
    est.area_half_time = a_half.mean();
    est.v_lower = inner.mean();
    est.v_upper = outer.mean();

    // torus coverage profile q(s)
    std::vector<std::vector<double>> norm_times(q_replicates);
    parallel_for(q_replicates, threads, [&](std::int64_t rep) {
        auto run = torus_run(q_torus_N, seed_mix({seed, 0x9B, static_cast<std::uint64_t>(rep)}),
                             -1, true);
        auto& v = norm_times[rep];
        v = std::move(run.times);
        for (auto& tval : v) tval /= static_cast<double>(q_torus_N);
        std::sort(v.begin(), v.end());
    });
    double s_end = 0.0;
    for (const auto& v : norm_times) s_end = std::max(s_end, v.back());
    s_end *= 1.02;
    const int grid_n = 240;
    est.q_s.resize(grid_n + 1);
    est.q_vals.assign(grid_n + 1, 0.0);
    const double total = static_cast<double>(q_torus_N) * q_torus_N;
    for (int g = 0; g <= grid_n; ++g) {
        const double s = s_end * g / grid_n;
        est.q_s[g] = s;
        double acc = 0.0;
        for (const auto& v : norm_times) {
            const auto it = std::upper_bound(v.begin(), v.end(), s);
            acc += static_cast<double>(it - v.begin()) / total;
        }
        est.q_vals[g] = acc / q_replicates;
    }
    est.q_vals[0] = 0.0;
    for (int g = 1; g <= grid_n; ++g)
        est.q_vals[g] = std::max(est.q_vals[g], est.q_vals[g - 1]);
    est.q_spline = stats::MonotoneCubic(est.q_s, est.q_vals);
    return est;
}

std::vector<TauSample> sample_tau(double r, int replicates,
                                  const ShapeEstimate& shape, std::uint64_t seed,
                                  int threads) {
    if (r < kTauMinDistance)
        throw std::invalid_argument("sample_tau: r below the validated minimum (32)");
    if (replicates < 1) throw std::invalid_argument("sample_tau: replicates >= 1");

    const double max_r = shape.max_radius();
    std::vector<TauSample> out(replicates);
    parallel_for(replicates, threads, [&](std::int64_t rep) {
        Rng rng(seed_mix({seed, 0x7A0, static_cast<std::uint64_t>(rep)}));
        const double angle = rng.uniform01() * 2.0 * M_PI;
        const double rad = r * shape.rho_radius(angle);
        auto sx = static_cast<std::int64_t>(std::llround(rad * std::cos(angle)));
        auto sy = static_cast<std::int64_t>(std::llround(rad * std::sin(angle)));
        if (sx == 0 && sy == 0) sx = 1;

        const int L = static_cast<int>(std::ceil(1.3 * (r + 10.0) * max_r)) + 4;
        const int S = 2 * L + 1;
        // box centered at the source; the origin sits at (L - sx, L - sy)
        const std::int64_t ox = L - sx, oy = L - sy;
        const std::int64_t origin = oy * S + ox;
        const std::int64_t source = static_cast<std::int64_t>(L) * S + L;
        const std::array<std::int64_t, 4> watch{origin + 1, origin - 1,
                                                origin + S, origin - S};
        Rng run_rng(seed_mix({seed, 0x7A1, static_cast<std::uint64_t>(rep)}));
        auto run = plane_run(L, source, origin, kInf, &watch, run_rng, false);
        TauSample smp;
        smp.r = r;
        smp.angle = angle;
        double lo = kInf;
        for (int i = 0; i < 4; ++i) lo = std::min(lo, run.watch_times[i]);
        for (int i = 0; i < 4; ++i) smp.tau[i] = run.watch_times[i] - lo;
        out[rep] = smp;
    });
    return out;
}

ZLambdaEstimate estimate_z(const std::vector<TauSample>& taus,
                           std::vector<double> lambda_grid,
                           std::int64_t replicates, std::uint64_t seed,
                           const ShapeEstimate* shape, int n_bins) {
    if (taus.empty()) throw std::invalid_argument("estimate_z: no tau samples");
    if (replicates < 4) throw std::invalid_argument("estimate_z: too few replicates");
    // the derivative stencil needs 1 +- 0.1 and 1 +- 0.2 (and 1 itself)
    for (double need : {0.8, 0.9, 1.0, 1.1, 1.2}) {
        bool found = false;
        for (double l : lambda_grid) found = found || std::abs(l - need) < 1e-12;
        if (!found) lambda_grid.push_back(need);
    }
    std::sort(lambda_grid.begin(), lambda_grid.end());
    const auto nl = lambda_grid.size();
    auto slot_of = [&](double need) {
        for (std::size_t i = 0; i < nl; ++i)
            if (std::abs(lambda_grid[i] - need) < 1e-12) return i;
        throw std::logic_error("estimate_z: stencil point missing");
    };
    const std::size_t i08 = slot_of(0.8), i09 = slot_of(0.9), i11 = slot_of(1.1),
                      i12 = slot_of(1.2);

    std::vector<stats::RunningStat> z_acc(nl);
    stats::RunningStat rich;
    std::vector<stats::RunningStat> bin_acc(shape ? n_bins : 0);

    std::vector<double> zrow(nl);
    std::int64_t est_monotone_violations = 0;
    double est_max_abs_z1 = 0.0;
    Rng stream(seed_mix({seed, 0x2E7A}));
    for (std::int64_t rep = 0; rep < replicates; ++rep) {
        const auto& tau = taus[static_cast<std::size_t>(rep % taus.size())].tau;
        double xi[4];
        for (auto& x : xi) x = stream.exp1();
        double base = kInf;
        for (int i = 0; i < 4; ++i) base = std::min(base, tau[i] + xi[i]);
        for (std::size_t j = 0; j < nl; ++j) {
            double m = kInf;
            const double lam = lambda_grid[j];
            for (int i = 0; i < 4; ++i) m = std::min(m, tau[i] + xi[i] / lam);
            zrow[j] = m - base;
            z_acc[j].add(zrow[j]);
            if (j > 0 && zrow[j] > zrow[j - 1]) ++est_monotone_violations;
            if (std::abs(lam - 1.0) < 1e-12)
                est_max_abs_z1 = std::max(est_max_abs_z1, std::abs(zrow[j]));
        }
        const double d1 = (zrow[i11] - zrow[i09]) / 0.2;
        const double d2 = (zrow[i12] - zrow[i08]) / 0.4;
        const double rich_rep = (4.0 * d1 - d2) / 3.0;
        rich.add(rich_rep);
        if (shape) {
            const double u = stream.uniform01();
            const double v = shape->V(u);
            auto bin = static_cast<std::size_t>(u * n_bins);
            if (bin >= static_cast<std::size_t>(n_bins)) bin = n_bins - 1;
            bin_acc[bin].add(v * rich_rep);
        }
    }

    ZLambdaEstimate est;
    est.lambdas = lambda_grid;
    for (std::size_t j = 0; j < nl; ++j) {
        est.z.push_back(z_acc[j].mean());
        est.z_stderr.push_back(z_acc[j].stderr_mean());
    }
    est.zprime1 = rich.mean();
    est.zprime1_stderr = rich.stderr_mean();
    est.monotone_violations = est_monotone_violations;
    est.max_abs_z_at_1 = est_max_abs_z1;
    if (shape) {
        for (int b = 0; b < n_bins; ++b) {
            UBin bin;
            bin.lo = static_cast<double>(b) / n_bins;
            bin.hi = static_cast<double>(b + 1) / n_bins;
            bin.count = static_cast<std::int64_t>(bin_acc[b].count());
            bin.g = -bin_acc[b].mean();
            bin.g_stderr = bin_acc[b].stderr_mean();
            est.bins.push_back(bin);
        }
    }
    return est;
}

double nash_torus_nn(const RewardSpec& spec, const ShapeEstimate& shape,
                     const ZLambdaEstimate& z, int N) {
    (void)shape;
    if (N < 2) throw std::invalid_argument("nash_torus_nn: N >= 2");
    if (z.bins.empty())
        throw std::runtime_error("nash_torus_nn: estimate_z ran without u-bins");
    auto r_right = [&](double u) {
        if (u >= 1.0) return spec(1.0);
        return spec(std::min(u + 1e-12, 1.0));
    };
    double acc = 0.0;
    for (const auto& bin : z.bins) {
        if (bin.count == 0)
            throw std::runtime_error("nash_torus_nn: empty u-bin");
        const double mass = r_right(std::max(bin.lo, 0.0)) - r_right(bin.hi);
        acc += bin.g * mass;
    }
    return acc / static_cast<double>(N);
}

double uniform_rank_check(int N, std::int64_t replicates, std::uint64_t seed,
                          int threads) {
    if (N < 3 || replicates < 1)
        throw std::invalid_argument("uniform_rank_check: bad arguments");
    const double total = static_cast<double>(N) * N;
    std::vector<double> samples(replicates);
    parallel_for(replicates, threads, [&](std::int64_t rep) {
        // Wetting count the moment the fixed vertex first pulls the item from
        // a neighbor, i.e. the vertex's rank; uniform by exchangeability.
        auto run = torus_run(N, seed_mix({seed, 0x4E, static_cast<std::uint64_t>(rep)}),
                             0, false);
        samples[rep] = static_cast<double>(run.informed_at_stop) / total;
    });
    std::sort(samples.begin(), samples.end());
    return stats::ks_uniform_sorted(samples);
}

}  // namespace gossipfpp::lattice
