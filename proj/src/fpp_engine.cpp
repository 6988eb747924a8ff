#include "gossipfpp/fpp_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "gossipfpp/parallel.hpp"
#include "gossipfpp/rng.hpp"
#include "gossipfpp/stats.hpp"

namespace gossipfpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kTagMain = 1, kTagEgo = 2, kTagVertex = 3;

struct EngineResult {
    std::vector<double> times;
    std::int64_t source = -1;
    std::int64_t informed = 0;
    std::int64_t stop_rank = -1;  // informing order of the stop agent
    double stop_time = kInf;
};

inline int nb(int N, int v, int dir) {
    int x = v % N, y = v / N;
    switch (dir) {
        case 0: x = (x + 1 == N) ? 0 : x + 1; break;
        case 1: x = (x == 0) ? N - 1 : x - 1; break;
        case 2: y = (y + 1 == N) ? 0 : y + 1; break;
        default: y = (y == 0) ? N - 1 : y - 1; break;
    }
    return y * N + x;
}

constexpr int opposite(int dir) { return dir ^ 1; }

// Complete graph: an uninformed agent with call rate x is informed at rate
// x * m / (n-1) when m agents are informed. The race among non-ego agents is
// aggregated (they are exchangeable); ego runs on its own hazard clock so
// that ego's rate never touches the substrate's random stream.
EngineResult run_complete(std::int64_t n, double theta, std::int64_t ego,
                          double phi, std::uint64_t seed,
                          std::int64_t stop_agent, bool record_times) {
    Rng rng_a(seed_mix({seed, kTagMain}));
    Rng rng_e(seed_mix({seed, kTagEgo}));

    EngineResult res;
    if (record_times) res.times.assign(n, kInf);

    const std::int64_t source = static_cast<std::int64_t>(rng_a.below(n));
    res.source = source;
    const bool has_ego = ego >= 0;
    bool ego_informed = false;

    std::vector<std::int64_t> pool;
    pool.reserve(n - 1);
    for (std::int64_t id = 0; id < n; ++id)
        if (id != source && id != ego) pool.push_back(id);

    double t = 0.0;
    std::int64_t m = 1;
    if (record_times) res.times[source] = 0.0;
    if (has_ego && source == ego) ego_informed = true;
    res.informed = 1;
    if (source == stop_agent) {
        res.stop_rank = 1;
        res.stop_time = 0.0;
        return res;
    }

    const double denom = static_cast<double>(n - 1);
    double rem_o = rng_a.exp1();
    double rem_e = (has_ego && !ego_informed) ? rng_e.exp1() : 0.0;

    while (!pool.empty() || (has_ego && !ego_informed)) {
        const double k = static_cast<double>(pool.size());
        const double r_o = theta * k * static_cast<double>(m) / denom;
        const double r_e =
            (has_ego && !ego_informed) ? phi * static_cast<double>(m) / denom : 0.0;
        const double dt_o = r_o > 0.0 ? rem_o / r_o : kInf;
        const double dt_e = r_e > 0.0 ? rem_e / r_e : kInf;
        if (dt_o == kInf && dt_e == kInf) break;

        if (dt_o <= dt_e) {
            t += dt_o;
            rem_e -= r_e * dt_o;
            const auto idx = static_cast<std::size_t>(rng_a.below(pool.size()));
            const std::int64_t id = pool[idx];
            pool[idx] = pool.back();
            pool.pop_back();
            if (record_times) res.times[id] = t;
            ++m;
            ++res.informed;
            rem_o = rng_a.exp1();
            if (id == stop_agent) {
                res.stop_rank = res.informed;
                res.stop_time = t;
                return res;
            }
        } else {
            t += dt_e;
            rem_o -= r_o * dt_e;
            if (record_times) res.times[ego] = t;
            ego_informed = true;
            ++m;
            ++res.informed;
            if (ego == stop_agent) {
                res.stop_rank = res.informed;
                res.stop_time = t;
                return res;
            }
        }
    }
    return res;
}

// Nearest-neighbor torus: Dijkstra over directed in-edges with weights
// Exponential(rate_v / 4), where rate_v is the receiving agent's call rate.
// Each vertex draws its four in-edge variables from its own stream, so
// scaling ego's rate rescales only ego's in-edges.
EngineResult run_torus_nn(int N, double theta, std::int64_t ego, double phi,
                          std::uint64_t seed, std::int64_t stop_agent,
                          bool record_times) {
    const std::int64_t total = static_cast<std::int64_t>(N) * N;
    Rng rng_a(seed_mix({seed, kTagMain}));

    std::vector<double> ew(static_cast<std::size_t>(total) * 4);
    std::vector<char> drawn(total, 0);
    auto edge_weight = [&](std::int64_t v, int dir) {
        if (!drawn[v]) {
            SmallRng sr(seed_mix({seed, kTagVertex, static_cast<std::uint64_t>(v)}));
            for (int d = 0; d < 4; ++d) ew[v * 4 + d] = sr.exp1();
            drawn[v] = 1;
        }
        const double rate = (v == ego ? phi : theta);
        return 4.0 * ew[v * 4 + dir] / rate;  // +inf when rate == 0
    };

    std::vector<double> dist(total, kInf);
    std::vector<char> settled(total, 0);
    using Item = std::pair<double, std::int64_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

    const std::int64_t source = static_cast<std::int64_t>(rng_a.below(total));
    dist[source] = 0.0;
    heap.push({0.0, source});

    EngineResult res;
    res.source = source;
    if (record_times) res.times.assign(total, kInf);

    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (settled[v]) continue;
        settled[v] = 1;
        ++res.informed;
        if (record_times) res.times[v] = d;
        if (v == stop_agent) {
            res.stop_rank = res.informed;
            res.stop_time = d;
            return res;
        }
        for (int dir = 0; dir < 4; ++dir) {
            const std::int64_t w = nb(N, static_cast<int>(v), dir);
            if (settled[w]) continue;
            // w pulls from v across w's in-edge pointing back at v.
            const double cand = d + edge_weight(w, opposite(dir));
            if (cand < dist[w]) {
                dist[w] = cand;
                heap.push({cand, w});
            }
        }
    }
    return res;
}

// Short-long torus: near channel kept as an explicit list of directed
// boundary entries (uninformed agent, informed neighbor); far channel
// aggregated, with rejection sampling of the receiving agent. Ego runs on a
// separate hazard clock as in the complete-graph engine.
EngineResult run_short_long(int N, double theta_n, double theta_f,
                            std::int64_t ego, double phi_n, double phi_f,
                            std::uint64_t seed, std::int64_t stop_agent,
                            bool record_times) {
    const std::int64_t total = static_cast<std::int64_t>(N) * N;
    const double nonnb = static_cast<double>(total - 5);
    Rng rng_a(seed_mix({seed, kTagMain}));
    Rng rng_e(seed_mix({seed, kTagEgo}));

    EngineResult res;
    if (record_times) res.times.assign(total, kInf);

    std::vector<char> informed(total, 0);
    std::vector<std::uint8_t> inbr(total, 0);
    std::vector<std::int32_t> uo;  // uninformed agents other than ego
    std::vector<std::int32_t> pos_uo(total, -1);
    std::vector<std::int32_t> entries;  // packed v*4+dir, v uninformed non-ego
    std::vector<std::int32_t> pos_ne(static_cast<std::size_t>(total) * 4, -1);

    const bool has_ego = ego >= 0;
    bool ego_informed = false;
    std::int64_t m = 0;
    double t = 0.0;

    auto add_entry = [&](std::int64_t v, int dir) {
        const auto key = static_cast<std::size_t>(v) * 4 + dir;
        pos_ne[key] = static_cast<std::int32_t>(entries.size());
        entries.push_back(static_cast<std::int32_t>(key));
    };
    auto remove_entries_of = [&](std::int64_t v) {
        for (int dir = 0; dir < 4; ++dir) {
            const auto key = static_cast<std::size_t>(v) * 4 + dir;
            const auto p = pos_ne[key];
            if (p < 0) continue;
            const auto last = entries.back();
            entries[p] = last;
            pos_ne[last] = p;
            entries.pop_back();
            pos_ne[key] = -1;
        }
    };

    std::int64_t stop_rank = -1;
    auto inform = [&](std::int64_t v) {
        informed[v] = 1;
        ++m;
        ++res.informed;
        if (record_times) res.times[v] = t;
        if (v != ego) {
            const auto p = pos_uo[v];
            if (p >= 0) {
                const auto last = uo.back();
                uo[static_cast<std::size_t>(p)] = last;
                pos_uo[last] = p;
                uo.pop_back();
                pos_uo[v] = -1;
            }
            remove_entries_of(v);
        }
        for (int dir = 0; dir < 4; ++dir) {
            const std::int64_t w = nb(N, static_cast<int>(v), dir);
            ++inbr[w];
            if (!informed[w] && w != ego) add_entry(w, opposite(dir));
        }
        if (v == stop_agent) stop_rank = res.informed;
    };

    const std::int64_t source = static_cast<std::int64_t>(rng_a.below(total));
    res.source = source;
    for (std::int64_t v = 0; v < total; ++v) {
        if (v == ego || v == source) continue;
        pos_uo[v] = static_cast<std::int32_t>(uo.size());
        uo.push_back(static_cast<std::int32_t>(v));
    }
    if (has_ego && source == ego) ego_informed = true;
    inform(source);
    if (stop_rank >= 0) {
        res.stop_rank = stop_rank;
        res.stop_time = t;
        return res;
    }

    double rem_o = rng_a.exp1();
    double rem_e = (has_ego && !ego_informed) ? rng_e.exp1() : 0.0;

    while (!uo.empty() || (has_ego && !ego_informed)) {
        const double r_near = 0.25 * theta_n * static_cast<double>(entries.size());
        double r_far = theta_f / nonnb *
                       (static_cast<double>(uo.size()) * static_cast<double>(m) -
                        static_cast<double>(entries.size()));
        if (r_far < 0.0) r_far = 0.0;
        const double r_o = r_near + r_far;
        double r_e = 0.0;
        if (has_ego && !ego_informed) {
            r_e = 0.25 * phi_n * static_cast<double>(inbr[ego]) +
                  phi_f / nonnb * static_cast<double>(m - inbr[ego]);
        }
        const double dt_o = r_o > 0.0 ? rem_o / r_o : kInf;
        const double dt_e = r_e > 0.0 ? rem_e / r_e : kInf;
        if (dt_o == kInf && dt_e == kInf) break;

        if (dt_o <= dt_e) {
            t += dt_o;
            rem_e -= r_e * dt_o;
            std::int64_t v;
            if (rng_a.uniform01() * r_o < r_near) {
                v = entries[rng_a.below(entries.size())] >> 2;
            } else {
                // Receiving agent drawn proportional to its informed
                // non-neighbor count, by rejection against the bound m.
                for (;;) {
                    v = uo[rng_a.below(uo.size())];
                    const double acc =
                        static_cast<double>(m - inbr[v]) / static_cast<double>(m);
                    if (rng_a.uniform01() < acc) break;
                }
            }
            inform(v);
            rem_o = rng_a.exp1();
        } else {
            t += dt_e;
            rem_o -= r_o * dt_e;
            ego_informed = true;
            inform(ego);
        }
        if (stop_rank >= 0) {
            res.stop_rank = stop_rank;
            res.stop_time = t;
            return res;
        }
    }
    return res;
}

struct Fenwick {
    std::vector<double> tree;
    int n = 0;

    void init(int size) {
        n = size;
        tree.assign(static_cast<std::size_t>(n) + 1, 0.0);
    }
    void add(int i, double delta) {
        for (++i; i <= n; i += i & -i) tree[i] += delta;
    }
    double total() const {
        double s = 0.0;
        for (int i = n; i > 0; i -= i & -i) s += tree[i];
        return s;
    }
    // Smallest index whose prefix sum exceeds x.
    int find(double x) const {
        int pos = 0;
        int mask = 1;
        while ((mask << 1) <= n) mask <<= 1;
        for (; mask > 0; mask >>= 1) {
            const int next = pos + mask;
            if (next <= n && tree[next] <= x) {
                pos = next;
                x -= tree[next];
            }
        }
        return pos;  // 0-based
    }
};

// Distance-cost torus: per-agent receipt rates sum(theta_v(d) * I_d(v) / n_d)
// maintained in a Fenwick tree; informing an agent updates the rates of all
// agents within the strategy's distance support.
EngineResult run_distance_cost(int N, const std::vector<double>& theta,
                               std::int64_t ego, const std::vector<double>& phi,
                               std::uint64_t seed, std::int64_t stop_agent,
                               bool record_times) {
    const std::int64_t total = static_cast<std::int64_t>(N) * N;
    Rng rng_a(seed_mix({seed, kTagMain}));
    Rng rng_e(seed_mix({seed, kTagEgo}));

    const bool has_ego = ego >= 0;
    const std::size_t d_max = std::max(theta.size(), has_ego ? phi.size() : 0);
    std::vector<std::vector<std::pair<int, int>>> offsets(d_max + 1);
    std::vector<double> inv_nd(d_max + 1, 0.0);
    for (std::size_t d = 1; d <= d_max; ++d) {
        offsets[d] = torus_offsets_at_distance(N, static_cast<int>(d));
        if (offsets[d].empty())
            throw std::invalid_argument("distance_cost: no vertices at some distance in support");
        inv_nd[d] = 1.0 / static_cast<double>(offsets[d].size());
    }
    auto rate_of = [&](const std::vector<double>& v, std::size_t d) {
        return d <= v.size() && d >= 1 ? v[d - 1] : 0.0;
    };

    EngineResult res;
    if (record_times) res.times.assign(total, kInf);

    std::vector<char> informed(total, 0);
    std::vector<double> rate(total, 0.0);
    Fenwick fen;
    fen.init(static_cast<int>(total));
    double r_e = 0.0;
    bool ego_informed = false;
    std::int64_t m = 0;
    std::int64_t live = 0;  // uninformed non-ego vertices with positive rate
    double t = 0.0;
    std::int64_t stop_rank = -1;

    auto inform = [&](std::int64_t w) {
        informed[w] = 1;
        ++m;
        ++res.informed;
        if (record_times) res.times[w] = t;
        if (w != ego) {
            if (rate[w] > 0.0) --live;
            fen.add(static_cast<int>(w), -rate[w]);
            rate[w] = 0.0;
        }
        const int wx = static_cast<int>(w) % N, wy = static_cast<int>(w) / N;
        for (std::size_t d = 1; d <= d_max; ++d) {
            for (const auto& [dx, dy] : offsets[d]) {
                const int vx = wx + dx >= N ? wx + dx - N : wx + dx;
                const int vy = wy + dy >= N ? wy + dy - N : wy + dy;
                const std::int64_t v = static_cast<std::int64_t>(vy) * N + vx;
                if (informed[v]) continue;
                if (v == ego) {
                    r_e += rate_of(phi, d) * inv_nd[d];
                } else {
                    const double delta = rate_of(theta, d) * inv_nd[d];
                    if (delta > 0.0) {
                        if (rate[v] == 0.0) ++live;
                        rate[v] += delta;
                        fen.add(static_cast<int>(v), delta);
                    }
                }
            }
        }
        if (w == stop_agent) stop_rank = res.informed;
    };

    const std::int64_t source = static_cast<std::int64_t>(rng_a.below(total));
    res.source = source;
    if (has_ego && source == ego) ego_informed = true;
    inform(source);
    if (stop_rank >= 0) {
        res.stop_rank = stop_rank;
        res.stop_time = t;
        return res;
    }

    double rem_o = rng_a.exp1();
    double rem_e = (has_ego && !ego_informed) ? rng_e.exp1() : 0.0;

    while (res.informed < total) {
        const double r_o = live > 0 ? std::max(fen.total(), 0.0) : 0.0;
        const double re = (has_ego && !ego_informed) ? r_e : 0.0;
        const double dt_o = r_o > 0.0 ? rem_o / r_o : kInf;
        const double dt_e = re > 0.0 ? rem_e / re : kInf;
        if (dt_o == kInf && dt_e == kInf) break;

        if (dt_o <= dt_e) {
            t += dt_o;
            rem_e -= re * dt_o;
            std::int64_t v;
            for (;;) {
                v = fen.find(rng_a.uniform01() * r_o);
                if (v < total && !informed[v] && rate[v] > 0.0) break;
            }
            inform(v);
            rem_o = rng_a.exp1();
        } else {
            t += dt_e;
            rem_o -= r_o * dt_e;
            ego_informed = true;
            inform(ego);
        }
        if (stop_rank >= 0) {
            res.stop_rank = stop_rank;
            res.stop_time = t;
            return res;
        }
    }
    return res;
}

EngineResult run_engine(const Topology& topology, const StrategyProfile& profile,
                        const std::optional<EgoDeviation>& ego, std::uint64_t seed,
                        std::int64_t stop_agent, bool record_times) {
    const std::int64_t ego_id = ego ? ego->agent : -1;
    if (const auto* c = std::get_if<Complete>(&topology)) {
        const double theta = std::get<RateScalar>(profile).theta;
        const double phi = ego ? std::get<RateScalar>(ego->rates).theta : 0.0;
        return run_complete(c->n, theta, ego_id, phi, seed, stop_agent, record_times);
    }
    if (const auto* nn = std::get_if<TorusNN>(&topology)) {
        const double theta = std::get<RateScalar>(profile).theta;
        const double phi = ego ? std::get<RateScalar>(ego->rates).theta : theta;
        return run_torus_nn(nn->N, theta, ego_id, phi, seed, stop_agent, record_times);
    }
    if (const auto* sl = std::get_if<TorusShortLong>(&topology)) {
        const auto& th = std::get<RateNearFar>(profile);
        const double pn = ego ? std::get<RateNearFar>(ego->rates).near : 0.0;
        const double pf = ego ? std::get<RateNearFar>(ego->rates).far : 0.0;
        return run_short_long(sl->N, th.near, th.far, ego_id, pn, pf, seed,
                              stop_agent, record_times);
    }
    const auto& dc = std::get<TorusDistanceCost>(topology);
    const auto& th = std::get<RateByDistance>(profile).theta;
    static const std::vector<double> kEmpty;
    const auto& ph = ego ? std::get<RateByDistance>(ego->rates).theta : kEmpty;
    return run_distance_cost(dc.N, th, ego_id, ph, seed, stop_agent, record_times);
}

}  // namespace

RunResult percolate(const Topology& topology, const StrategyProfile& profile,
                    const std::optional<EgoDeviation>& ego, std::uint64_t seed) {
    validate(topology, profile, ego);
    EngineResult er = run_engine(topology, profile, ego, seed, -1, true);
    RunResult rr;
    rr.receipt = std::move(er.times);
    rr.source = er.source;
    rr.seed = seed;
    const auto n = rr.receipt.size();
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Ties (floating-point coincidences only) break by agent index.
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (rr.receipt[a] != rr.receipt[b]) return rr.receipt[a] < rr.receipt[b];
        return a < b;
    });
    rr.rank.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) rr.rank[order[i]] = static_cast<std::int64_t>(i) + 1;
    return rr;
}

TargetOutcome percolate_rank_of(const Topology& topology,
                                const StrategyProfile& profile,
                                const std::optional<EgoDeviation>& ego,
                                std::uint64_t seed, std::int64_t target) {
    validate(topology, profile, ego);
    if (target < 0 || target >= agent_count(topology))
        throw std::invalid_argument("percolate_rank_of: target out of range");
    EngineResult er = run_engine(topology, profile, ego, seed, target, false);
    if (er.stop_rank < 0) return {agent_count(topology), kInf};
    return {er.stop_rank, er.stop_time};
}

void RunResult::write_csv(std::ostream& os) const {
    os << "agent,receipt_time,rank\n";
    char buf[80];
    for (std::size_t i = 0; i < receipt.size(); ++i) {
        const int len = std::snprintf(buf, sizeof(buf), "%lld,%.17g,%lld\n",
                                      static_cast<long long>(i), receipt[i],
                                      static_cast<long long>(rank[i]));
        os.write(buf, len);
    }
}

double SpreadStats::quantile(double q) const {
    return stats::quantile_sorted(sorted_times, q);
}

double SpreadStats::cdf(double t) const {
    const auto it = std::upper_bound(sorted_times.begin(), sorted_times.end(), t);
    return static_cast<double>(it - sorted_times.begin()) /
           static_cast<double>(sorted_times.size());
}

SpreadStats spread_stats(const RunResult& run, double lo, double hi) {
    if (!(lo > 0.0 && lo < hi && hi < 1.0))
        throw std::invalid_argument("spread_stats: need 0 < lo < hi < 1");
    SpreadStats s;
    s.sorted_times = run.receipt;
    std::sort(s.sorted_times.begin(), s.sorted_times.end());
    s.lo = lo;
    s.hi = hi;
    s.width = s.quantile(hi) - s.quantile(lo);
    return s;
}

std::vector<double> ego_rank_distribution(const Topology& topology,
                                          const StrategyProfile& profile,
                                          const EgoDeviation& ego,
                                          std::int64_t replicates,
                                          std::uint64_t seed, int threads) {
    if (replicates < 1)
        throw std::invalid_argument("ego_rank_distribution: replicates >= 1");
    validate(topology, profile, std::optional<EgoDeviation>(ego));
    const double n = static_cast<double>(agent_count(topology));
    std::vector<double> out(replicates);
    parallel_for(replicates, threads, [&](std::int64_t rep) {
        const std::uint64_t s = seed_mix({seed, 0xE60u, static_cast<std::uint64_t>(rep)});
        const auto outcome =
            percolate_rank_of(topology, profile, ego, s, ego.agent);
        out[rep] = static_cast<double>(outcome.rank) / n;
    });
    return out;
}

}  // namespace gossipfpp
