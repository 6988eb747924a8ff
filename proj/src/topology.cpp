#include "gossipfpp/topology.hpp"

#include <cmath>
#include <stdexcept>

namespace gossipfpp {

std::int64_t agent_count(const Topology& t) {
    return std::visit(
        [](const auto& v) -> std::int64_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Complete>)
                return v.n;
            else
                return static_cast<std::int64_t>(v.N) * v.N;
        },
        t);
}

std::string topology_name(const Topology& t) {
    struct Visitor {
        std::string operator()(const Complete&) const { return "complete"; }
        std::string operator()(const TorusNN&) const { return "torus_nn"; }
        std::string operator()(const TorusShortLong&) const { return "torus_short_long"; }
        std::string operator()(const TorusDistanceCost&) const { return "torus_distance_cost"; }
    };
    return std::visit(Visitor{}, t);
}

void validate(const Topology& t) {
    if (const auto* c = std::get_if<Complete>(&t)) {
        if (c->n < 2) throw std::invalid_argument("complete: need n >= 2");
    } else if (const auto* nn = std::get_if<TorusNN>(&t)) {
        if (nn->N < 2) throw std::invalid_argument("torus_nn: need N >= 2");
    } else if (const auto* sl = std::get_if<TorusShortLong>(&t)) {
        if (sl->N < 3)
            throw std::invalid_argument("torus_short_long: need N >= 3 (no non-neighbors otherwise)");
        if (!(sl->far_cost >= 1.0))
            throw std::invalid_argument("torus_short_long: need c_N >= 1");
    } else if (const auto* dc = std::get_if<TorusDistanceCost>(&t)) {
        if (dc->N < 2) throw std::invalid_argument("torus_distance_cost: need N >= 2");
        if (dc->cost.empty() || dc->cost.front() != 1.0)
            throw std::invalid_argument("torus_distance_cost: need c(1) = 1");
        for (std::size_t i = 1; i < dc->cost.size(); ++i)
            if (dc->cost[i] < dc->cost[i - 1])
                throw std::invalid_argument("torus_distance_cost: c(d) must be nondecreasing");
        const int d_max_possible = 2 * (dc->N / 2);
        if (static_cast<int>(dc->cost.size()) > d_max_possible)
            throw std::invalid_argument("torus_distance_cost: cost table exceeds torus diameter");
    }
}

double total_rate(const StrategyProfile& s) {
    if (const auto* sc = std::get_if<RateScalar>(&s)) return sc->theta;
    if (const auto* nf = std::get_if<RateNearFar>(&s)) return nf->near + nf->far;
    const auto& v = std::get<RateByDistance>(s).theta;
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum;
}

double strategy_cost(const Topology& t, const StrategyProfile& s) {
    if (std::holds_alternative<Complete>(t) || std::holds_alternative<TorusNN>(t))
        return std::get<RateScalar>(s).theta;
    if (const auto* sl = std::get_if<TorusShortLong>(&t)) {
        const auto& nf = std::get<RateNearFar>(s);
        return nf.near + sl->far_cost * nf.far;
    }
    const auto& dc = std::get<TorusDistanceCost>(t);
    const auto& v = std::get<RateByDistance>(s).theta;
    double sum = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) sum += v[d] * dc.cost[d];
    return sum;
}

namespace {

void check_rates_finite_nonneg(const StrategyProfile& s) {
    auto check = [](double x) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::invalid_argument("strategy: rates must be finite and >= 0");
    };
    if (const auto* sc = std::get_if<RateScalar>(&s)) {
        check(sc->theta);
    } else if (const auto* nf = std::get_if<RateNearFar>(&s)) {
        check(nf->near);
        check(nf->far);
    } else {
        for (double x : std::get<RateByDistance>(s).theta) check(x);
    }
}

}  // namespace

void validate(const Topology& t, const StrategyProfile& s) {
    validate(t);
    check_rates_finite_nonneg(s);
    const bool scalar_topology =
        std::holds_alternative<Complete>(t) || std::holds_alternative<TorusNN>(t);
    if (scalar_topology && !std::holds_alternative<RateScalar>(s))
        throw std::invalid_argument("strategy: expected a scalar rate for this topology");
    if (std::holds_alternative<TorusShortLong>(t) &&
        !std::holds_alternative<RateNearFar>(s))
        throw std::invalid_argument("strategy: expected (near, far) rates");
    if (const auto* dc = std::get_if<TorusDistanceCost>(&t)) {
        const auto* v = std::get_if<RateByDistance>(&s);
        if (!v) throw std::invalid_argument("strategy: expected per-distance rates");
        if (v->theta.empty() || v->theta.size() > dc->cost.size())
            throw std::invalid_argument("strategy: rate support exceeds cost table");
    }
    if (!(total_rate(s) > 0.0))
        throw std::invalid_argument("strategy: at least one rate must be positive");
}

void validate(const Topology& t, const StrategyProfile& s,
              const std::optional<EgoDeviation>& ego) {
    validate(t, s);
    if (!ego) return;
    if (ego->agent < 0 || ego->agent >= agent_count(t))
        throw std::invalid_argument("ego: agent id out of range");
    check_rates_finite_nonneg(ego->rates);
    if (ego->rates.index() != s.index())
        throw std::invalid_argument("ego: deviant rates must match the profile shape");
    if (const auto* dc = std::get_if<TorusDistanceCost>(&t)) {
        const auto& v = std::get<RateByDistance>(ego->rates);
        if (v.theta.size() > dc->cost.size())
            throw std::invalid_argument("ego: rate support exceeds cost table");
    }
}

int torus_distance(int N, std::int64_t a, std::int64_t b) {
    const int ax = static_cast<int>(a % N), ay = static_cast<int>(a / N);
    const int bx = static_cast<int>(b % N), by = static_cast<int>(b / N);
    int dx = std::abs(ax - bx);
    int dy = std::abs(ay - by);
    dx = std::min(dx, N - dx);
    dy = std::min(dy, N - dy);
    return dx + dy;
}

std::vector<std::pair<int, int>> torus_offsets_at_distance(int N, int d) {
    std::vector<std::pair<int, int>> out;
    for (int dx = 0; dx < N; ++dx) {
        for (int dy = 0; dy < N; ++dy) {
            if (dx == 0 && dy == 0) continue;
            const int ex = std::min(dx, N - dx);
            const int ey = std::min(dy, N - dy);
            if (ex + ey == d) out.emplace_back(dx, dy);
        }
    }
    return out;
}

}  // namespace gossipfpp
