#include "qsdkit/errors.hpp"
#include "qsdkit/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace qsd {

InitialDistribution InitialDistribution::point(std::vector<long> x) {
    InitialDistribution d;
    std::string desc = "point(";
    for (std::size_t i = 0; i < x.size(); ++i) desc += (i ? "," : "") + std::to_string(x[i]);
    d.descriptor = desc + ")";
    d.states.push_back(std::move(x));
    d.weights.push_back(1.0);
    return d;
}

InitialDistribution InitialDistribution::from_oracle(const OracleResult& r) {
    InitialDistribution d;
    d.states = r.states;
    d.weights = r.u;
    d.descriptor = "oracle_qsd(N=" + std::to_string(r.N) + ")";
    return d;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1).
double open_uniform(std::mt19937_64& g) { return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53; }

} // namespace

SimStats gillespie_extinction(const ModelSpec& m, long N, const InitialDistribution& init, long replicates,
                              std::uint64_t seed, const SimOptions& o) {
    if (replicates < 1) throw Error(Errc::ConfigError, "replicates must be >= 1");
    if (init.states.empty() || init.states.size() != init.weights.size())
        throw Error(Errc::ConfigError, "initial distribution is empty or malformed");
    const int k = m.k();
    for (std::size_t i = 0; i < init.states.size(); ++i) {
        const auto& x = init.states[i];
        if (static_cast<int>(x.size()) != k) throw Error(Errc::InvalidState, "start state has the wrong dimension");
        Vector y(k);
        for (int c = 0; c < k; ++c) y(c) = static_cast<double>(x[static_cast<std::size_t>(c)]) / static_cast<double>(N);
        if (!m.in_domain(y)) throw Error(Errc::InvalidState, "start state outside the state space");
        if (!(init.weights[i] >= 0.0)) throw Error(Errc::ConfigError, "negative initial weight");
    }
    std::vector<double> cdf(init.weights.size());
    std::partial_sum(init.weights.begin(), init.weights.end(), cdf.begin());
    const double total_w = cdf.back();
    if (!(total_w > 0.0)) throw Error(Errc::ConfigError, "initial weights sum to zero");

    std::vector<double> times(static_cast<std::size_t>(replicates), 0.0);
    std::vector<char> aborted(static_cast<std::size_t>(replicates), 0);
    const double Nd = static_cast<double>(N);

    auto run_one = [&](long rep) {
        std::mt19937_64 g(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(rep))));
        const double pick = open_uniform(g) * total_w;
        auto at = std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin();
        std::vector<long> x = init.states[static_cast<std::size_t>(std::min<std::ptrdiff_t>(at, static_cast<std::ptrdiff_t>(cdf.size()) - 1))];
        Vector y(k);
        std::vector<double> rates(m.num_jumps());
        double t = 0.0;
        for (long ev = 0;; ++ev) {
            bool origin = std::all_of(x.begin(), x.end(), [](long v) { return v == 0; });
            if (origin) break;
            if (ev >= o.max_events) {
                aborted[static_cast<std::size_t>(rep)] = 1;
                break;
            }
            for (int i = 0; i < k; ++i) y(i) = static_cast<double>(x[static_cast<std::size_t>(i)]) / Nd;
            double total = 0.0;
            for (std::size_t j = 0; j < rates.size(); ++j) {
                rates[j] = std::max(0.0, Nd * m.rate(j, y));
                total += rates[j];
            }
            if (!(total > 0.0)) {
                aborted[static_cast<std::size_t>(rep)] = 1;
                break;
            }
            t -= std::log(open_uniform(g)) / total;
            double target = open_uniform(g) * total;
            std::size_t j = 0;
            for (; j + 1 < rates.size(); ++j) {
                if (target < rates[j]) break;
                target -= rates[j];
            }
            while (rates[j] == 0.0 && j > 0) --j; // guard against round-off landing on a dead jump
            for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(i)] += m.jump(j).components[static_cast<std::size_t>(i)];
        }
        times[static_cast<std::size_t>(rep)] = t;
    };

    unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<long>(threads, replicates));
    std::atomic<long> next{0};
    auto worker = [&] {
        for (long r = next++; r < replicates; r = next++) run_one(r);
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    SimStats s;
    s.replicates = replicates;
    s.seed = seed;
    s.descriptor = init.descriptor;
    std::vector<double> done;
    done.reserve(times.size());
    for (std::size_t r = 0; r < times.size(); ++r) {
        if (aborted[r])
            ++s.aborted;
        else
            done.push_back(times[r]);
    }
    const double n = static_cast<double>(done.size());
    if (!done.empty()) {
        double sum = 0.0;
        for (double t : done) sum += t;
        s.mean = sum / n;
        double ss = 0.0;
        for (double t : done) ss += (t - s.mean) * (t - s.mean);
        s.std_error = done.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
    if (o.keep_times) s.times = std::move(done);
    return s;
}

} // namespace qsd
