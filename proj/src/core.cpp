#include "spectramatch/core.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace spectramatch {

SubsetIndex make_subset(std::uint32_t bits, int n) {
    if (n < 0 || n > kMaxAmbient) {
        throw std::invalid_argument("ambient size must be in [0, 30], got " + std::to_string(n));
    }
    if (n < 32 && bits >= (1u << n)) {
        throw std::invalid_argument("bit pattern has elements beyond the ambient size");
    }
    return SubsetIndex{bits, n};
}

double SequenceSpec::eval(std::uint64_t n) const {
    if (n == 0) throw std::invalid_argument("sequence index is 1-based");
    switch (kind) {
        case Kind::Explicit:
            if (n > values.size()) {
                throw std::invalid_argument("explicit sequence has no term " + std::to_string(n));
            }
            return values[n - 1];
        case Kind::Constant:
            return c;
        case Kind::Power:
            return std::pow(static_cast<double>(n), -p);
        case Kind::Geometric:
            return std::pow(r, static_cast<double>(n));
        case Kind::DenseRecurrent:
            break;
    }
    // Dense-recurrent schedule, block m = 1, 2, ...:
    //   bound/(2m) repeated m*m times, then the sweep j*bound/(m+1), j = -m..m.
    std::uint64_t idx = n - 1;
    for (std::uint64_t m = 1;; ++m) {
        std::uint64_t rep = m * m;
        if (idx < rep) return bound / (2.0 * static_cast<double>(m));
        idx -= rep;
        std::uint64_t sweep = 2 * m + 1;
        if (idx < sweep) {
            long long j = static_cast<long long>(idx) - static_cast<long long>(m);
            return static_cast<double>(j) * bound / static_cast<double>(m + 1);
        }
        idx -= sweep;
    }
}

std::vector<double> SequenceSpec::prefix(std::uint64_t count) const {
    std::vector<double> out;
    out.reserve(count);
    for (std::uint64_t n = 1; n <= count; ++n) out.push_back(eval(n));
    return out;
}

void TargetSpectrum::validate() const {
    if (k < 1) throw std::invalid_argument("target level k must be >= 1");
    const std::size_t m = std::size_t{1} << k;
    if (mu.size() != m) throw std::invalid_argument("target must have exactly 2^k entries");
    if (!(delta > 0)) throw std::invalid_argument("grid step delta must be positive");
    if (mu_ticks.size() != m) throw std::invalid_argument("target grid coordinates missing");
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (mu_ticks[i] > mu_ticks[i + 1]) throw std::invalid_argument("target values must be sorted");
    }
    if (mu_ticks.front() != -mu_ticks.back()) {
        throw std::invalid_argument("target must be centered: mu_max == -mu_min");
    }
    if (mu_ticks.back() != bigK) throw std::invalid_argument("K must equal mu_max/delta");
}

void rederive_ticks(TargetSpectrum& t) {
    t.mu_ticks.resize(t.mu.size());
    for (std::size_t i = 0; i < t.mu.size(); ++i) {
        double q = t.mu[i] / t.delta;
        long long ticks = std::llround(q);
        if (std::abs(q - static_cast<double>(ticks)) > 1e-6) {
            throw std::invalid_argument("target value is not a grid multiple of delta");
        }
        t.mu_ticks[i] = ticks;
    }
}

double energy(const SubsetIndex& x, const std::vector<double>& lambdas) {
    if (static_cast<std::size_t>(x.n) > lambdas.size()) {
        throw std::invalid_argument("ambient size exceeds coefficient list length");
    }
    double sum = 0.0, comp = 0.0;  // Kahan
    for (int i = 1; i <= x.n; ++i) {
        if (!contains(x, i)) continue;
        double y = lambdas[i - 1] - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double centered_energy(const SubsetIndex& x, int n, double delta) {
    if (n < 0 || n > x.n) throw std::invalid_argument("prefix length out of range");
    return static_cast<double>(centered_energy_ticks2(x.bits, n)) * delta / 2.0;
}

long long centered_energy_ticks2(std::uint32_t bits, int n) {
    std::uint32_t mask = (n >= 32) ? ~0u : ((1u << n) - 1u);
    int count = std::popcount(bits & mask);
    return 2LL * count - n;
}

}  // namespace spectramatch
