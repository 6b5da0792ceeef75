#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectramatch {

inline constexpr int kMaxAmbient = 30;  // bit-pattern representation ceiling

/// A subset x of {1,...,n} stored as a bit pattern (bit i-1 <-> element i).
struct SubsetIndex {
    std::uint32_t bits = 0;
    int n = 0;
};

SubsetIndex make_subset(std::uint32_t bits, int n);

inline bool contains(const SubsetIndex& x, int element) {
    return element >= 1 && element <= x.n && ((x.bits >> (element - 1)) & 1u);
}

/// Coefficient sequences (lambda_n): explicit lists stored eagerly,
/// symbolic families evaluated lazily.
struct SequenceSpec {
    enum class Kind { Explicit, Constant, Power, Geometric, DenseRecurrent };
    Kind kind = Kind::Explicit;
    std::vector<double> values;  // Explicit only
    double c = 0.0;              // Constant
    double p = 0.0;              // Power: lambda_n = n^-p
    double r = 0.0;              // Geometric: lambda_n = r^n
    double bound = 0.0;          // DenseRecurrent: enumeration of (-bound, bound)

    double eval(std::uint64_t n) const;  // n is 1-based
    std::vector<double> prefix(std::uint64_t count) const;
    bool is_finite_explicit() const { return kind == Kind::Explicit; }
};

/// Sorted 2^k target reals on a grid: mu_1 <= ... <= mu_{2^k},
/// mu_{2^k} = -mu_1, every mu_i an exact multiple of delta, K = mu_{2^k}/delta.
struct TargetSpectrum {
    int k = 0;
    std::vector<double> mu;
    double delta = 0.0;
    long long bigK = 0;
    // Exact grid coordinates: mu[i] == mu_ticks[i] * delta.
    std::vector<long long> mu_ticks;

    int size() const { return 1 << k; }
    void validate() const;
};

/// Rebuild mu_ticks from mu/delta (used after deserialization).
void rederive_ticks(TargetSpectrum& t);

/// All node values mu_{j,i}, j = 0..k (level 0 = leaves), i = 1..2^{k-j}.
/// Node (j,i) is the midpoint of the extreme leaves of its subtree.
struct MidpointTree {
    int k = 0;
    std::vector<std::vector<double>> levels;          // levels[j][i-1]
    std::vector<std::vector<long long>> level_ticks;  // exact, in delta units
};

/// Times n_0 = 0 < n_1 < ... < n_k (even) and node indices i_0 = 1, i_1, ...
/// along a root-to-leaf descent; sides[j] = 0/1 records left/right at step j.
struct GoodPath {
    std::vector<int> n;
    std::vector<int> i;
    std::vector<int> sides;
    int leaf() const { return i.back(); }  // 1-based leaf index
};

/// One partition cell: 2^k members ordered by assigned slot, the assignment
/// onto mu positions, the raw-energy gauge offset C, and the pristine flag.
struct Block {
    std::vector<std::uint32_t> members;
    std::vector<int> assign;  // assign[j] = 1-based mu position of members[j]
    double offset = 0.0;
    bool pristine = true;
    // Exact raw-gauge offset in half-delta ticks: offset == offset_ticks2 * delta / 2.
    long long offset_ticks2 = 0;
};

struct Partition {
    int n = 0;
    TargetSpectrum target;
    std::vector<Block> blocks;
    std::uint64_t good_count = 0;
};

struct DefectReport {
    std::vector<double> per_block;
    double global_max = 0.0;
    double epsilon = 0.0;
    bool pass = false;
    bool structural_ok = true;
    std::string structural_message;
};

/// E(x) = sum_{i in x} lambda_i, compensated summation.
double energy(const SubsetIndex& x, const std::vector<double>& lambdas);

/// E_n(x) = (#{i in x | i <= n} - n/2) * delta (uniform-delta centered energy).
double centered_energy(const SubsetIndex& x, int n, double delta);

/// Same quantity in exact half-delta ticks: 2*#{i in x | i <= n} - n.
long long centered_energy_ticks2(std::uint32_t bits, int n);

struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct resource_exhausted_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace spectramatch
