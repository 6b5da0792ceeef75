#include "spectramatch/matcher.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace spectramatch {

namespace {

long long gcd_ll(long long a, long long b) {
    while (b) {
        long long t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// Positions a+1, ..., b as a bit mask.
std::uint32_t segment_mask(int a, int b) {
    std::uint32_t hi = (b >= 32) ? ~0u : ((1u << b) - 1u);
    std::uint32_t lo = (a >= 32) ? ~0u : ((1u << a) - 1u);
    return hi ^ lo;
}

long long tick_of(std::uint32_t bits, int n) {
    return std::popcount(bits) - static_cast<long long>(n / 2);
}

int worker_count(std::uint64_t items) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("SPECTRAMATCH_THREADS")) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    std::uint64_t chunks = items / 65536;
    if (chunks < 1) chunks = 1;
    return static_cast<int>(std::min<std::uint64_t>(hw, chunks));
}

struct Detection {
    bool complete = false;
    std::array<std::uint8_t, 16> half_time{};  // n_j / 2 for step j = 1..k
    std::uint32_t sides = 0;                   // bit (j-1) = side taken at step j
};

Detection detect(std::uint32_t bits, int n, const AnchorTree& at) {
    Detection d;
    const int k = at.k;
    int depth = 0, node = 0, c = 0;
    long long lo = at.anchors[1][0];
    long long hi = at.anchors[1][1];
    for (int pos = 1; pos <= n; ++pos) {
        c += (bits >> (pos - 1)) & 1u;
        if (pos & 1) continue;
        long long t = c - pos / 2;
        int side;
        if (t == lo) {
            side = 0;
        } else if (t == hi) {
            side = 1;
        } else {
            continue;
        }
        d.half_time[depth] = static_cast<std::uint8_t>(pos / 2);
        d.sides |= static_cast<std::uint32_t>(side) << depth;
        node = 2 * node + side;
        ++depth;
        if (depth == k) {
            d.complete = true;
            return d;
        }
        lo = at.anchors[depth + 1][2 * node];
        hi = at.anchors[depth + 1][2 * node + 1];
    }
    return d;
}

GoodPath to_path(const Detection& det, int k) {
    GoodPath p;
    p.n.resize(k + 1);
    p.i.resize(k + 1);
    p.sides.resize(k);
    p.n[0] = 0;
    p.i[0] = 1;
    int node = 0;
    for (int j = 1; j <= k; ++j) {
        int side = (det.sides >> (j - 1)) & 1u;
        node = 2 * node + side;
        p.n[j] = 2 * det.half_time[j - 1];
        p.i[j] = node + 1;
        p.sides[j - 1] = side;
    }
    return p;
}

// Paper-tree node values by depth, in doubled ticks (sums of two leaf ticks).
std::vector<std::vector<long long>> node_sums(const TargetSpectrum& t) {
    const int k = t.k;
    std::vector<std::vector<long long>> sums(k + 1);
    for (int d = 0; d <= k; ++d) {
        int span = 1 << (k - d);
        int count = 1 << d;
        sums[d].resize(count);
        for (int i = 0; i < count; ++i) {
            sums[d][i] = t.mu_ticks[i * span] + t.mu_ticks[(i + 1) * span - 1];
        }
    }
    return sums;
}

std::uint32_t pair_mask(const Detection& det, int k) {
    int a = (k >= 2) ? 2 * det.half_time[k - 2] : 0;
    int b = 2 * det.half_time[k - 1];
    return segment_mask(a, b);
}

}  // namespace

TargetSpectrum normalize_targets(const std::vector<double>& raw, double epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    std::size_t sz = raw.size();
    int k = 0;
    while ((std::size_t{1} << k) < sz) ++k;
    if (sz < 2 || (std::size_t{1} << k) != sz) {
        throw std::invalid_argument("target must have 2^k entries for some k >= 1");
    }
    for (double v : raw) {
        if (!std::isfinite(v)) throw std::invalid_argument("target values must be finite");
    }
    std::vector<double> sorted = raw;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw std::invalid_argument("degenerate target: all entries equal");
    }

    double mid = (sorted.front() + sorted.back()) / 2.0;
    double big = sorted.back() - mid;  // centered maximum M > 0

    double delta0 = epsilon / 3.0;
    long long q = static_cast<long long>(std::ceil(big / delta0 - 1e-9));
    if (q < 1) q = 1;
    if (q > 10000) {
        throw std::invalid_argument("tolerance too fine: grid count K exceeds 10^4");
    }

    // Snap on the 2^k-refined grid h = (M/q)/2^k; ties round away from zero.
    const double h = big / static_cast<double>(q) / static_cast<double>(1 << k);
    std::vector<long long> t(sz);
    for (std::size_t i = 0; i < sz; ++i) {
        t[i] = std::llround((sorted[i] - mid) / h);
    }
    std::sort(t.begin(), t.end());
    long long full = q * (1LL << k);
    if (t.front() != -full || t.back() != full) {
        throw std::runtime_error("internal: snapped extremes lost centering");
    }

    // Coarsen back as far as the values and all midpoint-tree nodes allow.
    long long g = 1LL << (k + 1);  // f-units per delta0', f = h/2
    for (long long v : t) g = gcd_ll(g, std::llabs(2 * v));
    for (int j = 1; j <= k; ++j) {
        int span = 1 << j;
        for (std::size_t i = 0; i + span <= sz; i += span) {
            g = gcd_ll(g, std::llabs(t[i] + t[i + span - 1]));  // node value in f-units
        }
    }
    if (g == 0) g = 1;

    TargetSpectrum out;
    out.k = k;
    out.delta = big / static_cast<double>(q) * static_cast<double>(g) /
                static_cast<double>(1LL << (k + 1));
    out.mu_ticks.resize(sz);
    out.mu.resize(sz);
    for (std::size_t i = 0; i < sz; ++i) {
        out.mu_ticks[i] = 2 * t[i] / g;
        out.mu[i] = static_cast<double>(out.mu_ticks[i]) * out.delta;
    }
    out.bigK = out.mu_ticks.back();
    if (out.bigK > 4000000) {
        throw std::invalid_argument("tolerance too fine: refined grid count exceeds 4*10^6");
    }
    out.validate();
    return out;
}

MidpointTree midpoint_tree(const TargetSpectrum& target) {
    target.validate();
    const int k = target.k;
    MidpointTree tree;
    tree.k = k;
    tree.levels.resize(k + 1);
    tree.level_ticks.resize(k + 1);
    for (int j = 0; j <= k; ++j) {
        int span = 1 << j;
        int count = 1 << (k - j);
        tree.levels[j].resize(count);
        tree.level_ticks[j].resize(count);
        for (int i = 0; i < count; ++i) {
            long long sum = target.mu_ticks[i * span] + target.mu_ticks[(i + 1) * span - 1];
            if (sum % 2 != 0) {
                throw std::invalid_argument("midpoint-tree node falls off the delta grid");
            }
            tree.level_ticks[j][i] = sum / 2;
            tree.levels[j][i] = static_cast<double>(sum / 2) * target.delta;
        }
    }
    if (tree.level_ticks[k][0] != 0) {
        throw std::runtime_error("internal: midpoint-tree root nonzero");
    }
    return tree;
}

AnchorTree anchor_tree(const TargetSpectrum& target) {
    target.validate();
    const int k = target.k;
    auto sums = node_sums(target);  // doubled ticks, indexed by depth

    AnchorTree at;
    at.k = k;
    at.max_abs_target = target.bigK;

    // Uniform-gap test: one gap per depth, every node's children symmetric.
    std::vector<long long> gaps2(k + 1, 0);
    bool uniform = true;
    for (int d = 1; d <= k && uniform; ++d) {
        long long g2 = sums[d][1] - sums[d - 1][0];
        if (g2 < 0 || g2 % 4 != 0) {
            // Anchor gaps live on the tick grid: doubled ticks must be even.
            uniform = false;
            break;
        }
        gaps2[d] = g2;
        for (int i = 0; i < (1 << (d - 1)); ++i) {
            if (sums[d][2 * i] != sums[d - 1][i] - g2 || sums[d][2 * i + 1] != sums[d - 1][i] + g2) {
                uniform = false;
                break;
            }
        }
    }
    at.uniform_gaps = uniform;

    at.anchors.resize(k + 1);
    at.anchors[0] = {0};
    if (uniform) {
        for (int d = 1; d <= k; ++d) {
            long long g = gaps2[d] / 2;
            at.anchors[d].resize(std::size_t{1} << d);
            for (int i = 0; i < (1 << (d - 1)); ++i) {
                at.anchors[d][2 * i] = at.anchors[d - 1][i] - g;
                at.anchors[d][2 * i + 1] = at.anchors[d - 1][i] + g;
            }
        }
        if (at.anchors[k] != std::vector<long long>(target.mu_ticks.begin(), target.mu_ticks.end())) {
            throw std::runtime_error("internal: uniform anchor leaves disagree with targets");
        }
        return at;
    }

    // General targets: symmetrized anchors. Interior gaps follow the midpoint
    // tree as closely as the grid allows; leaf gaps are exact so that sibling
    // leaf pairs land with a common gauge offset.
    for (int d = 1; d <= k; ++d) {
        at.anchors[d].resize(std::size_t{1} << d);
        for (int i = 0; i < (1 << (d - 1)); ++i) {
            long long a = at.anchors[d - 1][i];
            long long g;
            if (d == k) {
                long long diff = target.mu_ticks[2 * i + 1] - target.mu_ticks[2 * i];
                if (diff % 2 != 0) {
                    throw std::invalid_argument("leaf pair gap falls off the delta grid");
                }
                g = diff / 2;
            } else {
                long long spread = sums[d][2 * i + 1] - sums[d][2 * i];  // doubled ticks
                g = (spread + 2) / 4;                                    // round to ticks
                if (g < 1) g = 1;
            }
            at.anchors[d][2 * i] = a - g;
            at.anchors[d][2 * i + 1] = a + g;
        }
    }
    return at;
}

std::optional<GoodPath> good_path(const SubsetIndex& x, const MidpointTree& tree,
                                  const TargetSpectrum& target) {
    if (tree.k != target.k) throw std::invalid_argument("tree and target level mismatch");
    AnchorTree at = anchor_tree(target);
    Detection det = detect(x.bits, x.n, at);
    if (!det.complete) return std::nullopt;
    return to_path(det, target.k);
}

SubsetIndex reflect(const SubsetIndex& x, const GoodPath& path, int m) {
    const int k = static_cast<int>(path.sides.size());
    if (m < 0 || m >= k) throw std::invalid_argument("reflection node depth out of range");
    for (int j = m + 2; j <= k; ++j) {
        if (path.sides[j - 1] != path.sides[m]) {
            throw std::invalid_argument("reflection requires monotone path values below the node");
        }
    }
    std::uint32_t mask = segment_mask(path.n[m], path.n[k]);
    return SubsetIndex{x.bits ^ mask, x.n};
}

Block orbit(const SubsetIndex& x, const GoodPath& path, const MidpointTree& tree,
            const TargetSpectrum& target) {
    const int k = target.k;
    AnchorTree at = anchor_tree(target);
    if (!at.uniform_gaps) {
        throw std::invalid_argument(
            "orbit generation from a single element needs per-depth uniform anchor gaps; "
            "use collect_good for this target");
    }
    if (static_cast<int>(path.sides.size()) != k) throw std::invalid_argument("path level mismatch");

    std::vector<std::uint32_t> seg(k);
    for (int j = 1; j <= k; ++j) seg[j - 1] = segment_mask(path.n[j - 1], path.n[j]);

    const int m = 1 << k;
    Block b;
    b.members.assign(m, 0);
    b.assign.resize(m);
    std::vector<bool> seen(m, false);
    for (int s = 0; s < m; ++s) {
        std::uint32_t bits = x.bits;
        int slot = 0;
        for (int j = 1; j <= k; ++j) {
            int flip = (s >> (j - 1)) & 1;
            if (flip) bits ^= seg[j - 1];
            int side = path.sides[j - 1] ^ flip;
            slot = 2 * slot + side;
        }
        if (seen[slot]) throw std::runtime_error("orbit members collide");
        seen[slot] = true;
        b.members[slot] = bits;
    }
    std::iota(b.assign.begin(), b.assign.end(), 1);
    b.pristine = true;
    b.offset_ticks2 = 2LL * std::popcount(b.members[0]) - 2 * target.mu_ticks[0];
    for (int i = 1; i < m; ++i) {
        long long o = 2LL * std::popcount(b.members[i]) - 2 * target.mu_ticks[i];
        if (o != b.offset_ticks2) throw std::runtime_error("orbit offsets disagree");
    }
    b.offset = static_cast<double>(b.offset_ticks2) * target.delta / 2.0;
    (void)tree;
    return b;
}

CollectResult collect_good(int n, const MidpointTree& tree, const TargetSpectrum& target) {
    if (n < 2 || n > kMaxAmbient) throw std::invalid_argument("ambient size out of range");
    if (n % 2 != 0) throw std::invalid_argument("ambient size must be even");
    const int k = target.k;
    if (k > 12) throw std::invalid_argument("target level k > 12 unsupported");
    if (n < 2 * k) throw std::invalid_argument("ambient size must be at least 2k");
    if (tree.k != k) throw std::invalid_argument("tree and target level mismatch");

    AnchorTree at = anchor_tree(target);
    const std::uint64_t total = std::uint64_t{1} << n;
    const int m = 1 << k;

    // Detection pre-pass, parallel over subset ranges.
    std::vector<std::uint8_t> complete(total, 0);
    std::vector<std::uint32_t> sides(total, 0);
    std::vector<std::uint8_t> half(total * static_cast<std::uint64_t>(k), 0);
    {
        int workers = worker_count(total);
        auto run = [&](std::uint64_t lo, std::uint64_t hi) {
            for (std::uint64_t x = lo; x < hi; ++x) {
                Detection d = detect(static_cast<std::uint32_t>(x), n, at);
                if (!d.complete) continue;
                complete[x] = 1;
                sides[x] = d.sides;
                for (int j = 0; j < k; ++j) half[x * k + j] = d.half_time[j];
            }
        };
        if (workers <= 1) {
            run(0, total);
        } else {
            std::vector<std::thread> pool;
            std::uint64_t chunk = total / workers;
            for (int w = 0; w < workers; ++w) {
                std::uint64_t lo = w * chunk;
                std::uint64_t hi = (w + 1 == workers) ? total : lo + chunk;
                pool.emplace_back(run, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
    }

    CollectResult out;
    if (at.uniform_gaps) {
        std::vector<bool> assigned(total, false);
        for (std::uint64_t x = 0; x < total; ++x) {
            if (assigned[x]) continue;
            if (!complete[x]) {
                out.remainder.push_back(static_cast<std::uint32_t>(x));
                continue;
            }
            Detection d;
            d.complete = true;
            d.sides = sides[x];
            for (int j = 0; j < k; ++j) d.half_time[j] = half[x * k + j];
            GoodPath path = to_path(d, k);
            Block b = orbit(SubsetIndex{static_cast<std::uint32_t>(x), n}, path, tree, target);
            for (std::uint32_t mem : b.members) {
                if (assigned[mem]) throw std::runtime_error("orbit members collide across blocks");
                assigned[mem] = true;
            }
            out.blocks.push_back(std::move(b));
        }
    } else {
        // Sibling leaf pairs are canonical for every target; assemble blocks
        // by zipping pairs of equal gauge offset, one per leaf-pair type.
        struct PairRec {
            std::uint32_t low, high;
        };
        const int types = m / 2;
        std::map<long long, std::vector<std::vector<PairRec>>> by_offset;
        for (std::uint64_t x = 0; x < total; ++x) {
            if (!complete[x]) {
                out.remainder.push_back(static_cast<std::uint32_t>(x));
                continue;
            }
            Detection d;
            d.complete = true;
            d.sides = sides[x];
            for (int j = 0; j < k; ++j) d.half_time[j] = half[x * k + j];
            std::uint32_t mate = static_cast<std::uint32_t>(x) ^ pair_mask(d, k);
            if (mate < x) continue;  // emitted at the mate
            if (!complete[mate]) throw std::runtime_error("pair mate failed detection");

            int type = 0;
            for (int j = 1; j < k; ++j) type = 2 * type + ((d.sides >> (j - 1)) & 1);
            long long u =
                (target.mu_ticks[2 * type + 1] - target.mu_ticks[2 * type]) / 2;
            std::uint32_t lowm, highm;
            if (u == 0) {
                lowm = static_cast<std::uint32_t>(x);
                highm = mate;
            } else if ((d.sides >> (k - 1)) & 1) {
                lowm = mate;
                highm = static_cast<std::uint32_t>(x);
            } else {
                lowm = static_cast<std::uint32_t>(x);
                highm = mate;
            }
            long long c = tick_of(lowm, n) - target.mu_ticks[2 * type];
            long long c2 = tick_of(highm, n) - target.mu_ticks[2 * type + 1];
            if (c != c2) throw std::runtime_error("pair offsets disagree");
            auto& slot = by_offset[c];
            if (slot.empty()) slot.resize(types);
            slot[type].push_back(PairRec{lowm, highm});
        }
        for (auto& [c, lists] : by_offset) {
            std::size_t z = lists[0].size();
            for (const auto& l : lists) z = std::min(z, l.size());
            for (std::size_t i = 0; i < z; ++i) {
                Block b;
                b.members.resize(m);
                b.assign.resize(m);
                for (int type = 0; type < types; ++type) {
                    b.members[2 * type] = lists[type][i].low;
                    b.members[2 * type + 1] = lists[type][i].high;
                }
                std::iota(b.assign.begin(), b.assign.end(), 1);
                b.pristine = true;
                b.offset_ticks2 = 2 * c + n;
                b.offset = static_cast<double>(b.offset_ticks2) * target.delta / 2.0;
                out.blocks.push_back(std::move(b));
            }
            for (int type = 0; type < types; ++type) {
                for (std::size_t i = z; i < lists[type].size(); ++i) {
                    out.remainder.push_back(lists[type][i].low);
                    out.remainder.push_back(lists[type][i].high);
                }
            }
        }
        std::sort(out.remainder.begin(), out.remainder.end());
    }

    out.good_count = total - out.remainder.size();
    if (out.remainder.size() % m != 0) {
        throw std::runtime_error("remainder count not divisible by block size");
    }
    return out;
}

Substitutes choose_substitutes(const std::vector<std::uint32_t>& remainder,
                               const std::vector<Block>& blocks,
                               const TargetSpectrum& target, int n) {
    Substitutes subs;
    subs.ladders.resize(remainder.size());
    if (remainder.empty()) {
        subs.feasible = true;
        return subs;
    }
    const long long K = target.bigK;

    std::map<long long, std::vector<std::uint32_t>> buckets;
    for (const Block& b : blocks) {
        for (std::uint32_t mem : b.members) buckets[tick_of(mem, n)].push_back(mem);
    }
    for (auto& [lvl, v] : buckets) std::sort(v.begin(), v.end());
    std::map<long long, std::size_t> next;

    std::vector<std::uint32_t> order = remainder;
    std::sort(order.begin(), order.end());
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
        std::uint32_t x = order[idx];
        long long span = std::max(K, std::llabs(tick_of(x, n)));
        auto& ladder = subs.ladders[idx];
        for (long long lvl = -span; lvl <= span; ++lvl) {
            auto it = buckets.find(lvl);
            std::size_t& ptr = next[lvl];
            if (it == buckets.end() || ptr >= it->second.size()) {
                subs.feasible = false;
                return subs;
            }
            ladder.emplace_back(lvl, it->second[ptr]);
            ++ptr;
        }
    }
    subs.feasible = true;
    return subs;
}

Partition repair(const std::vector<Block>& blocks, const std::vector<std::uint32_t>& remainder,
                 const Substitutes& subs, const TargetSpectrum& target, int n) {
    if (!subs.feasible) throw std::invalid_argument("substitution plan is infeasible");
    const int m = 1 << target.k;

    Partition p;
    p.n = n;
    p.target = target;
    p.blocks = blocks;

    if (!remainder.empty()) {
        // Original slot of every block member; each element moves at most once.
        std::vector<std::int32_t> block_of(std::size_t{1} << n, -1);
        std::vector<std::int8_t> pos_of(std::size_t{1} << n, -1);
        for (std::size_t b = 0; b < p.blocks.size(); ++b) {
            for (int j = 0; j < m; ++j) {
                block_of[p.blocks[b].members[j]] = static_cast<std::int32_t>(b);
                pos_of[p.blocks[b].members[j]] = static_cast<std::int8_t>(j);
            }
        }

        std::vector<std::uint32_t> order = remainder;
        std::sort(order.begin(), order.end());
        for (std::size_t base = 0; base < order.size(); base += m) {
            Block batch;
            batch.members.resize(m);
            batch.assign.resize(m);
            std::iota(batch.assign.begin(), batch.assign.end(), 1);
            batch.pristine = false;
            batch.offset_ticks2 = n;
            batch.offset = static_cast<double>(n) * target.delta / 2.0;

            for (int slot = 0; slot < m; ++slot) {
                std::size_t idx = base + slot;
                std::uint32_t x = order[idx];
                long long t = tick_of(x, n);
                long long goal = target.mu_ticks[slot];
                if (t == goal) {
                    batch.members[slot] = x;
                    continue;
                }
                std::map<long long, std::uint32_t> ladder(subs.ladders[idx].begin(),
                                                          subs.ladders[idx].end());
                long long dir = (goal > t) ? 1 : -1;
                std::uint32_t carried = x;
                for (long long lvl = t - dir; ; lvl -= dir) {
                    // walking from the level next to t toward goal, against dir
                    break;
                }
                // Chain: element at level L displaces the donor one level
                // toward the goal; the donor at the goal level joins the batch.
                std::uint32_t prev = x;
                long long lvl = t + ((goal > t) ? 1 : -1);
                while (true) {
                    auto it = ladder.find(lvl);
                    if (it == ladder.end()) throw std::runtime_error("donor ladder missing a level");
                    std::uint32_t donor = it->second;
                    std::int32_t db = block_of[donor];
                    std::int8_t dp = pos_of[donor];
                    if (db < 0) throw std::runtime_error("donor is not a block member");
                    p.blocks[db].members[dp] = prev;
                    p.blocks[db].pristine = false;
                    prev = donor;
                    if (lvl == goal) break;
                    lvl += (goal > t) ? 1 : -1;
                }
                batch.members[slot] = prev;
            }
            p.blocks.push_back(std::move(batch));
        }
    }

    p.good_count = (std::uint64_t{1} << n) - remainder.size();
    return p;
}

BuildResult build_partition(const std::vector<double>& target_raw, double epsilon, int max_n) {
    if (max_n > kMaxAmbient) throw std::invalid_argument("max_n exceeds the representation cap 30");
    TargetSpectrum target = normalize_targets(target_raw, epsilon);
    MidpointTree tree = midpoint_tree(target);
    const int k = target.k;

    std::string last_histogram;
    for (int n = 2 * k + 2; n <= max_n; n += 2) {
        CollectResult col = collect_good(n, tree, target);
        Substitutes subs = choose_substitutes(col.remainder, col.blocks, target, n);
        if (!subs.feasible) {
            if (n + 2 > max_n) {
                std::map<long long, std::uint64_t> hist;
                for (const Block& b : col.blocks) {
                    for (std::uint32_t mem : b.members) ++hist[tick_of(mem, n)];
                }
                std::ostringstream os;
                os << "good-element energy histogram at N=" << n << " (tick:count):";
                for (long long lvl = -target.bigK; lvl <= target.bigK; ++lvl) {
                    os << " " << lvl << ":" << (hist.count(lvl) ? hist[lvl] : 0);
                }
                os << "; remainder=" << col.remainder.size();
                last_histogram = os.str();
            }
            continue;
        }
        Partition p = repair(col.blocks, col.remainder, subs, target, n);
        p.good_count = col.good_count;
        DefectReport report = verify_partition(p, epsilon);
        return BuildResult{std::move(p), std::move(report), n};
    }
    throw resource_exhausted_error("no feasible even N <= " + std::to_string(max_n) +
                                   "; " + last_histogram);
}

DefectReport verify_partition(const Partition& p, double epsilon) {
    DefectReport rep;
    rep.epsilon = epsilon;

    const int k = p.target.k;
    const int m = 1 << k;
    if (p.n < 1 || p.n > kMaxAmbient) {
        rep.structural_ok = false;
        rep.structural_message = "ambient size out of range";
        return rep;
    }
    const std::uint64_t total = std::uint64_t{1} << p.n;
    std::vector<bool> seen(total, false);
    std::uint64_t covered = 0;
    for (const Block& b : p.blocks) {
        if (static_cast<int>(b.members.size()) != m ||
            static_cast<int>(b.assign.size()) != m) {
            rep.structural_ok = false;
            rep.structural_message = "block size differs from 2^k";
            return rep;
        }
        std::vector<bool> slot(m, false);
        for (int j = 0; j < m; ++j) {
            int a = b.assign[j];
            if (a < 1 || a > m || slot[a - 1]) {
                rep.structural_ok = false;
                rep.structural_message = "assignment is not a bijection onto target slots";
                return rep;
            }
            slot[a - 1] = true;
            std::uint32_t mem = b.members[j];
            if (mem >= total || seen[mem]) {
                rep.structural_ok = false;
                rep.structural_message = "blocks do not disjointly cover the power set";
                return rep;
            }
            seen[mem] = true;
            ++covered;
        }
    }
    if (covered != total) {
        rep.structural_ok = false;
        rep.structural_message = "blocks do not disjointly cover the power set";
        return rep;
    }

    rep.per_block.reserve(p.blocks.size());
    for (const Block& b : p.blocks) {
        long long lo = 0, hi = 0;
        for (int j = 0; j < m; ++j) {
            long long gauge = tick_of(b.members[j], p.n) - p.target.mu_ticks[b.assign[j] - 1];
            if (j == 0) {
                lo = hi = gauge;
            } else {
                lo = std::min(lo, gauge);
                hi = std::max(hi, gauge);
            }
        }
        double defect = static_cast<double>(hi - lo) * p.target.delta;
        rep.per_block.push_back(defect);
        rep.global_max = std::max(rep.global_max, defect);
    }
    rep.pass = rep.structural_ok && rep.global_max < epsilon;
    return rep;
}

}  // namespace spectramatch
