#pragma once

#include <optional>
#include <vector>

#include "spectramatch/core.hpp"

namespace spectramatch {

/// Center, grid-snap and re-sort raw targets. delta starts at epsilon/3 and is
/// refined (by powers of two) until every target value and every midpoint-tree
/// node is an exact grid multiple.
TargetSpectrum normalize_targets(const std::vector<double>& raw, double epsilon);

MidpointTree midpoint_tree(const TargetSpectrum& target);

/// Detection anchors. Each node's two children sit symmetrically around it,
/// which makes first-hit detection stable under segment reflection. When the
/// target's midpoint tree already has that shape (per-depth gaps all equal,
/// e.g. every k = 1 target), the anchors coincide with the midpoint tree and
/// whole orbits are canonical; otherwise only sibling leaf pairs are.
struct AnchorTree {
    int k = 0;
    bool uniform_gaps = false;
    std::vector<std::vector<long long>> anchors;  // anchors[d][i], d = 0..k, delta ticks
    long long max_abs_target = 0;
};
AnchorTree anchor_tree(const TargetSpectrum& target);

/// First-hit descent through the anchor tree; smallest n_j at every step.
std::optional<GoodPath> good_path(const SubsetIndex& x, const MidpointTree& tree,
                                  const TargetSpectrum& target);

/// x triangle {n_m+1, ..., n_k}; requires the path values from step m on to be
/// monotone (all descents on the same side).
SubsetIndex reflect(const SubsetIndex& x, const GoodPath& path, int m);

/// Full 2^k block generated from one good element by reflecting at each of the
/// 2^k - 1 interior nodes. Only available when the anchor gaps are uniform per
/// depth (the reflections preserve every member's detected path exactly then).
Block orbit(const SubsetIndex& x, const GoodPath& path, const MidpointTree& tree,
            const TargetSpectrum& target);

struct CollectResult {
    std::vector<Block> blocks;
    std::vector<std::uint32_t> remainder;
    std::uint64_t good_count = 0;
};

/// Scan all 2^n subsets, group good elements into exact blocks, return the
/// rest. Blocks are pristine: member energies hit their slot values exactly
/// (common raw-gauge offset per block).
CollectResult collect_good(int n, const MidpointTree& tree, const TargetSpectrum& target);

/// Donor ladder for one remainder element: (centered tick level, donor bits).
struct Substitutes {
    bool feasible = false;
    std::vector<std::vector<std::pair<long long, std::uint32_t>>> ladders;
};

/// Greedy lexicographic donor selection: one block member per grid level
/// |m| <= K for every remainder element, all ladders pairwise disjoint.
Substitutes choose_substitutes(const std::vector<std::uint32_t>& remainder,
                               const std::vector<Block>& blocks,
                               const TargetSpectrum& target, int n);

/// Displacement cascades: every remainder element enters a donor chain one
/// grid step at a time; each touched slot ends with gauge error 0 or delta.
Partition repair(const std::vector<Block>& blocks, const std::vector<std::uint32_t>& remainder,
                 const Substitutes& subs, const TargetSpectrum& target, int n);

struct BuildResult {
    Partition partition;
    DefectReport report;
    int found_n = 0;
};

/// Scan even N upward from 2k+2 until the substitution supply suffices, then
/// assemble and verify. Throws resource_exhausted_error with a good-element
/// energy histogram when no N <= max_n works.
BuildResult build_partition(const std::vector<double>& target_raw, double epsilon, int max_n);

/// Structure and defect check, independent of builder internals.
DefectReport verify_partition(const Partition& p, double epsilon);

}  // namespace spectramatch
