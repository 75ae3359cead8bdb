#pragma once

#include <cstdint>
#include <vector>

#include "insar/coherence.hpp"
#include "insar/raster.hpp"

namespace insar {

/// Binary labels: 0 = incoherent, 1 = coherent.
using LabelField = Grid<std::uint8_t>;

struct MrfConfig {
    double alpha = 2.5;
    double init_threshold = 0.6;
};

void validate(const MrfConfig& cfg);

/// Otsu's threshold on a 256-bin histogram over [0, 1]. Returns the bin edge
/// k/256 that maximizes between-class variance (classes: bins < k and bins
/// >= k). When several adjacent edges tie (empty bins between the classes)
/// the middle of the first tied run is returned, rounding toward lower k.
double otsu_threshold(const ScalarRaster& values);

/// 1 where coherence is strictly above the threshold.
LabelField initialize_labels(const CoherenceMap& coh, double threshold);
LabelField initialize_labels(const ScalarRaster& coh, double threshold);

/// Data term (disagreements with the initial estimate) plus alpha times the
/// number of unequal 4-connected neighbor pairs, each pair counted once.
double mrf_energy(const LabelField& initial, const LabelField& solution, double alpha);

/// Number of unequal 4-connected neighbor pairs.
std::size_t neighbor_disagreements(const LabelField& labels);

/// Global minimizer of mrf_energy(initial, S, alpha) via s-t minimum cut.
/// Among equal-energy minimizers the one with the fewest coherent pixels is
/// returned (source set of the cut = nodes reachable from the source in the
/// final residual graph).
LabelField minimize_mrf(const LabelField& initial, double alpha);

/// Exhaustive search over all labelings; at most 20 pixels. Ties resolve to
/// the lexicographically smallest labeling in row-major order.
LabelField brute_force_mrf(const LabelField& initial, double alpha);

LabelField complement(const LabelField& labels);
ScalarRaster to_scalar(const LabelField& labels);
/// Accepts only exact 0.0 / 1.0 samples. Throws DataError otherwise.
LabelField labels_from_scalar(const ScalarRaster& raster);

/// Maximum flow on a directed graph with real capacities (Dinic). Nodes are
/// 0..n-1 plus implicit source and sink terminals.
class MaxFlowGraph {
public:
    explicit MaxFlowGraph(int nodes);

    /// Edge u->v with capacity `cap` and reverse edge v->u with `rev_cap`.
    void add_edge(int u, int v, double cap, double rev_cap);
    /// Terminal links: source->i with `to_source`, i->sink with `to_sink`.
    void add_terminal_weights(int i, double to_source, double to_sink);

    double solve();
    /// After solve(): node lies on the source side of the minimum cut.
    bool in_source_set(int i) const;

private:
    struct Edge {
        int to;
        double cap;
    };
    bool build_levels();
    double push_blocking_flow();
    void add_arc(int u, int v, double cap, double rev_cap);

    int nodes_;
    int source_;
    int sink_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<Edge> edges_;  // edge e and e^1 are reverse pairs
    std::vector<int> level_;
    std::vector<std::size_t> cursor_;
    std::vector<std::uint8_t> source_side_;
    bool solved_ = false;
};

}  // namespace insar
