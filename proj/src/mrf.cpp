#include "insar/mrf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace insar {

void validate(const MrfConfig& cfg) {
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha))
        throw ParameterError("MRF alpha must be finite and >= 0");
    if (!(cfg.init_threshold >= 0.0 && cfg.init_threshold <= 1.0))
        throw ParameterError("MRF init_threshold must lie in [0, 1]");
}

double otsu_threshold(const ScalarRaster& values) {
    constexpr int kBins = 256;
    if (values.empty()) throw DegenerateInputError("otsu_threshold on empty raster");

    std::array<double, kBins> hist{};
    float lo = values[0];
    float hi = values[0];
    for (float v : values.values()) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw ParameterError("otsu_threshold expects values in [0, 1]");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        const int bin = std::min(static_cast<int>(v * kBins), kBins - 1);
        hist[static_cast<std::size_t>(bin)] += 1.0;
    }
    if (lo == hi) throw DegenerateInputError("otsu_threshold on a constant raster");

    const double total = static_cast<double>(values.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += (b + 0.5) * hist[static_cast<std::size_t>(b)];

    // Candidate k splits bins [0, k) from [k, 256). Empty bins between the
    // classes leave the variance unchanged, so the maximum is often a run of
    // equal candidates; take the middle of the first such run (lower middle
    // for an even run length).
    double best = -1.0;
    int run_first = 1;
    int run_last = 1;
    double w0 = 0.0;
    double sum0 = 0.0;
    for (int k = 1; k < kBins; ++k) {
        w0 += hist[static_cast<std::size_t>(k - 1)];
        sum0 += (k - 0.5) * hist[static_cast<std::size_t>(k - 1)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mean0 = sum0 / w0;
        const double mean1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
        if (between > best) {
            best = between;
            run_first = run_last = k;
        } else if (between == best && k == run_last + 1) {
            run_last = k;
        }
    }
    const int best_k = run_first + (run_last - run_first) / 2;
    return static_cast<double>(best_k) / kBins;
}

LabelField initialize_labels(const ScalarRaster& coh, double threshold) {
    LabelField out(coh.width(), coh.height());
    // Compared at raster precision so a stored 0.6f equals a threshold of 0.6.
    const auto t = static_cast<float>(threshold);
    for (std::size_t i = 0; i < coh.size(); ++i) out[i] = coh[i] > t ? 1 : 0;
    return out;
}

LabelField initialize_labels(const CoherenceMap& coh, double threshold) {
    return initialize_labels(coh.values, threshold);
}

std::size_t neighbor_disagreements(const LabelField& s) {
    std::size_t count = 0;
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x) {
            if (x + 1 < s.width() && s(x, y) != s(x + 1, y)) ++count;
            if (y + 1 < s.height() && s(x, y) != s(x, y + 1)) ++count;
        }
    return count;
}

double mrf_energy(const LabelField& initial, const LabelField& solution, double alpha) {
    if (!initial.same_shape(solution))
        throw ParameterError("mrf_energy: label fields differ in size");
    std::size_t data = 0;
    for (std::size_t i = 0; i < initial.size(); ++i)
        if (initial[i] != solution[i]) ++data;
    return static_cast<double>(data) + alpha * static_cast<double>(neighbor_disagreements(solution));
}

LabelField minimize_mrf(const LabelField& initial, double alpha) {
    if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
    const int w = initial.width();
    const int h = initial.height();
    if (initial.empty()) return initial;
    if (alpha == 0.0) return initial;

    MaxFlowGraph graph(w * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int i = y * w + x;
            const double p = initial(x, y) ? 1.0 : 0.0;
            graph.add_terminal_weights(i, p, 1.0 - p);
            if (x + 1 < w) graph.add_edge(i, i + 1, alpha, alpha);
            if (y + 1 < h) graph.add_edge(i, i + w, alpha, alpha);
        }
    graph.solve();

    LabelField out(w, h);
    for (int i = 0; i < w * h; ++i) out[static_cast<std::size_t>(i)] = graph.in_source_set(i) ? 1 : 0;
    return out;
}

LabelField brute_force_mrf(const LabelField& initial, double alpha) {
    const std::size_t n = initial.size();
    if (n > 20)
        throw ParameterError("brute_force_mrf supports at most 20 pixels, got " + std::to_string(n));
    LabelField best = initial;
    double best_energy = std::numeric_limits<double>::infinity();
    LabelField candidate(initial.width(), initial.height());
    // Pixel 0 is the most significant bit so that increasing codes walk
    // labelings in lexicographic order; strict '<' keeps the first minimum.
    for (std::uint32_t code = 0; code < (1u << n); ++code) {
        for (std::size_t i = 0; i < n; ++i)
            candidate[i] = static_cast<std::uint8_t>((code >> (n - 1 - i)) & 1u);
        const double e = mrf_energy(initial, candidate, alpha);
        if (e < best_energy) {
            best_energy = e;
            best = candidate;
        }
    }
    return best;
}

LabelField complement(const LabelField& labels) {
    LabelField out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] ? 0 : 1;
    return out;
}

ScalarRaster to_scalar(const LabelField& labels) {
    ScalarRaster out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] ? 1.0f : 0.0f;
    return out;
}

LabelField labels_from_scalar(const ScalarRaster& raster) {
    LabelField out(raster.width(), raster.height());
    for (std::size_t i = 0; i < raster.size(); ++i) {
        if (raster[i] == 0.0f)
            out[i] = 0;
        else if (raster[i] == 1.0f)
            out[i] = 1;
        else
            throw DataError("label raster holds a value other than 0/1 at index " +
                            std::to_string(i));
    }
    return out;
}

// --- max flow ----------------------------------------------------------------

MaxFlowGraph::MaxFlowGraph(int nodes)
    : nodes_(nodes), source_(nodes), sink_(nodes + 1),
      adjacency_(static_cast<std::size_t>(nodes) + 2) {
    edges_.reserve(static_cast<std::size_t>(nodes) * 6);
}

void MaxFlowGraph::add_arc(int u, int v, double cap, double rev_cap) {
    adjacency_[static_cast<std::size_t>(u)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({v, cap});
    adjacency_[static_cast<std::size_t>(v)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({u, rev_cap});
}

void MaxFlowGraph::add_edge(int u, int v, double cap, double rev_cap) {
    if (u < 0 || v < 0 || u >= nodes_ || v >= nodes_ || u == v)
        throw ParameterError("MaxFlowGraph::add_edge: bad node index");
    if (cap < 0.0 || rev_cap < 0.0) throw ParameterError("negative capacity");
    add_arc(u, v, cap, rev_cap);
    solved_ = false;
}

void MaxFlowGraph::add_terminal_weights(int i, double to_source, double to_sink) {
    if (i < 0 || i >= nodes_) throw ParameterError("MaxFlowGraph: bad node index");
    if (to_source < 0.0 || to_sink < 0.0) throw ParameterError("negative capacity");
    if (to_source > 0.0) add_arc(source_, i, to_source, 0.0);
    if (to_sink > 0.0) add_arc(i, sink_, to_sink, 0.0);
    solved_ = false;
}

bool MaxFlowGraph::build_levels() {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> queue;
    level_[static_cast<std::size_t>(source_)] = 0;
    queue.push(source_);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        for (int e : adjacency_[static_cast<std::size_t>(u)]) {
            const Edge& edge = edges_[static_cast<std::size_t>(e)];
            if (edge.cap > 0.0 && level_[static_cast<std::size_t>(edge.to)] < 0) {
                level_[static_cast<std::size_t>(edge.to)] = level_[static_cast<std::size_t>(u)] + 1;
                queue.push(edge.to);
            }
        }
    }
    return level_[static_cast<std::size_t>(sink_)] >= 0;
}

// Iterative DFS over the level graph; saturates one augmenting path per
// descent until the source has no admissible arc left.
double MaxFlowGraph::push_blocking_flow() {
    double total = 0.0;
    std::vector<int> path;  // edge ids from source
    int u = source_;
    while (true) {
        if (u == sink_) {
            double bottleneck = std::numeric_limits<double>::infinity();
            for (int e : path) bottleneck = std::min(bottleneck, edges_[static_cast<std::size_t>(e)].cap);
            for (int e : path) {
                edges_[static_cast<std::size_t>(e)].cap -= bottleneck;
                edges_[static_cast<std::size_t>(e ^ 1)].cap += bottleneck;
            }
            total += bottleneck;
            path.clear();
            u = source_;
            continue;
        }
        auto& adj = adjacency_[static_cast<std::size_t>(u)];
        auto& cur = cursor_[static_cast<std::size_t>(u)];
        bool advanced = false;
        while (cur < adj.size()) {
            const int e = adj[cur];
            const Edge& edge = edges_[static_cast<std::size_t>(e)];
            if (edge.cap > 0.0 &&
                level_[static_cast<std::size_t>(edge.to)] == level_[static_cast<std::size_t>(u)] + 1) {
                path.push_back(e);
                u = edge.to;
                advanced = true;
                break;
            }
            ++cur;
        }
        if (advanced) continue;
        // Dead end: prune u from the level graph and retreat.
        level_[static_cast<std::size_t>(u)] = -1;
        if (path.empty()) break;
        const int back = path.back();
        path.pop_back();
        u = edges_[static_cast<std::size_t>(back ^ 1)].to;
        ++cursor_[static_cast<std::size_t>(u)];
    }
    return total;
}

double MaxFlowGraph::solve() {
    const std::size_t total_nodes = static_cast<std::size_t>(nodes_) + 2;
    level_.assign(total_nodes, -1);
    cursor_.assign(total_nodes, 0);
    double flow = 0.0;
    while (build_levels()) {
        std::fill(cursor_.begin(), cursor_.end(), 0);
        flow += push_blocking_flow();
    }
    // Source side = reachable from the source through residual capacity.
    // build_levels() just ran its final BFS, so level_ >= 0 marks exactly that.
    source_side_.assign(total_nodes, 0);
    for (std::size_t i = 0; i < total_nodes; ++i) source_side_[i] = level_[i] >= 0 ? 1 : 0;
    solved_ = true;
    return flow;
}

bool MaxFlowGraph::in_source_set(int i) const {
    if (!solved_) throw ParameterError("MaxFlowGraph::in_source_set before solve()");
    return source_side_[static_cast<std::size_t>(i)] != 0;
}

}  // namespace insar
