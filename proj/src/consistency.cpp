#include "schieber/consistency.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace schieber {

void RangeBounds::validate() const {
    if (!(min_m > 0.0) || !(max_m > min_m)) {
        throw std::invalid_argument("range bounds need 0 < min < max");
    }
}

SatellitePositions satellite_positions(const SatelliteAlmanac& almanac, double t_s) {
    SatellitePositions out;
    for (const auto& s : propagate(almanac, t_s)) out[s.prn] = s.position;
    return out;
}

PairwiseRange pairwise_range(double pseudorange_a, const Eigen::Vector3d& direction_a,
                             const EcefVector& satellite_a, double pseudorange_b,
                             const Eigen::Vector3d& direction_b, const EcefVector& satellite_b) {
    PairwiseRange out;
    const double one_minus = 1.0 - direction_a.dot(direction_b);
    const double diff = pseudorange_a - pseudorange_b;
    const double a = 2.0 * one_minus;
    const double b = -2.0 * diff * one_minus;
    out.c = diff * diff - (satellite_a - satellite_b).squaredNorm();
    if (std::abs(one_minus) < 1e-6) return out;
    const double disc = b * b - 4.0 * a * out.c;
    if (disc < 0.0) return out;
    out.range_m = (-b + std::sqrt(disc)) / (2.0 * a);
    out.solvable = std::isfinite(out.range_m);
    return out;
}

PairwiseRange pairwise_range(const SignalCandidate& a, const SignalCandidate& b,
                             const SatellitePositions& satellites) {
    if (a.prn == b.prn) throw std::invalid_argument("pairwise_range: both signals claim the same satellite");
    if (!a.pseudorange_m || !b.pseudorange_m || !a.doa || !b.doa) {
        throw std::invalid_argument("pairwise_range: candidates need a pseudorange and a DoA");
    }
    const auto sa = satellites.find(a.prn);
    const auto sb = satellites.find(b.prn);
    if (sa == satellites.end() || sb == satellites.end()) {
        throw std::invalid_argument("pairwise_range: satellite position unknown");
    }
    return pairwise_range(*a.pseudorange_m, direction_to_unit(a.doa->direction), sa->second,
                          *b.pseudorange_m, direction_to_unit(b.doa->direction), sb->second);
}

int plausibility(const PairwiseRange& r, const RangeBounds& bounds) {
    return r.solvable && r.c < 0.0 && r.range_m >= bounds.min_m && r.range_m <= bounds.max_m ? 1 : 0;
}

PlausibilityGraph build_graph(const std::vector<SignalCandidate>& candidates,
                              const SatellitePositions& satellites, const RangeBounds& bounds) {
    const int n = static_cast<int>(candidates.size());
    PlausibilityGraph g;
    g.directed = Eigen::MatrixXi::Zero(n, n);
    g.pairs.assign(static_cast<std::size_t>(n) * n, PairwiseRange{});
    for (const auto& c : candidates) g.prn.push_back(c.prn);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j || candidates[i].prn == candidates[j].prn) continue;
            const auto r = pairwise_range(candidates[i], candidates[j], satellites);
            g.pairs[static_cast<std::size_t>(i) * n + j] = r;
            g.directed(i, j) = plausibility(r, bounds);
        }
    }
    g.adjacency = g.directed.cwiseProduct(g.directed.transpose());
    return g;
}

PlausibilityGraph make_graph(const std::vector<int>& prn, const Eigen::MatrixXi& adjacency) {
    const auto n = static_cast<Eigen::Index>(prn.size());
    if (adjacency.rows() != n || adjacency.cols() != n) {
        throw std::invalid_argument("make_graph: adjacency size mismatch");
    }
    PlausibilityGraph g;
    g.prn = prn;
    g.directed = adjacency;
    g.adjacency = adjacency.cwiseProduct(adjacency.transpose());
    g.adjacency.diagonal().setZero();
    g.pairs.assign(static_cast<std::size_t>(n * n), PairwiseRange{});
    return g;
}

std::vector<int> greedy_clique(const PlausibilityGraph& graph, Rng& rng) {
    const int n = graph.size();
    std::vector<int> clique;
    if (n == 0) return clique;
    std::vector<int> degree(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) degree[static_cast<std::size_t>(v)] = graph.degree(v);

    std::vector<bool> in_clique(static_cast<std::size_t>(n), false);
    while (true) {
        std::vector<int> best;
        int best_degree = -1;
        for (int v = 0; v < n; ++v) {
            if (in_clique[static_cast<std::size_t>(v)]) continue;
            bool ok = true;
            for (int u : clique) {
                if (graph.adjacency(u, v) == 0 || graph.prn[static_cast<std::size_t>(u)] == graph.prn[static_cast<std::size_t>(v)]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            const int d = degree[static_cast<std::size_t>(v)];
            if (d > best_degree) {
                best_degree = d;
                best.assign(1, v);
            } else if (d == best_degree) {
                best.push_back(v);
            }
        }
        if (best.empty()) break;
        const auto pick = best.size() == 1
                              ? best.front()
                              : best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
        clique.push_back(pick);
        in_clique[static_cast<std::size_t>(pick)] = true;
    }
    return clique;
}

void write_graph_csv(std::ostream& out, const PlausibilityGraph& graph) {
    out << "i,j,prn_i,prn_j,range_m,c,p,edge\n";
    const int n = graph.size();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& r = graph.pairs[static_cast<std::size_t>(i) * n + j];
            out << i << ',' << j << ',' << graph.prn[static_cast<std::size_t>(i)] << ','
                << graph.prn[static_cast<std::size_t>(j)] << ',' << r.range_m << ',' << r.c << ','
                << graph.directed(i, j) << ',' << graph.adjacency(i, j) << '\n';
        }
    }
}

}  // namespace schieber
