#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "schieber/candidate.hpp"
#include "schieber/random.hpp"

namespace schieber {

struct RangeBounds {
    double min_m = 18'000e3;
    double max_m = 28'000e3;

    void validate() const;
};

/// Range of the first signal inferred from the pair, and the constant term c of the quadratic.
struct PairwiseRange {
    bool solvable = false;
    double range_m = 0.0;
    double c = 0.0;
};

/// Satellite positions known to the receiver, by PRN.
using SatellitePositions = std::map<int, EcefVector>;

SatellitePositions satellite_positions(const SatelliteAlmanac& almanac, double t_s);

/// Solves a rho^2 + b rho + c = 0 ('+' root) for the range of the first signal from
/// pseudoranges, receiver-frame unit directions, and satellite positions of both.
PairwiseRange pairwise_range(double pseudorange_a, const Eigen::Vector3d& direction_a,
                             const EcefVector& satellite_a, double pseudorange_b,
                             const Eigen::Vector3d& direction_b, const EcefVector& satellite_b);

/// Candidate overload; throws std::invalid_argument for equal PRNs or missing data.
PairwiseRange pairwise_range(const SignalCandidate& a, const SignalCandidate& b,
                             const SatellitePositions& satellites);

/// 1 iff the range lies in the bounds and c < 0.
int plausibility(const PairwiseRange& r, const RangeBounds& bounds);

struct PlausibilityGraph {
    std::vector<int> prn;               // per vertex
    Eigen::MatrixXi directed;           // p(v, v')
    Eigen::MatrixXi adjacency;          // directed .* directed^T
    std::vector<PairwiseRange> pairs;   // row-major |V| x |V|

    [[nodiscard]] int size() const { return static_cast<int>(prn.size()); }
    [[nodiscard]] int degree(int v) const { return adjacency.row(v).sum(); }
};

PlausibilityGraph build_graph(const std::vector<SignalCandidate>& candidates,
                              const SatellitePositions& satellites, const RangeBounds& bounds);

/// Adjacency-only graph, for tests and tools.
PlausibilityGraph make_graph(const std::vector<int>& prn, const Eigen::MatrixXi& adjacency);

/// Satellite-unique clique grown greedily by degree; ties broken with `rng`.
/// Returns vertex indices in the order they were added.
std::vector<int> greedy_clique(const PlausibilityGraph& graph, Rng& rng);

/// Writes "i,j,prn_i,prn_j,range_m,c,p,edge" rows.
void write_graph_csv(std::ostream& out, const PlausibilityGraph& graph);

}  // namespace schieber
