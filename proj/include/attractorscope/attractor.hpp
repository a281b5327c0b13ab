#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "attractorscope/dsgraph.hpp"
#include "attractorscope/dynamics.hpp"
#include "attractorscope/spectral.hpp"

namespace attractorscope {

/// A trajectory's best-fit line in a cluster's embedding space.
struct EmbeddingLine {
    Eigen::VectorXd anchor;     // a point on the line (member centroid)
    Eigen::VectorXd direction;  // unit, oriented first sample -> last sample
    std::vector<int> member_points;
};

struct AttractorEstimate {
    Eigen::VectorXd embedding_point;  // u*
    Eigen::VectorXd original_point;   // x*
    int cluster = -1;
    double intersection_spread = 0.0;
};

struct ParallelLinesError : std::runtime_error {
    explicit ParallelLinesError(double cosine_in)
        : std::runtime_error("lines are parallel (|cos| = " + std::to_string(cosine_in) + ")"),
          cosine(cosine_in) {}
    double cosine;
};

/// One line per trajectory of the cluster. Membership comes from the graph's
/// per-node trajectory index when present, otherwise from tracing paths out
/// of degree-1 heads. Direction is the principal axis of the member points.
/// Trajectories whose embedding collapses to a point are skipped with a
/// warning appended to `warnings` when given.
std::vector<EmbeddingLine> extract_lines(const SubdynamicsPartition& partition, int cluster,
                                         const WeightedGraph& graph,
                                         std::vector<std::string>* warnings = nullptr);

/// Closest-point midpoint of two lines: the least-squares solution of
/// [m_r, -m_s] [alpha, beta]^T = anchor_s - anchor_r. Exact intersection when
/// the lines meet; throws ParallelLinesError when they do not cross.
Eigen::VectorXd intersect_pair(const EmbeddingLine& r, const EmbeddingLine& s);

/// Mean of all valid pairwise intersections, mapped back to the original
/// space by inverse-distance-weighted averaging over the nearest cluster
/// points in embedding space.
AttractorEstimate find_attractor(const std::vector<EmbeddingLine>& lines,
                                 const SubdynamicsPartition& partition, int cluster,
                                 const TrajectorySet& data);

/// Per-axis std-normalized localization error:
/// sqrt(sum_d ((truth_d - estimate_d) / std_d)^2), std over all positions.
double attractor_error(const AttractorEstimate& estimate, const Eigen::VectorXd& truth,
                       const TrajectorySet& data);

}  // namespace attractorscope
