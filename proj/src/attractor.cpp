#include "attractorscope/attractor.hpp"

#include <cmath>
#include <map>

namespace attractorscope {

namespace {

// Trajectory id per node when the graph carries no sampling metadata: walk
// out of every degree-1 head until the path ends or meets the cycle.
std::vector<std::pair<int, int>> trace_paths(const WeightedGraph& graph) {
    const int m = graph.size();
    std::vector<std::pair<int, int>> index(m, {-1, -1});
    int tid = 0;
    for (int head = 0; head < m; ++head) {
        if (graph.degree(head) != 1 || index[head].first >= 0) continue;
        int cur = head, pos = 0;
        index[cur] = {tid, pos++};
        while (true) {
            int next = -1;
            int unvisited = 0;
            for (int w = 0; w < m; ++w) {
                if (graph.adjacency(cur, w) != 0 && index[w].first < 0) {
                    ++unvisited;
                    if (next < 0) next = w;
                }
            }
            if (unvisited != 1) break;  // junction or dead end
            cur = next;
            index[cur] = {tid, pos++};
            if (graph.degree(cur) >= 3) break;  // terminal node on the cycle
        }
        ++tid;
    }
    // anything unreached (isolated nodes, pure cycles) becomes its own group
    for (int i = 0; i < m; ++i)
        if (index[i].first < 0) index[i] = {tid++, 0};
    return index;
}

}  // namespace

std::vector<EmbeddingLine> extract_lines(const SubdynamicsPartition& partition, int cluster,
                                         const WeightedGraph& graph,
                                         std::vector<std::string>* warnings) {
    if (cluster < 0 || cluster >= partition.Q)
        throw std::invalid_argument("extract_lines: cluster id out of range");
    const Eigen::MatrixXd& embedding = partition.embeddings[cluster];
    if (embedding.cols() < 2)
        throw std::invalid_argument("extract_lines: cluster embedding dimension must be >= 2");

    const auto index =
        graph.path_index.empty() ? trace_paths(graph) : graph.path_index;
    std::map<int, std::vector<std::pair<int, int>>> by_trajectory;  // tid -> (pos, node)
    for (int i = 0; i < graph.size(); ++i)
        if (partition.labels[i] == cluster)
            by_trajectory[index[i].first].emplace_back(index[i].second, i);

    std::vector<EmbeddingLine> lines;
    for (auto& [tid, members] : by_trajectory) {
        std::sort(members.begin(), members.end());
        if (members.size() < 2) {
            if (warnings)
                warnings->push_back("trajectory " + std::to_string(tid) +
                                    " has fewer than 2 points in cluster " +
                                    std::to_string(cluster) + "; skipped");
            continue;
        }
        Eigen::MatrixXd pts(static_cast<int>(members.size()), embedding.cols());
        for (int r = 0; r < pts.rows(); ++r) pts.row(r) = embedding.row(members[r].second);
        const Eigen::RowVectorXd centroid = pts.colwise().mean();
        const Eigen::MatrixXd centered = pts.rowwise() - centroid;
        if (centered.rowwise().norm().maxCoeff() < 1e-12) {
            if (warnings)
                warnings->push_back("trajectory " + std::to_string(tid) +
                                    " collapses to a point in the embedding; skipped");
            continue;
        }
        // principal axis of the member points
        const Eigen::MatrixXd cov = centered.transpose() * centered;
        const auto dec = eigendecompose(cov);
        Eigen::VectorXd dir = dec.eigenvectors.col(dec.size() - 1);
        const Eigen::VectorXd span = pts.row(pts.rows() - 1) - pts.row(0);
        if (dir.dot(span) < 0.0) dir = -dir;

        EmbeddingLine line;
        line.anchor = centroid.transpose();
        line.direction = dir;
        for (const auto& [pos, node] : members) line.member_points.push_back(node);
        lines.push_back(std::move(line));
    }
    return lines;
}

Eigen::VectorXd intersect_pair(const EmbeddingLine& r, const EmbeddingLine& s) {
    const double cosine = r.direction.dot(s.direction);
    if (std::abs(cosine) >= 1.0 - 1e-10) throw ParallelLinesError(cosine);
    const Eigen::VectorXd b = s.anchor - r.anchor;
    // normal equations of [m_r, -m_s] [alpha, beta]^T = b with unit directions
    const double d1 = r.direction.dot(b);
    const double d2 = -s.direction.dot(b);
    const double det = 1.0 - cosine * cosine;
    const double alpha = (d1 + cosine * d2) / det;
    const double beta = (cosine * d1 + d2) / det;
    const Eigen::VectorXd on_r = r.anchor + alpha * r.direction;
    const Eigen::VectorXd on_s = s.anchor + beta * s.direction;
    return 0.5 * (on_r + on_s);
}

AttractorEstimate find_attractor(const std::vector<EmbeddingLine>& lines,
                                 const SubdynamicsPartition& partition, int cluster,
                                 const TrajectorySet& data) {
    if (lines.size() < 2)
        throw std::runtime_error("find_attractor: need at least 2 lines, have " +
                                 std::to_string(lines.size()));
    std::vector<Eigen::VectorXd> crossings;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            try {
                crossings.push_back(intersect_pair(lines[i], lines[j]));
            } catch (const ParallelLinesError&) {
                // skipped; fatal only if every pair is parallel
            }
        }
    }
    if (crossings.empty())
        throw std::runtime_error("find_attractor: all line pairs are parallel");

    AttractorEstimate est;
    est.cluster = cluster;
    est.embedding_point = Eigen::VectorXd::Zero(crossings.front().size());
    for (const auto& p : crossings) est.embedding_point += p;
    est.embedding_point /= static_cast<double>(crossings.size());
    for (std::size_t i = 0; i < crossings.size(); ++i)
        for (std::size_t j = i + 1; j < crossings.size(); ++j)
            est.intersection_spread =
                std::max(est.intersection_spread, (crossings[i] - crossings[j]).norm());

    // back-map: one anchor per line, the member farthest along the oriented
    // direction (first sample -> last sample). On exact theory graphs the
    // path coordinates shrink monotonically toward the cycle, so this is the
    // member nearest u*; on sampled graphs, whose embedding curves cross zero
    // mid-path, it stays pinned to the trajectory's deep end.
    const auto samples = data.flatten();
    const Eigen::MatrixXd& embedding = partition.embeddings[cluster];
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(data.dim());
    double weight_sum = 0.0;
    for (const auto& line : lines) {
        double best = -std::numeric_limits<double>::max();
        int arg = -1;
        for (int i : line.member_points) {
            const double proj = embedding.row(i) * line.direction;
            if (proj > best) {
                best = proj;
                arg = i;
            }
        }
        if (arg < 0) continue;
        const double dist = (embedding.row(arg).transpose() - est.embedding_point).norm();
        const double w = 1.0 / (dist + 1e-9);
        weighted += w * samples[arg]->position;
        weight_sum += w;
    }
    est.original_point = weighted / weight_sum;
    return est;
}

double attractor_error(const AttractorEstimate& estimate, const Eigen::VectorXd& truth,
                       const TrajectorySet& data) {
    if (truth.size() != estimate.original_point.size())
        throw std::invalid_argument("attractor_error: dimension mismatch");
    const auto samples = data.flatten();
    const int d = data.dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto* s : samples) mean += s->position;
    mean /= static_cast<double>(samples.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto* s : samples) var += (s->position - mean).cwiseAbs2();
    var /= static_cast<double>(samples.size());

    double err2 = 0.0;
    for (int k = 0; k < d; ++k) {
        const double sd = std::sqrt(var[k]);
        if (sd <= 0.0)
            throw std::runtime_error("attractor_error: zero position std in dimension " +
                                     std::to_string(k));
        const double delta = (truth[k] - estimate.original_point[k]) / sd;
        err2 += delta * delta;
    }
    return std::sqrt(err2);
}

}  // namespace attractorscope
