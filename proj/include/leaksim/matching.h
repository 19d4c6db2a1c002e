#ifndef LEAKSIM_MATCHING_H
#define LEAKSIM_MATCHING_H

#include <cstdint>
#include <vector>

namespace leaksim {

struct WeightedEdge {
    int u = 0;
    int v = 0;
    int64_t weight = 0;
};

/// Maximum-weight matching on a general graph (Edmonds' blossom algorithm, O(n^3)).
/// With max_cardinality, returns a maximum-weight matching among the maximum-cardinality ones.
/// Returns mate[v] (or -1).
std::vector<int> max_weight_matching(int num_vertices, const std::vector<WeightedEdge> &edges,
                                     bool max_cardinality = false);

/// Minimum-weight pairing of events where each event either pairs with another event (cost
/// pair[i][j]) or with the boundary (cost boundary[i]). Infinite costs mark forbidden options.
/// partner[i] is the matched event or -1 for the boundary.
struct BoundaryMatching {
    std::vector<int> partner;
    double weight = 0;
};

BoundaryMatching match_with_boundary(const std::vector<std::vector<double>> &pair, const std::vector<double> &boundary);
/// Exhaustive search over all pairings, exponential; a reference for small inputs.
BoundaryMatching match_with_boundary_brute_force(const std::vector<std::vector<double>> &pair,
                                                 const std::vector<double> &boundary);

}  // namespace leaksim

#endif
