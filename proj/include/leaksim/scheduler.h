#ifndef LEAKSIM_SCHEDULER_H
#define LEAKSIM_SCHEDULER_H

#include <string>
#include <vector>

#include "leaksim/circuit.h"

namespace leaksim {

enum class EdgeKind { dataflow, lifetime };

struct OpEdge {
    int from = 0;
    int to = 0;
    EdgeKind kind = EdgeKind::dataflow;

    bool operator==(const OpEdge &) const = default;
};

/// Nodes are circuit op indices.
struct OpGraph {
    size_t num_nodes = 0;
    std::vector<OpEdge> edges;

    size_t count(EdgeKind kind) const;
    bool has_edge(int from, int to) const;
};

/// Dataflow edges between consecutive ops sharing a qudit or register, plus measure-qudit lifetime edges.
OpGraph build_op_graph(const Circuit &circuit);

struct Schedule {
    std::vector<int> order;  // circuit op indices
    int peak_alive = 0;
    int peak_measure_alive = 0;
    /// Lifetime edges removed because they closed a cycle.
    int dropped_lifetime_edges = 0;
};

/// Greedy topological order: destroys first, creates last, then by index.
Schedule schedule(const Circuit &circuit, const OpGraph &graph);
Schedule schedule(const Circuit &circuit);

/// Identity order with the original op sequence.
Schedule program_order(const Circuit &circuit);

/// Maximum number of simultaneously alive qudits when running `order`, and the same restricted to measure qudits.
std::pair<int, int> peak_alive(const Circuit &circuit, const std::vector<int> &order);

std::string to_dot(const Circuit &circuit, const OpGraph &graph);

}  // namespace leaksim

#endif
