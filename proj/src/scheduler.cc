#include "leaksim/scheduler.h"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace leaksim {

namespace {

/// Qudits and classical registers an op touches. Registers are offset by the qudit count.
std::vector<int> resources(const Circuit &c, const Operation &op) {
    int nq = (int)c.qudits.size();
    std::vector<int> r(op.qudits.begin(), op.qudits.end());
    bool probe = op.kind == OpKind::record && op.record == RecordKind::probe;
    if (!probe) {
        for (int reg : op.registers) {
            r.push_back(nq + reg);
        }
    }
    if (op.condition_register >= 0) {
        r.push_back(nq + op.condition_register);
    }
    if (op.function) {
        for (int reg : op.function->inputs) {
            r.push_back(nq + reg);
        }
        for (int reg : op.function->outputs) {
            r.push_back(nq + reg);
        }
    }
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

/// Strongly connected components (iterative Tarjan); returns component id per node.
std::vector<int> components(size_t n, const std::vector<std::vector<int>> &adj) {
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int counter = 0, ncomp = 0;
    for (size_t root = 0; root < n; root++) {
        if (index[root] >= 0) {
            continue;
        }
        std::vector<std::pair<int, size_t>> call{{(int)root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto &[v, next] = call.back();
            if (next < adj[v].size()) {
                int w = adj[v][next++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = ncomp;
                } while (w != v);
                ncomp++;
            }
            int finished = v;
            call.pop_back();
            if (!call.empty()) {
                int parent = call.back().first;
                low[parent] = std::min(low[parent], low[finished]);
            }
        }
    }
    return comp;
}

int priority(const Operation &op) {
    if (op.kind == OpKind::destroy_measure) {
        return 0;
    }
    return op.kind == OpKind::create_qudit ? 2 : 1;
}

}  // namespace

size_t OpGraph::count(EdgeKind kind) const {
    return std::count_if(edges.begin(), edges.end(), [&](const OpEdge &e) { return e.kind == kind; });
}

bool OpGraph::has_edge(int from, int to) const {
    return std::any_of(edges.begin(), edges.end(), [&](const OpEdge &e) { return e.from == from && e.to == to; });
}

OpGraph build_op_graph(const Circuit &c) {
    OpGraph g;
    g.num_nodes = c.ops.size();
    std::set<std::pair<int, int>> seen;
    std::map<int, int> last;
    for (int k = 0; k < (int)c.ops.size(); k++) {
        for (int r : resources(c, c.ops[k])) {
            auto it = last.find(r);
            if (it != last.end() && seen.insert({it->second, k}).second) {
                g.edges.push_back({it->second, k, EdgeKind::dataflow});
            }
            last[r] = k;
        }
    }

    // Lifetime edges: if measure qudit a touches a data qudit before measure qudit b does (same round),
    // b is created only after a is destroyed.
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> touches;  // (round, data) -> (op, measure)
    for (int k = 0; k < (int)c.ops.size(); k++) {
        const auto &op = c.ops[k];
        std::vector<int> data, measure;
        for (int q : op.qudits) {
            (c.qudits[q].role == QuditRole::data ? data : measure).push_back(q);
        }
        for (int d : data) {
            for (int m : measure) {
                touches[{op.round, d}].push_back({k, m});
            }
        }
    }
    std::vector<std::vector<int>> destroys(c.qudits.size()), creates(c.qudits.size());
    for (int k = 0; k < (int)c.ops.size(); k++) {
        if (c.ops[k].kind == OpKind::destroy_measure) {
            destroys[c.ops[k].qudits[0]].push_back(k);
        } else if (c.ops[k].kind == OpKind::create_qudit) {
            creates[c.ops[k].qudits[0]].push_back(k);
        }
    }
    auto destroy_after = [&](int m, int j) {
        auto it = std::upper_bound(destroys[m].begin(), destroys[m].end(), j);
        return it == destroys[m].end() ? -1 : *it;
    };
    auto create_before = [&](int m, int k) {
        auto it = std::lower_bound(creates[m].begin(), creates[m].end(), k);
        return it == creates[m].begin() ? -1 : *std::prev(it);
    };
    for (const auto &[key, list] : touches) {
        for (size_t a = 0; a < list.size(); a++) {
            for (size_t b = a + 1; b < list.size(); b++) {
                if (list[a].second == list[b].second) {
                    continue;
                }
                int from = destroy_after(list[a].second, list[a].first);
                int to = create_before(list[b].second, list[b].first);
                if (from >= 0 && to >= 0 && from != to && seen.insert({from, to}).second) {
                    g.edges.push_back({from, to, EdgeKind::lifetime});
                }
            }
        }
    }
    return g;
}

std::pair<int, int> peak_alive(const Circuit &c, const std::vector<int> &order) {
    int alive = 0, measure = 0, peak = 0, peak_m = 0;
    for (int k : order) {
        const auto &op = c.ops[k];
        int sign = op.kind == OpKind::create_qudit ? 1 : op.kind == OpKind::destroy_measure ? -1 : 0;
        if (sign == 0) {
            continue;
        }
        alive += sign;
        if (c.qudits[op.qudits[0]].role == QuditRole::measure) {
            measure += sign;
        }
        peak = std::max(peak, alive);
        peak_m = std::max(peak_m, measure);
    }
    return {peak, peak_m};
}

Schedule schedule(const Circuit &c, const OpGraph &graph) {
    size_t n = graph.num_nodes;
    std::vector<OpEdge> edges = graph.edges;
    Schedule s;
    for (;;) {
        std::vector<std::vector<int>> adj(n);
        for (const auto &e : edges) {
            adj[e.from].push_back(e.to);
        }
        auto comp = components(n, adj);
        std::vector<int> size(n, 0);
        for (int x : comp) {
            size[x]++;
        }
        auto cyclic = [&](const OpEdge &e) {
            return e.kind == EdgeKind::lifetime && comp[e.from] == comp[e.to] && size[comp[e.from]] > 1;
        };
        size_t before = edges.size();
        edges.erase(std::remove_if(edges.begin(), edges.end(), cyclic), edges.end());
        if (edges.size() == before) {
            break;
        }
        s.dropped_lifetime_edges += (int)(before - edges.size());
    }

    std::vector<std::vector<int>> adj(n);
    std::vector<int> indegree(n, 0);
    for (const auto &e : edges) {
        adj[e.from].push_back(e.to);
        indegree[e.to]++;
    }
    using Key = std::pair<int, int>;
    std::priority_queue<Key, std::vector<Key>, std::greater<Key>> ready;
    for (size_t k = 0; k < n; k++) {
        if (indegree[k] == 0) {
            ready.push({priority(c.ops[k]), (int)k});
        }
    }
    while (!ready.empty()) {
        int k = ready.top().second;
        ready.pop();
        s.order.push_back(k);
        for (int w : adj[k]) {
            if (--indegree[w] == 0) {
                ready.push({priority(c.ops[w]), w});
            }
        }
    }
    if (s.order.size() != n) {
        throw std::runtime_error("schedule: dependency cycle without lifetime edges");
    }
    std::tie(s.peak_alive, s.peak_measure_alive) = peak_alive(c, s.order);
    return s;
}

Schedule schedule(const Circuit &c) { return schedule(c, build_op_graph(c)); }

Schedule program_order(const Circuit &c) {
    Schedule s;
    for (int k = 0; k < (int)c.ops.size(); k++) {
        s.order.push_back(k);
    }
    std::tie(s.peak_alive, s.peak_measure_alive) = peak_alive(c, s.order);
    return s;
}

std::string to_dot(const Circuit &c, const OpGraph &g) {
    std::stringstream out;
    out << "digraph ops {\n";
    for (size_t k = 0; k < g.num_nodes; k++) {
        const auto &op = c.ops[k];
        out << "  n" << k << " [label=\"" << k << " " << op.name;
        for (int q : op.qudits) {
            out << " " << c.qudits[q].name;
        }
        out << "\"];\n";
    }
    for (const auto &e : g.edges) {
        out << "  n" << e.from << " -> n" << e.to;
        if (e.kind == EdgeKind::lifetime) {
            out << " [style=dashed,color=red]";
        }
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace leaksim
