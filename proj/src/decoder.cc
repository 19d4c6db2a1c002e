#include "leaksim/decoder.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "leaksim/matching.h"

namespace leaksim {

namespace {

using FlipSet = std::vector<int>;

FlipSet symmetric_difference(const FlipSet &a, const FlipSet &b) {
    FlipSet out;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

double combine(double p, double q) { return p + q - 2 * p * q; }

/// Pauli frame propagation of single X or Z faults through the ideal qubit circuit.
class FramePropagator {
   public:
    explicit FramePropagator(const Circuit &c) : c_(c), x_(c.qudits.size(), 0), z_(c.qudits.size(), 0) {}

    /// Registers flipped by a Pauli (x, z) on qudit q inserted right after op `start`.
    FlipSet propagate(size_t start, int q, bool x, bool z) {
        std::fill(x_.begin(), x_.end(), 0);
        std::fill(z_.begin(), z_.end(), 0);
        x_[q] = x;
        z_[q] = z;
        FlipSet flips;
        for (size_t k = start + 1; k < c_.ops.size(); k++) {
            const auto &op = c_.ops[k];
            switch (op.kind) {
                case OpKind::create_qudit:
                    x_[op.qudits[0]] = z_[op.qudits[0]] = 0;
                    break;
                case OpKind::unitary:
                    if (op.name == "H") {
                        std::swap(x_[op.qudits[0]], z_[op.qudits[0]]);
                    } else if (op.name == "CZ") {
                        int a = op.qudits[0], b = op.qudits[1];
                        z_[a] ^= x_[b];
                        z_[b] ^= x_[a];
                    } else if (op.name != "X") {
                        throw std::invalid_argument("decoder: unsupported gate " + op.name);
                    }
                    break;
                case OpKind::destroy_measure:
                    if (x_[op.qudits[0]]) {
                        flips.push_back(op.registers[0]);
                    }
                    x_[op.qudits[0]] = z_[op.qudits[0]] = 0;
                    break;
                case OpKind::record:
                    if (op.record == RecordKind::snapshot) {
                        for (size_t i = 0; i < op.qudits.size(); i++) {
                            if (x_[op.qudits[i]]) {
                                flips.push_back(op.registers[i]);
                            }
                        }
                    }
                    break;
                default:
                    break;
            }
        }
        std::sort(flips.begin(), flips.end());
        return flips;
    }

   private:
    const Circuit &c_;
    std::vector<char> x_, z_;
};

}  // namespace

std::vector<int> propagate_pauli(const Circuit &circuit, size_t after_op, int qudit, bool x, bool z) {
    return FramePropagator(circuit).propagate(after_op, qudit, x, z);
}

std::vector<ErrorMechanism> pauli_error_mechanisms(const Circuit &c, double p) {
    if (!(p > 0 && p < 0.5)) {
        throw std::invalid_argument("p_dem must be in (0, 0.5)");
    }
    FramePropagator prop(c);
    std::map<FlipSet, ErrorMechanism> merged;
    auto add = [&](const FlipSet &flips, double prob, const std::string &source) {
        if (flips.empty()) {
            return;
        }
        auto [it, fresh] = merged.try_emplace(flips);
        if (fresh) {
            it->second.registers = flips;
            it->second.source = source;
        }
        it->second.probability = combine(it->second.probability, prob);
    };
    for (size_t k = 0; k < c.ops.size(); k++) {
        const auto &op = c.ops[k];
        std::string where = op.name + "@" + std::to_string(k);
        if (op.kind == OpKind::create_qudit) {
            add(prop.propagate(k, op.qudits[0], true, false), p, where);
        } else if (op.kind == OpKind::unitary && op.condition_register < 0) {
            std::vector<FlipSet> gens;  // X and Z generators per target
            for (int q : op.qudits) {
                gens.push_back(prop.propagate(k, q, true, false));
                gens.push_back(prop.propagate(k, q, false, true));
            }
            int paulis = (1 << gens.size()) - 1;  // 3 or 15 non-identity Paulis
            for (int mask = 1; mask <= paulis; mask++) {
                FlipSet flips;
                for (size_t g = 0; g < gens.size(); g++) {
                    if (mask >> g & 1) {
                        flips = symmetric_difference(flips, gens[g]);
                    }
                }
                add(flips, p / paulis, where);
            }
        } else if (op.kind == OpKind::destroy_measure) {
            add({op.registers[0]}, p, where);
        } else if (op.kind == OpKind::record && op.record == RecordKind::snapshot) {
            for (int r : op.registers) {
                add({r}, p, where);
            }
        }
    }
    std::vector<ErrorMechanism> out;
    for (auto &[key, m] : merged) {
        out.push_back(std::move(m));
    }
    return out;
}

std::string DetectorGraph::to_text() const {
    std::stringstream out;
    out.precision(17);
    for (size_t i = 0; i < detectors.size(); i++) {
        out << "detector(" << detectors[i].stabilizer << ", " << detectors[i].round << ") D" << i << "\n";
    }
    for (const auto &e : edges) {
        out << "error(" << e.probability << ") D" << e.a;
        if (e.b >= 0) {
            out << " D" << e.b;
        }
        if (e.observable) {
            out << " L0";
        }
        out << "\n";
    }
    return out.str();
}

Decoder::Decoder(const Circuit &circuit, DecoderOptions options) : layout_(circuit.layout), options_(std::move(options)) {
    const auto &l = layout_;
    if (l.rounds < 1 || l.measurements.size() != (size_t)l.rounds || l.snapshots.size() != (size_t)l.rounds) {
        throw std::invalid_argument("decoder: circuit has no code layout");
    }
    data_index_.assign(circuit.qudits.size(), -1);
    for (size_t i = 0; i < l.data_qudits.size(); i++) {
        data_index_[l.data_qudits[i]] = (int)i;
    }
    auto mechanisms = pauli_error_mechanisms(circuit, options_.p_dem);
    for (int k = 1; k <= l.rounds; k++) {
        build_graph(mechanisms, k);
    }
}

const DetectorGraph &Decoder::graph(int rounds) const {
    if (rounds < 1 || rounds > max_rounds()) {
        throw std::out_of_range("decoder: rounds out of range");
    }
    return graphs_[rounds - 1];
}

bool Decoder::decoded_type(int s) const {
    return options_.types.find(layout_.stabilizers[s].type) != std::string::npos;
}

int Decoder::prepared_parity(const std::vector<int8_t> &registers, const std::vector<int> &data) const {
    int parity = 0;
    for (int q : data) {
        int reg = layout_.initial_bits[data_index_[q]];
        if (reg >= 0) {
            parity ^= registers[reg] & 1;
        }
    }
    return parity;
}

int Decoder::stabilizer_event(const std::vector<int8_t> &registers, int s, int r) const {
    const auto &stab = layout_.stabilizers[s];
    int value = registers[layout_.measurements[r][s]];
    if (r == 0) {
        if (stab.type != 'Z') {
            return -1;
        }
        return value ^ prepared_parity(registers, stab.data);
    }
    int flips = layout_.flips_each_round ? (int)(stab.data.size() % 2) : 0;
    return value ^ registers[layout_.measurements[r - 1][s]] ^ flips;
}

std::vector<int> Decoder::detection_events(const std::vector<int8_t> &registers, int rounds) const {
    const auto &g = graph(rounds);
    std::vector<int> events;
    for (size_t i = 0; i < g.detectors.size(); i++) {
        const auto &det = g.detectors[i];
        int value;
        if (!det.final) {
            value = stabilizer_event(registers, det.stabilizer, det.round);
        } else {
            const auto &stab = layout_.stabilizers[det.stabilizer];
            value = registers[layout_.measurements[rounds - 1][det.stabilizer]];
            for (int q : stab.data) {
                value ^= registers[layout_.snapshots[rounds - 1][data_index_[q]]];
            }
            if (layout_.flips_each_round) {
                value ^= (int)(stab.data.size() % 2);
            }
        }
        if (value == 1) {
            events.push_back((int)i);
        }
    }
    return events;
}

bool Decoder::observable(const std::vector<int8_t> &registers, int rounds) const {
    int value = prepared_parity(registers, layout_.logical);
    for (int q : layout_.logical) {
        value ^= registers[layout_.snapshots[rounds - 1][data_index_[q]]];
    }
    if (layout_.flips_each_round) {
        value ^= (int)((layout_.logical.size() * rounds) % 2);
    }
    return value & 1;
}

void Decoder::build_graph(const std::vector<ErrorMechanism> &mechanisms, int k) {
    const auto &l = layout_;
    DetectorGraph g;
    g.rounds = k;
    size_t ns = l.stabilizers.size();
    std::vector<std::vector<int>> det_at(k + 1, std::vector<int>(ns, -1));
    for (int r = 0; r <= k; r++) {
        for (size_t s = 0; s < ns; s++) {
            bool z = l.stabilizers[s].type == 'Z';
            if (!decoded_type((int)s) || ((r == 0 || r == k) && !z)) {
                continue;
            }
            det_at[r][s] = (int)g.detectors.size();
            g.detectors.push_back({(int)s, r, r == k});
        }
    }
    // Raw register -> (is snapshot, round, index).
    std::map<int, std::tuple<bool, int, int>> where;
    for (int r = 0; r < l.rounds; r++) {
        for (size_t s = 0; s < ns; s++) {
            where[l.raw_measurements[r][s]] = {false, r, (int)s};
        }
        for (size_t i = 0; i < l.raw_snapshots[r].size(); i++) {
            where[l.raw_snapshots[r][i]] = {true, r, (int)i};
        }
    }
    std::vector<std::vector<int>> stabs_of_data(l.data_qudits.size());
    for (size_t s = 0; s < ns; s++) {
        for (int q : l.stabilizers[s].data) {
            stabs_of_data[data_index_[q]].push_back((int)s);
        }
    }
    std::vector<int> logical_index;
    for (int q : l.logical) {
        logical_index.push_back(data_index_[q]);
    }

    struct Accum {
        double p[2] = {0, 0};
    };
    std::map<std::pair<int, int>, Accum> simple;
    std::vector<std::pair<std::vector<int>, std::pair<bool, double>>> multi;
    for (const auto &m : mechanisms) {
        std::map<int, int> count;
        bool obs = false;
        for (int reg : m.registers) {
            auto it = where.find(reg);
            if (it == where.end()) {
                continue;
            }
            auto [snap, r, idx] = it->second;
            if (!snap && r < k) {
                for (int rr : {r, r + 1}) {
                    if (rr <= k && det_at[rr][idx] >= 0) {
                        count[det_at[rr][idx]]++;
                    }
                }
            } else if (r == k - 1) {
                for (int s : stabs_of_data[idx]) {
                    if (det_at[k][s] >= 0) {
                        count[det_at[k][s]]++;
                    }
                }
                if (std::find(logical_index.begin(), logical_index.end(), idx) != logical_index.end()) {
                    obs = !obs;
                }
            }
        }
        std::vector<int> dets;
        for (auto [d, n] : count) {
            if (n % 2) {
                dets.push_back(d);
            }
        }
        if (dets.empty()) {
            continue;
        }
        if (dets.size() <= 2) {
            auto key = std::make_pair(dets[0], dets.size() == 2 ? dets[1] : -1);
            auto &acc = simple[key];
            acc.p[obs] = combine(acc.p[obs], m.probability);
        } else {
            multi.push_back({dets, {obs, m.probability}});
        }
    }
    auto edge_obs = [&](const Accum &a) { return a.p[1] > a.p[0]; };
    // Split faults touching more than two detectors into existing graph edges.
    for (const auto &[dets, info] : multi) {
        std::vector<std::pair<int, int>> parts;
        std::function<bool(std::vector<int>, bool)> split = [&](std::vector<int> rest, bool obs) {
            if (rest.empty()) {
                return !obs;
            }
            int a = rest[0];
            std::vector<int> tail(rest.begin() + 1, rest.end());
            auto bit = simple.find({a, -1});
            if (bit != simple.end()) {
                parts.push_back({a, -1});
                if (split(tail, obs ^ edge_obs(bit->second))) {
                    return true;
                }
                parts.pop_back();
            }
            for (size_t j = 0; j < tail.size(); j++) {
                auto it = simple.find({a, tail[j]});
                if (it == simple.end()) {
                    continue;
                }
                std::vector<int> rem = tail;
                rem.erase(rem.begin() + j);
                parts.push_back({a, tail[j]});
                if (split(rem, obs ^ edge_obs(it->second))) {
                    return true;
                }
                parts.pop_back();
            }
            return false;
        };
        if (!split(dets, info.first)) {
            g.dropped_mechanisms++;
            continue;
        }
        for (const auto &key : parts) {
            auto &acc = simple[key];
            bool o = edge_obs(acc);
            acc.p[o] = combine(acc.p[o], info.second);
        }
    }
    for (const auto &[key, acc] : simple) {
        GraphEdge e;
        e.a = key.first;
        e.b = key.second;
        e.observable = edge_obs(acc);
        e.probability = combine(acc.p[0], acc.p[1]);
        double p = std::min(e.probability, 0.5 - 1e-9);
        e.weight = std::log((1 - p) / p);
        g.edges.push_back(e);
    }
    graphs_.push_back(std::move(g));
}

DecodeResult Decoder::decode(const std::vector<int> &events, int rounds) const {
    const auto &g = graph(rounds);
    DecodeResult out;
    int n = (int)events.size();
    if (n == 0) {
        return out;
    }
    int nodes = (int)g.detectors.size() + 1;
    int boundary = nodes - 1;
    std::vector<std::vector<std::pair<int, int>>> adj(nodes);  // (node, edge)
    for (size_t k = 0; k < g.edges.size(); k++) {
        int b = g.edges[k].b < 0 ? boundary : g.edges[k].b;
        adj[g.edges[k].a].push_back({b, (int)k});
        adj[b].push_back({g.edges[k].a, (int)k});
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> pair(n, std::vector<double>(n, inf));
    std::vector<std::vector<char>> pair_parity(n, std::vector<char>(n, 0));
    std::vector<double> bdist(n, inf);
    std::vector<char> bparity(n, 0);
    for (int i = 0; i < n; i++) {
        std::vector<double> dist(nodes, inf);
        std::vector<char> parity(nodes, 0);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        dist[events[i]] = 0;
        pq.push({0, events[i]});
        while (!pq.empty()) {
            auto [d, v] = pq.top();
            pq.pop();
            if (d > dist[v]) {
                continue;
            }
            // Paths do not pass through the boundary.
            if (v == boundary) {
                continue;
            }
            for (auto [w, k] : adj[v]) {
                double nd = d + g.edges[k].weight;
                if (nd < dist[w]) {
                    dist[w] = nd;
                    parity[w] = parity[v] ^ (char)g.edges[k].observable;
                    pq.push({nd, w});
                }
            }
        }
        for (int j = 0; j < n; j++) {
            pair[i][j] = dist[events[j]];
            pair_parity[i][j] = parity[events[j]];
        }
        bdist[i] = dist[boundary];
        bparity[i] = parity[boundary];
    }

    BoundaryMatching m;
    if (options_.method == MatchingMethod::blossom) {
        m = match_with_boundary(pair, bdist);
    } else if (n <= options_.brute_force_limit) {
        m = match_with_boundary_brute_force(pair, bdist);
    } else {
        // Greedy: repeatedly take the cheapest remaining pair or boundary option.
        out.greedy = true;
        m.partner.assign(n, -2);
        for (int left = n; left > 0;) {
            double best = inf;
            int bi = -1, bj = -1;
            for (int i = 0; i < n; i++) {
                if (m.partner[i] != -2) {
                    continue;
                }
                if (bdist[i] < best) {
                    best = bdist[i];
                    bi = i;
                    bj = -1;
                }
                for (int j = i + 1; j < n; j++) {
                    if (m.partner[j] == -2 && pair[i][j] < best) {
                        best = pair[i][j];
                        bi = i;
                        bj = j;
                    }
                }
            }
            if (bi < 0) {
                throw std::runtime_error("decoder: disconnected detection event");
            }
            m.partner[bi] = bj;
            m.weight += best;
            left--;
            if (bj >= 0) {
                m.partner[bj] = bi;
                left--;
            }
        }
    }
    if (!std::isfinite(m.weight)) {
        throw std::runtime_error("decoder: infeasible matching");
    }
    bool correction = false;
    for (int i = 0; i < n; i++) {
        int j = m.partner[i];
        if (j < 0) {
            correction ^= (bool)bparity[i];
        } else if (i < j) {
            correction ^= (bool)pair_parity[i][j];
        }
    }
    out.correction = correction;
    out.weight = m.weight;
    return out;
}

bool Decoder::logical_error(const std::vector<int8_t> &registers, int rounds) const {
    return observable(registers, rounds) ^ decode(detection_events(registers, rounds), rounds).correction;
}

}  // namespace leaksim
