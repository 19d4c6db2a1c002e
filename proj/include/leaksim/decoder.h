#ifndef LEAKSIM_DECODER_H
#define LEAKSIM_DECODER_H

#include <cstdint>
#include <string>
#include <vector>

#include "leaksim/circuit.h"

namespace leaksim {

/// A Pauli fault of the qubit-level circuit and the raw measurement registers it flips.
struct ErrorMechanism {
    double probability = 0;
    std::vector<int> registers;  // sorted
    std::string source;
};

/// Raw registers flipped by the Pauli X^x Z^z on `qudit` inserted right after op `after_op`.
std::vector<int> propagate_pauli(const Circuit &circuit, size_t after_op, int qudit, bool x, bool z);

/// Depolarizing noise of strength p after every gate, X errors after resets and flipped
/// readouts, propagated through the ideal Clifford circuit.
std::vector<ErrorMechanism> pauli_error_mechanisms(const Circuit &circuit, double p);

struct Detector {
    int stabilizer = 0;
    int round = 0;  // equals the graph round count for the comparison against the data readout
    bool final = false;
};

struct GraphEdge {
    int a = 0;
    int b = -1;  // -1 is the boundary
    double probability = 0;
    double weight = 0;
    bool observable = false;
};

/// Matching graph for a memory experiment truncated after `rounds` rounds.
struct DetectorGraph {
    int rounds = 0;
    std::vector<Detector> detectors;
    std::vector<GraphEdge> edges;
    /// Faults flipping more than two detectors that could not be split into graph edges.
    int dropped_mechanisms = 0;

    /// Line-based "error(p) D.. L0" text, one mechanism per edge.
    std::string to_text() const;
};

enum class MatchingMethod { blossom, brute_force };

struct DecoderOptions {
    double p_dem = 0.001;
    /// Stabilizer types used for decoding the Z observable.
    std::string types = "Z";
    MatchingMethod method = MatchingMethod::blossom;
    /// Brute force is only used up to this many events; larger sets fall back to greedy pairing.
    int brute_force_limit = 12;
};

struct DecodeResult {
    bool correction = false;
    bool greedy = false;
    double weight = 0;
};

/// Detection events, observable and matching for circuits produced by the code builders.
/// Immutable after construction; safe to share across threads.
class Decoder {
   public:
    explicit Decoder(const Circuit &circuit, DecoderOptions options = {});

    const DecoderOptions &options() const { return options_; }
    int max_rounds() const { return (int)graphs_.size(); }
    const DetectorGraph &graph(int rounds) const;

    /// Stabilizer value change at (s, r); -1 where undefined (X checks in round 0).
    int stabilizer_event(const std::vector<int8_t> &registers, int s, int r) const;
    /// Fired detectors of graph(rounds), as indices into its detector list.
    std::vector<int> detection_events(const std::vector<int8_t> &registers, int rounds) const;
    /// Logical observable after `rounds` rounds relative to the prepared value (1 = flipped).
    bool observable(const std::vector<int8_t> &registers, int rounds) const;
    DecodeResult decode(const std::vector<int> &events, int rounds) const;
    /// observable XOR correction.
    bool logical_error(const std::vector<int8_t> &registers, int rounds) const;

   private:
    const CodeLayout layout_;
    DecoderOptions options_;
    std::vector<int> data_index_;  // qudit id -> data index or -1
    std::vector<DetectorGraph> graphs_;
    std::vector<std::vector<std::vector<double>>> dist_;   // per graph: all-pairs node distances
    std::vector<std::vector<std::vector<char>>> parity_;  // per graph: observable parity of the shortest path

    bool decoded_type(int s) const;
    int prepared_parity(const std::vector<int8_t> &registers, const std::vector<int> &data) const;
    void build_graph(const std::vector<ErrorMechanism> &mechanisms, int rounds);
};

}  // namespace leaksim

#endif
