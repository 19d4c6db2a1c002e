#ifndef LEAKSIM_CIRCUIT_H
#define LEAKSIM_CIRCUIT_H

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaksim/channel.h"
#include "leaksim/noise.h"

namespace leaksim {

enum class OpKind { unitary, channel, create_qudit, destroy_measure, classical_fn, record };

std::string op_kind_name(OpKind kind);
OpKind op_kind_from_name(const std::string &name);

/// Classical map applied with probability `prob`; `table` sends input register values to output values.
struct ClassicalBranch {
    double prob = 1;
    std::map<std::vector<int>, std::vector<int>> table;
};

/// A stochastic map between classical registers. Branch functions are applied with their probabilities.
struct ClassicalFunction {
    std::vector<int> inputs;
    std::vector<int> outputs;
    std::vector<ClassicalBranch> branches;

    static ClassicalFunction coin(int output, double p_one = 0.5);
    /// Outcome 2 replaced by 0 or 1 with equal probability, other values copied.
    static ClassicalFunction randomize_leaked(int input, int output);
    static ClassicalFunction copy(int input, int output);
};

enum class RecordKind { probe, snapshot };

struct Operation {
    OpKind kind = OpKind::unitary;
    std::string name;
    std::vector<int> qudits;
    /// destroy_measure: output register. record snapshot: one register per qudit. record probe: probe slot.
    std::vector<int> registers;
    /// unitary/channel: map on the target qudits. create_qudit: map from dimension 1 to the new qudit.
    std::shared_ptr<const KrausChannel> channel;
    std::shared_ptr<const ClassicalFunction> function;
    RecordKind record = RecordKind::probe;
    /// probe: single-qudit operator O; the trajectory records <psi|O|psi>.
    std::shared_ptr<const ComplexMatrix> observable;
    int condition_register = -1;
    int condition_value = 1;
    double duration = 0;
    int round = -1;
};

enum class QuditRole { data, measure };

struct QuditInfo {
    std::string name;
    QuditRole role = QuditRole::data;
    size_t local_dim = 3;
};

struct Stabilizer {
    std::string name;
    char type = 'Z';
    int measure_qudit = -1;
    std::vector<int> data;  // qudit ids
};

/// Code-level structure consumed by decoding and analysis.
struct CodeLayout {
    std::string code;
    int distance = 0;
    int rounds = 0;
    double round_duration = 0;
    std::vector<int> data_qudits;
    std::vector<Stabilizer> stabilizers;
    std::vector<int> logical;                             // data qudit ids whose Z parity is the observable
    std::vector<std::vector<int>> raw_measurements;       // [round][stabilizer] register (0, 1, 2)
    std::vector<std::vector<int>> measurements;           // [round][stabilizer] register, outcome 2 randomized
    std::vector<std::vector<int>> raw_snapshots;          // [round][data index] register
    std::vector<std::vector<int>> snapshots;              // [round][data index] register, randomized
    std::vector<int> initial_bits;                        // [data index] register or -1 (prepared |0>)
    std::vector<std::vector<int>> leak_probes;            // [round][data index] probe slot for P2
    bool flips_each_round = false;                        // X on all data at the end of every round
};

struct Circuit {
    std::vector<QuditInfo> qudits;
    std::vector<std::string> registers;
    std::vector<std::string> probes;
    std::vector<Operation> ops;
    CodeLayout layout;

    int add_qudit(const std::string &name, QuditRole role, size_t local_dim = 3);
    int add_register(const std::string &name);
    int add_probe(const std::string &name);

    /// Checks declarations and payload shapes; throws std::invalid_argument.
    void validate() const;
    /// Line based text form, one operation per line, channels listed once.
    std::string to_text() const;
    static Circuit from_text(const std::string &text);
};

struct CodeOptions {
    bool flips_each_round = true;      // repetition code only
    bool random_initial_bits = true;   // repetition code only
    bool leak_probes = true;
    /// 3 for qutrits, 2 for the leakage-free qubit model.
    size_t local_dim = 3;
    /// Optional custom initial state for one data qubit (index into data order), e.g. (|0>+|2>)/sqrt(2).
    int custom_data_index = -1;
    std::vector<cplx> custom_data_state;
    /// Extra single-qudit probes on the custom data qubit at the end of every round.
    std::vector<ComplexMatrix> custom_probes;
    /// CZ order within a surface-code round, as (dx, dy) offsets from the measure qubit.
    std::vector<std::pair<int, int>> x_order{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    std::vector<std::pair<int, int>> z_order{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
};

Circuit build_repetition_code(int d, int rounds, const NoiseModel &noise, const CodeOptions &options = {});
Circuit build_surface_code(int d, int rounds, const NoiseModel &noise, const CodeOptions &options = {});

}  // namespace leaksim

#endif
