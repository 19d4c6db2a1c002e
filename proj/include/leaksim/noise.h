#ifndef LEAKSIM_NOISE_H
#define LEAKSIM_NOISE_H

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaksim/channel.h"

namespace leaksim {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Decoherence times in microseconds. Infinity disables the corresponding term.
struct DecoherenceParams {
    double T1 = kInf;    // |1> -> |0>
    double Tphi = kInf;  // dephasing, L = sqrt(2/Tphi) n
    double T_L = kInf;   // |2> -> |1>
    double T_h = kInf;   // heating, L = a^dag / sqrt(T_h)
    double heat01 = 1;   // weight of the |0> -> |1> heating term; 0 leaves only |1> -> |2>

    bool operator==(const DecoherenceParams &) const = default;
};

struct CzGateParams {
    double p = 0;             // |11> <-> |02> transition probability
    double phi_t = 0;         // transition phase (rad)
    double phi = 1.5707963267948966;  // controlled leakage phase phi02 - phi12 (rad)
    double phi12 = 0;         // phase offset of |12>
    double eta = 0;           // nonlinearity (GHz)
    double duration = 25;     // ns
    int leaking_qudit = 1;    // 0 = first operand, 1 = second operand

    bool operator==(const CzGateParams &) const = default;
};

/// Durations in nanoseconds.
struct GateDurations {
    double unitary = 25;
    double reset = 600;
    double measure = 300;

    bool operator==(const GateDurations &) const = default;
};

struct NoiseModel {
    std::string name = "noiseless";
    DecoherenceParams deco;
    CzGateParams cz;
    GateDurations durations;
    /// Nonlinearity phase accrued by leaked amplitudes during every timed window (GHz).
    double eta = 0;
    /// Per-qudit replacements of `deco`, keyed by qudit name.
    std::map<std::string, DecoherenceParams> qudit_deco;

    const DecoherenceParams &decoherence_of(const std::string &qudit) const {
        auto it = qudit_deco.find(qudit);
        return it == qudit_deco.end() ? deco : it->second;
    }
};

/// The Lindblad jump operators for a qudit of dimension 2 or 3.
std::vector<ComplexMatrix> lindblad_operators(const DecoherenceParams &params, size_t local_dim = 3);
/// Row-major superoperator of sum_i D[L_i] (per microsecond).
ComplexMatrix lindbladian(const std::vector<ComplexMatrix> &ops);
/// exp(t sum_i D[L_i]) with t in nanoseconds.
KrausChannel lindblad_channel(const DecoherenceParams &params, double t_ns, size_t local_dim = 3);

/// diag(1, 1, exp(-2 pi i eta t)) for eta in GHz and t in ns.
ComplexMatrix leaked_phase(double eta, double t_ns, size_t local_dim = 3);
/// Two-qutrit CZ with phases, nonlinearity and coherent |11> <-> |02> leakage.
ComplexMatrix cz_unitary(const CzGateParams &params);
KrausChannel cz_gate(const CzGateParams &params);

ComplexMatrix hadamard(size_t local_dim = 3);
ComplexMatrix pauli_x(size_t local_dim = 3);

/// Idealized stabilizer-cycle Kraus pair on (data qutrit) x (rest parity qubit).
KrausChannel stabilizer_cz_kraus(double phi);

/// Named presets: noiseless, thermal, coherent, physical.
NoiseModel noise_preset(const std::string &name);
std::vector<std::string> noise_preset_names();
/// Same model with heating and coherent leakage removed.
NoiseModel leak_free(NoiseModel model);
/// Applies overrides from a json object on top of `base`. Times accept numbers or "inf".
NoiseModel noise_from_json(const nlohmann::json &j, NoiseModel base);
nlohmann::json noise_to_json(const NoiseModel &model);

}  // namespace leaksim

#endif
