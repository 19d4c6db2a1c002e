#ifndef LEAKSIM_ENGINE_H
#define LEAKSIM_ENGINE_H

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaksim/circuit.h"
#include "leaksim/scheduler.h"

namespace leaksim {

/// exact3: full local spaces. rpa: each qudit carries a subspace label and only that block is stored.
/// qubit_only: full local spaces on a circuit built with local dimension 2.
enum class SimMode { exact3, rpa, qubit_only };

std::string mode_name(SimMode mode);
SimMode mode_from_name(const std::string &name);

struct EngineOptions {
    SimMode mode = SimMode::rpa;
    /// Merge single-qudit channels into neighbouring operations at compile time.
    bool fuse = true;
    /// Allowed mismatch between sampled and realized probability, and between the total
    /// candidate probability and 1.
    double norm_tol = 1e-8;
    bool log_samples = false;
};

/// Counter-based random numbers: one independent stream per (seed, shot, op, draw).
double uniform01(uint64_t seed, uint64_t shot, uint64_t op_uid, uint64_t counter);

struct TrajectoryRecord {
    uint64_t shot = 0;
    std::vector<int8_t> registers;
    std::vector<std::complex<double>> probes;
    bool aborted = false;
    std::string abort_reason;
    size_t peak_vector_length = 0;
    int peak_alive = 0;
    /// (op uid, sampled candidate) for every sampled quantum operation, when enabled.
    std::vector<std::pair<int, int>> samples;
};

nlohmann::json record_to_json(const TrajectoryRecord &record);

class CompiledCircuit;

/// Circuit lowered to engine instructions for one simulation mode. Immutable and shareable.
class Engine {
   public:
    Engine(const Circuit &circuit, const Schedule &schedule, EngineOptions options = {});
    ~Engine();
    Engine(const Engine &) = delete;
    Engine &operator=(const Engine &) = delete;

    const Circuit &circuit() const { return circuit_; }
    const EngineOptions &options() const { return options_; }
    size_t num_instructions() const;

    TrajectoryRecord run(uint64_t seed, uint64_t shot) const;

    /// Runs shots [first, first + count) on `workers` threads; `consume` sees records in shot order.
    void run_batch(uint64_t seed, uint64_t first, uint64_t count, int workers,
                   const std::function<void(const TrajectoryRecord &)> &consume) const;

   private:
    Circuit circuit_;
    EngineOptions options_;
    std::unique_ptr<CompiledCircuit> compiled_;
};

}  // namespace leaksim

#endif
