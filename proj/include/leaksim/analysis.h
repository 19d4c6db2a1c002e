#ifndef LEAKSIM_ANALYSIS_H
#define LEAKSIM_ANALYSIS_H

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaksim/circuit.h"
#include "leaksim/decoder.h"
#include "leaksim/engine.h"

namespace leaksim {

/// Logical error probability per round count k = 1..K.
struct LogicalCurve {
    std::vector<int> rounds;
    std::vector<double> p;
    std::vector<double> stderr_;  // empty or zero for exact data
};

struct FitOptions {
    /// Inclusive round window; k_max <= 0 means the last round.
    int k_min = 3;
    int k_max = 0;
};

/// F_L(k) = 1 - 2 P_L(k) = A (1 - 2 eps)^k, fitted as a straight line in log F_L.
struct FitResult {
    double A = 1;
    double eps = 0;
    double A_err = 0;
    double eps_err = 0;
    /// Covariance of (ln A, ln(1 - 2 eps)).
    double cov[2][2] = {{0, 0}, {0, 0}};
    int k_min = 0;
    int k_max = 0;
    /// Rounds dropped because F_L <= 0.
    std::vector<int> excluded;
};

/// Weighted least squares when standard errors are given, ordinary otherwise.
/// Throws std::invalid_argument with fewer than two usable points.
FitResult fit_logical_error(const LogicalCurve &curve, const FitOptions &options = {});
nlohmann::json fit_to_json(const FitResult &fit);

/// Theoretical decay of the |c><2| coherence after m stabilizer interactions with leaked phase phi.
double coherence_decay(double phi, int m, int c);
/// Probability of exactly m0 zero outcomes in m measurements of a stabilizer next to a leaked
/// data qubit. rest_parity is the Z parity of the other data qubits of the stabilizer; parity 0
/// gives each zero outcome probability cos^2(phi/2).
double leaked_outcome_pmf(double phi, int m, int m0, int rest_parity = 0);

struct RateModel {
    double g01 = 0;  // |1> -> |0| per microsecond
    double g12 = 0;  // |2> -> |1>
    double g21 = 0;  // |1> -> |2>
    double T_r = 1;  // round duration, microseconds
};

/// P2(k) = (G+/G)(1 - (1 - G)^k), G+ = T_r/T_h, G- = T_r/T_L, for k = 0..k_max.
std::vector<double> difference_eq_p2(double T_r, double T_h, double T_L, int k_max);
/// Third component of (M exp(R T_r))^k (1, 0, 0), for k = 0..k_max.
std::vector<double> markov3_p2(const RateModel &model, int k_max);
/// The Markov generator R and the stabilizer projection M.
ComplexMatrix markov3_generator(const RateModel &model);
ComplexMatrix markov3_projection();

struct Gamma21Fit {
    double g21 = 0;
    double residual = 0;  // weighted sum of squares
    int iterations = 0;
    bool converged = false;
    /// Thermal parameters reproducing the fitted rates: T_h = 2 / g21 and no 0 -> 1 heating.
    DecoherenceParams effective;
};

/// Fits g21 of the Markov model to P2(k), k = 1..K (entry k-1), with g01 and g12 held fixed.
Gamma21Fit fit_gamma21(const std::vector<double> &p2, const std::vector<double> &p2_err, const RateModel &fixed,
                       const DecoherenceParams &physical);

/// Effective incoherent model: the physical decoherence with 1 -> 2 heating at g21 and no CZ leakage.
NoiseModel thermal_approximation(const NoiseModel &coherent, const Gamma21Fit &fit);
/// Same with one fitted heating time per named qudit; other qudits keep the physical decoherence.
NoiseModel thermal_approximation(const NoiseModel &coherent, const std::vector<std::string> &qudits,
                                 const std::vector<Gamma21Fit> &fits);

/// Streaming statistics of a memory experiment. Shots are assigned to jackknife blocks by
/// shot index, so two ensembles with the same shot numbering share their blocks.
class ShotStatistics {
   public:
    ShotStatistics(const CodeLayout &layout, int blocks = 20);

    /// Aborted trajectories are counted and otherwise skipped.
    void add(const TrajectoryRecord &record, const Decoder *decoder);
    void merge(const ShotStatistics &other);

    int rounds() const { return rounds_; }
    int blocks() const { return blocks_; }
    uint64_t shots() const { return shots_; }
    uint64_t aborted() const { return aborted_; }
    uint64_t greedy_decodes() const { return greedy_; }
    bool has_logical() const { return decoded_; }

    LogicalCurve logical_curve() const;
    /// Curve without block `skip` (jackknife replicate).
    LogicalCurve logical_curve_without(int skip) const;
    /// Detection event fraction [stabilizer][round]; NaN where undefined.
    std::vector<std::vector<double>> def() const;
    /// Mean P2 [data index][round] and its standard error.
    std::vector<std::vector<double>> p2_mean() const;
    std::vector<std::vector<double>> p2_stderr() const;
    /// P2 averaged over data qubits per round, with standard error of that mean.
    std::vector<double> p2_average() const;
    std::vector<double> p2_average_stderr() const;

   private:
    int rounds_ = 0;
    int blocks_ = 1;
    size_t stabilizers_ = 0;
    size_t data_ = 0;
    std::vector<std::vector<int>> probes_;  // [round][data]
    uint64_t shots_ = 0;
    uint64_t aborted_ = 0;
    uint64_t greedy_ = 0;
    bool decoded_ = false;
    std::vector<uint64_t> block_shots_;
    std::vector<std::vector<uint64_t>> fails_;        // [block][round]
    std::vector<std::vector<uint64_t>> events_;       // [stabilizer][round]
    std::vector<std::vector<uint64_t>> event_trials_;
    std::vector<std::vector<double>> p2_sum_, p2_sq_;  // [data][round]
    std::vector<double> p2_avg_sum_, p2_avg_sq_;       // [round]
};

/// Independent fits of the per-data-qudit P2 curves of `stats`. Rounds without any observed
/// leakage borrow the smallest nonzero standard error of that curve.
std::vector<Gamma21Fit> fit_gamma21_per_qudit(const ShotStatistics &stats, const RateModel &fixed,
                                              const DecoherenceParams &physical);

/// Difference of fitted rates, leaky minus baseline.
struct AddedRate {
    double value = 0;
    double unpaired_err = 0;
    /// Jackknife over shared shot blocks; NaN when the block layouts differ.
    double paired_err = 0;
    FitResult leaky, baseline;
};

AddedRate added_logical_error(const ShotStatistics &leaky, const ShotStatistics &baseline,
                              const FitOptions &options = {});
/// Per-round added logical error probability, leaky minus baseline, for k = 1..K.
std::vector<double> added_logical_curve(const ShotStatistics &leaky, const ShotStatistics &baseline);
/// Mean over k of |approx(k) - reference(k)| / |reference(k)|, skipping reference zeros.
double mean_percentage_error(const std::vector<double> &approx, const std::vector<double> &reference);

/// Mean of a [stabilizer][round] table over rounds >= first_round, ignoring NaN.
double long_time_mean(const std::vector<std::vector<double>> &table, int first_round,
                      const std::vector<int> &stabilizers = {});
std::vector<std::vector<double>> table_difference(const std::vector<std::vector<double>> &a,
                                                  const std::vector<std::vector<double>> &b);

std::string logical_csv(const LogicalCurve &curve);
std::string def_csv(const std::vector<std::vector<double>> &def, const CodeLayout &layout);
std::string p2_csv(const ShotStatistics &stats, const Circuit &circuit);

}  // namespace leaksim

#endif
