#ifndef LEAKSIM_CHANNEL_H
#define LEAKSIM_CHANNEL_H

#include <string>
#include <vector>

#include "json.hpp"
#include "leaksim/linalg.h"

namespace leaksim {

constexpr double kDefaultTol = 1e-10;

/// A completely positive trace preserving map given by its Kraus operators.
/// Each operator has shape output_dim x input_dim.
struct KrausChannel {
    size_t input_dim = 0;
    size_t output_dim = 0;
    std::vector<ComplexMatrix> kraus;

    /// Validates shapes and trace preservation (to `tol`), throwing std::invalid_argument on failure.
    static KrausChannel make(std::vector<ComplexMatrix> kraus, double tol = kDefaultTol);
    static KrausChannel unitary(const ComplexMatrix &u);
    static KrausChannel identity(size_t dim);

    /// ||sum_j K_j^dag K_j - I||_max
    double trace_preservation_error() const;
    size_t size() const { return kraus.size(); }
};

/// One block of a qudit's local space.
struct LocalBlock {
    std::string label;
    std::vector<size_t> basis;
};

struct LocalDecomposition {
    size_t local_dim = 0;
    std::vector<LocalBlock> blocks;

    /// X_r: local_dim x block_dim isometry onto block r.
    ComplexMatrix embedding(size_t block) const;
    size_t block_of(size_t level) const;
};

/// Partition of each qudit's local space into labeled blocks. Sectors are products of blocks,
/// enumerated in mixed radix with qudit 0 most significant.
class SubspaceDecomposition {
   public:
    SubspaceDecomposition() = default;
    explicit SubspaceDecomposition(std::vector<LocalDecomposition> qudits);

    /// {c: |0>,|1>} and {2: |2>} on each of n qutrits.
    static SubspaceDecomposition qutrit_leakage(size_t n);
    /// A single block per qudit.
    static SubspaceDecomposition trivial(const std::vector<size_t> &dims);

    size_t num_qudits() const { return qudits_.size(); }
    size_t total_dim() const { return total_dim_; }
    size_t num_sectors() const { return num_sectors_; }
    const LocalDecomposition &qudit(size_t q) const { return qudits_[q]; }
    const std::vector<LocalDecomposition> &qudits() const { return qudits_; }

    std::vector<size_t> sector_blocks(size_t sector) const;
    size_t sector_from_blocks(const std::vector<size_t> &blocks) const;
    std::string sector_name(size_t sector) const;
    size_t sector_dim(size_t sector) const;
    /// Sector containing computational basis state `index`.
    size_t sector_of(size_t index) const;
    ComplexMatrix embedding(size_t sector) const;
    ComplexMatrix projector(size_t sector) const;
    /// Sector whose blocks are all labeled "c", or num_sectors() if there is none.
    size_t computational_sector() const;

   private:
    std::vector<LocalDecomposition> qudits_;
    size_t total_dim_ = 1;
    size_t num_sectors_ = 1;
};

/// sum_n P_n A P_n.
ComplexMatrix dephase(const ComplexMatrix &a, const SubspaceDecomposition &decomp);

struct IncoherenceReport {
    bool incoherent = true;
    bool strictly_incoherent = true;
    /// transition[j][n] = m when P_m K_j P_n is the only nonzero block in column n, -1 when none is.
    std::vector<std::vector<int>> transition;
};

IncoherenceReport is_incoherent_kraus_set(const KrausChannel &channel, const SubspaceDecomposition &in_decomp,
                                          const SubspaceDecomposition &out_decomp, double tol = kDefaultTol);
IncoherenceReport is_incoherent_kraus_set(const KrausChannel &channel, const SubspaceDecomposition &decomp,
                                          double tol = kDefaultTol);

/// (1/D^2) sum_j |Tr(P_C K_j)|^2 with D = Tr(P_C).
double process_fidelity(const KrausChannel &channel, const SubspaceDecomposition &decomp);

/// J[(i,a),(j,b)] = sum_k K_k[i,a] conj(K_k[j,b]), index (i,a) = i*input_dim + a.
ComplexMatrix channel_to_choi(const KrausChannel &channel);
KrausChannel choi_to_kraus(const ComplexMatrix &choi, size_t input_dim, size_t output_dim, double tol = kDefaultTol);
double choi_distance(const KrausChannel &a, const KrausChannel &b);

/// Row-major vectorization superoperator: vec(E(rho)) = S vec(rho), vec index i*d+j.
ComplexMatrix superoperator(const KrausChannel &channel);
/// Converts a row-major superoperator into a Choi matrix.
ComplexMatrix superoperator_to_choi(const ComplexMatrix &s, size_t input_dim, size_t output_dim);

ComplexMatrix apply_channel(const KrausChannel &channel, const ComplexMatrix &rho);
/// `second` after `first`.
KrausChannel compose(const KrausChannel &first, const KrausChannel &second);
KrausChannel tensor(const KrausChannel &a, const KrausChannel &b);
/// Minimal Kraus form via the Choi matrix.
KrausChannel compress(const KrausChannel &channel, double tol = kDefaultTol);

nlohmann::json channel_to_json(const KrausChannel &channel);
KrausChannel channel_from_json(const nlohmann::json &j, double tol = kDefaultTol);

}  // namespace leaksim

#endif
