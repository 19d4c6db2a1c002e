#ifndef LEAKSIM_RPA_H
#define LEAKSIM_RPA_H

#include <map>
#include <utility>
#include <vector>

#include "leaksim/channel.h"

namespace leaksim {

/// K_{j,s,t} = X_s^dag K_j X_t for one source sector t and target sector s.
struct RpaBlock {
    size_t j = 0;
    size_t target_sector = 0;
    size_t source_sector = 0;
    ComplexMatrix block;
};

/// Random-phase-approximated channel in block form. On incoherent states it acts by
/// sampling a block conditioned on the current sector of its input.
struct RpaChannel {
    SubspaceDecomposition in_decomp;
    SubspaceDecomposition out_decomp;
    std::map<std::pair<size_t, size_t>, std::vector<RpaBlock>> block_map;  // key (s, t)
    std::vector<std::vector<RpaBlock>> by_source;                          // ordered by j, then s

    size_t arity() const { return in_decomp.num_qudits(); }
    /// max over t of ||sum K_{j,s,t}^dag K_{j,s,t} - I||_max.
    double conditional_trace_error() const;
    /// Full-space Kraus operators X_s K_{j,s,t} X_t^dag, one per block. Equal to the twirled
    /// channel on block diagonal inputs.
    KrausChannel to_split_channel() const;
    /// The twirled channel itself, valid on all inputs (square channels only). Per qudit, the
    /// diagonal blocks of each Kraus operator are kept together.
    KrausChannel to_twirled_channel() const;

   private:
    friend RpaChannel rpa_transform(const KrausChannel &, const SubspaceDecomposition &,
                                    const SubspaceDecomposition &, double);
    std::vector<ComplexMatrix> source_kraus_;
};

RpaChannel rpa_transform(const KrausChannel &channel, const SubspaceDecomposition &in_decomp,
                         const SubspaceDecomposition &out_decomp, double tol = kDefaultTol);
RpaChannel rpa_transform(const KrausChannel &channel, const SubspaceDecomposition &decomp,
                         double tol = kDefaultTol);

}  // namespace leaksim

#endif
