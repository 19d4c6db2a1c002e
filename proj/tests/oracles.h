#ifndef LEAKSIM_TESTS_ORACLES_H
#define LEAKSIM_TESTS_ORACLES_H

// Independent reference computations used by unit and acceptance tests.

#include <cmath>
#include <vector>

#include "leaksim/channel.h"

namespace leaksim::oracle {

/// Averages Ad(U^dag) o E o Ad(U) over U = sum_{q,r} exp(i phi_{q,r}) P_{q,r}, one phase variable per
/// (qudit, block), each on a uniform `points`-point grid. Variables are averaged one at a time, which
/// equals the full product-grid average. Works on the row-major superoperator, returns its Choi matrix.
/// With `dephase_input`, the input is dephased first.
inline ComplexMatrix phase_grid_twirl_choi(const KrausChannel &channel, const SubspaceDecomposition &decomp,
                                           int points = 64, bool dephase_input = false) {
    size_t d = channel.input_dim;
    ComplexMatrix s = superoperator(channel);
    size_t n = decomp.num_qudits();
    // level[q][i] = local level of qudit q in basis index i.
    std::vector<std::vector<size_t>> level(n, std::vector<size_t>(d));
    for (size_t i = 0; i < d; i++) {
        size_t rem = i;
        for (size_t q = n; q-- > 0;) {
            level[q][i] = rem % decomp.qudit(q).local_dim;
            rem /= decomp.qudit(q).local_dim;
        }
    }
    const double two_pi = 6.283185307179586;
    for (size_t q = 0; q < n; q++) {
        const auto &local = decomp.qudit(q);
        for (size_t r = 0; r < local.blocks.size(); r++) {
            // u_i = exp(i phi) when basis state i has qudit q inside block r.
            std::vector<int> in_block(d);
            for (size_t i = 0; i < d; i++) {
                in_block[i] = local.block_of(level[q][i]) == r;
            }
            ComplexMatrix acc(d * d, d * d);
            for (int k = 0; k < points; k++) {
                double phi = two_pi * k / points;
                cplx e = std::polar(1.0, phi);
                std::vector<cplx> u(d);
                for (size_t i = 0; i < d; i++) {
                    u[i] = in_block[i] ? e : 1.0;
                }
                // Ad(U)(rho) = U rho U^dag: superop diag entry u_a conj(u_b). Ad(U^dag) uses conj(u_i) u_j.
                for (size_t i = 0; i < d; i++) {
                    for (size_t j = 0; j < d; j++) {
                        cplx left = std::conj(u[i]) * u[j];
                        for (size_t a = 0; a < d; a++) {
                            for (size_t b = 0; b < d; b++) {
                                cplx right = u[a] * std::conj(u[b]);
                                acc(i * d + j, a * d + b) += left * s(i * d + j, a * d + b) * right;
                            }
                        }
                    }
                }
            }
            acc *= 1.0 / points;
            s = acc;
        }
    }
    if (dephase_input) {
        for (size_t a = 0; a < d; a++) {
            for (size_t b = 0; b < d; b++) {
                if (decomp.sector_of(a) != decomp.sector_of(b)) {
                    for (size_t x = 0; x < d * d; x++) {
                        s(x, a * d + b) = 0;
                    }
                }
            }
        }
    }
    return superoperator_to_choi(s, d, d);
}

/// Density matrix of a pure state column.
inline ComplexMatrix projector_of(const std::vector<cplx> &psi) {
    ComplexMatrix v = ComplexMatrix::column(psi);
    return v * v.adjoint();
}

}  // namespace leaksim::oracle

#endif
