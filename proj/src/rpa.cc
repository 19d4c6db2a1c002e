#include "leaksim/rpa.h"

#include <stdexcept>

namespace leaksim {

namespace {

ComplexMatrix local_projector(const SubspaceDecomposition &decomp, size_t q, size_t block) {
    ComplexMatrix p = ComplexMatrix::identity(1);
    for (size_t k = 0; k < decomp.num_qudits(); k++) {
        const auto &local = decomp.qudit(k);
        if (k == q) {
            ComplexMatrix x = local.embedding(block);
            p = kron(p, x * x.adjoint());
        } else {
            p = kron(p, ComplexMatrix::identity(local.local_dim));
        }
    }
    return p;
}

}  // namespace

double RpaChannel::conditional_trace_error() const {
    double worst = 0;
    for (size_t t = 0; t < by_source.size(); t++) {
        size_t dim = in_decomp.sector_dim(t);
        ComplexMatrix sum(dim, dim);
        for (const auto &b : by_source[t]) {
            sum += b.block.adjoint() * b.block;
        }
        worst = std::max(worst, max_abs_diff(sum, ComplexMatrix::identity(dim)));
    }
    return worst;
}

KrausChannel RpaChannel::to_split_channel() const {
    KrausChannel ch;
    ch.input_dim = in_decomp.total_dim();
    ch.output_dim = out_decomp.total_dim();
    for (const auto &[key, blocks] : block_map) {
        ComplexMatrix xs = out_decomp.embedding(key.first);
        ComplexMatrix xt = in_decomp.embedding(key.second);
        for (const auto &b : blocks) {
            ch.kraus.push_back(xs * b.block * xt.adjoint());
        }
    }
    return ch;
}

KrausChannel RpaChannel::to_twirled_channel() const {
    if (in_decomp.total_dim() != out_decomp.total_dim() || in_decomp.num_qudits() != out_decomp.num_qudits()) {
        throw std::invalid_argument("to_twirled_channel: channel is not square");
    }
    size_t n = in_decomp.num_qudits();
    std::vector<ComplexMatrix> ops = source_kraus_;
    for (size_t q = 0; q < n; q++) {
        size_t nb = in_decomp.qudit(q).blocks.size();
        std::vector<ComplexMatrix> proj;
        for (size_t r = 0; r < nb; r++) {
            proj.push_back(local_projector(in_decomp, q, r));
        }
        std::vector<ComplexMatrix> next;
        for (const auto &a : ops) {
            ComplexMatrix diag(a.rows(), a.cols());
            for (size_t r = 0; r < nb; r++) {
                diag += proj[r] * a * proj[r];
            }
            if (diag.max_abs() > 0) {
                next.push_back(diag);
            }
            for (size_t s = 0; s < nb; s++) {
                for (size_t t = 0; t < nb; t++) {
                    if (s == t) {
                        continue;
                    }
                    ComplexMatrix cross = proj[s] * a * proj[t];
                    if (cross.max_abs() > 0) {
                        next.push_back(cross);
                    }
                }
            }
        }
        ops = std::move(next);
    }
    KrausChannel ch;
    ch.input_dim = in_decomp.total_dim();
    ch.output_dim = out_decomp.total_dim();
    ch.kraus = std::move(ops);
    return ch;
}

RpaChannel rpa_transform(const KrausChannel &channel, const SubspaceDecomposition &in_decomp,
                         const SubspaceDecomposition &out_decomp, double tol) {
    if (channel.input_dim != in_decomp.total_dim() || channel.output_dim != out_decomp.total_dim()) {
        throw std::invalid_argument("rpa_transform: dimension mismatch");
    }
    double tp = channel.trace_preservation_error();
    if (tp > tol) {
        throw std::invalid_argument("rpa_transform: input channel is not trace preserving (error " +
                                    std::to_string(tp) + ")");
    }
    RpaChannel r;
    r.in_decomp = in_decomp;
    r.out_decomp = out_decomp;
    r.source_kraus_ = channel.kraus;
    r.by_source.resize(in_decomp.num_sectors());
    std::vector<ComplexMatrix> xs, xt;
    for (size_t s = 0; s < out_decomp.num_sectors(); s++) {
        xs.push_back(out_decomp.embedding(s).adjoint());
    }
    for (size_t t = 0; t < in_decomp.num_sectors(); t++) {
        xt.push_back(in_decomp.embedding(t));
    }
    for (size_t t = 0; t < in_decomp.num_sectors(); t++) {
        for (size_t j = 0; j < channel.kraus.size(); j++) {
            ComplexMatrix kx = channel.kraus[j] * xt[t];
            for (size_t s = 0; s < out_decomp.num_sectors(); s++) {
                ComplexMatrix b = xs[s] * kx;
                if (b.max_abs() <= tol) {
                    continue;
                }
                RpaBlock blk{j, s, t, std::move(b)};
                r.block_map[{s, t}].push_back(blk);
                r.by_source[t].push_back(std::move(blk));
            }
        }
    }
    return r;
}

RpaChannel rpa_transform(const KrausChannel &channel, const SubspaceDecomposition &decomp, double tol) {
    return rpa_transform(channel, decomp, decomp, tol);
}

}  // namespace leaksim
