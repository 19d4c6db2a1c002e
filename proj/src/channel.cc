#include "leaksim/channel.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace leaksim {

KrausChannel KrausChannel::make(std::vector<ComplexMatrix> kraus, double tol) {
    if (kraus.empty()) {
        throw std::invalid_argument("KrausChannel: no Kraus operators");
    }
    KrausChannel ch;
    ch.output_dim = kraus[0].rows();
    ch.input_dim = kraus[0].cols();
    for (const auto &k : kraus) {
        if (k.rows() != ch.output_dim || k.cols() != ch.input_dim) {
            throw std::invalid_argument("KrausChannel: inconsistent Kraus operator shapes");
        }
        if (!k.all_finite()) {
            throw std::invalid_argument("KrausChannel: non-finite Kraus entry");
        }
    }
    ch.kraus = std::move(kraus);
    double err = ch.trace_preservation_error();
    if (err > tol) {
        throw std::invalid_argument("KrausChannel: not trace preserving (error " + std::to_string(err) + ")");
    }
    return ch;
}

KrausChannel KrausChannel::unitary(const ComplexMatrix &u) {
    return make({u}, 1e-10);
}

KrausChannel KrausChannel::identity(size_t dim) {
    return make({ComplexMatrix::identity(dim)});
}

double KrausChannel::trace_preservation_error() const {
    ComplexMatrix sum(input_dim, input_dim);
    for (const auto &k : kraus) {
        for (size_t a = 0; a < input_dim; a++) {
            for (size_t b = 0; b < input_dim; b++) {
                cplx s = 0;
                for (size_t i = 0; i < output_dim; i++) {
                    s += std::conj(k(i, a)) * k(i, b);
                }
                sum(a, b) += s;
            }
        }
    }
    return max_abs_diff(sum, ComplexMatrix::identity(input_dim));
}

ComplexMatrix LocalDecomposition::embedding(size_t block) const {
    const auto &b = blocks.at(block);
    ComplexMatrix x(local_dim, b.basis.size());
    for (size_t k = 0; k < b.basis.size(); k++) {
        x(b.basis[k], k) = 1.0;
    }
    return x;
}

size_t LocalDecomposition::block_of(size_t level) const {
    for (size_t r = 0; r < blocks.size(); r++) {
        for (size_t v : blocks[r].basis) {
            if (v == level) {
                return r;
            }
        }
    }
    throw std::out_of_range("LocalDecomposition: level not covered by any block");
}

SubspaceDecomposition::SubspaceDecomposition(std::vector<LocalDecomposition> qudits) : qudits_(std::move(qudits)) {
    for (const auto &q : qudits_) {
        std::vector<int> seen(q.local_dim, 0);
        for (const auto &b : q.blocks) {
            if (b.basis.empty()) {
                throw std::invalid_argument("SubspaceDecomposition: empty block");
            }
            for (size_t v : b.basis) {
                if (v >= q.local_dim || seen[v]++) {
                    throw std::invalid_argument("SubspaceDecomposition: blocks do not partition the local space");
                }
            }
        }
        for (int s : seen) {
            if (s != 1) {
                throw std::invalid_argument("SubspaceDecomposition: blocks do not partition the local space");
            }
        }
        total_dim_ *= q.local_dim;
        num_sectors_ *= q.blocks.size();
    }
}

SubspaceDecomposition SubspaceDecomposition::qutrit_leakage(size_t n) {
    LocalDecomposition q{3, {{"c", {0, 1}}, {"2", {2}}}};
    return SubspaceDecomposition(std::vector<LocalDecomposition>(n, q));
}

SubspaceDecomposition SubspaceDecomposition::trivial(const std::vector<size_t> &dims) {
    std::vector<LocalDecomposition> qs;
    for (size_t d : dims) {
        LocalBlock b{"all", {}};
        for (size_t k = 0; k < d; k++) {
            b.basis.push_back(k);
        }
        qs.push_back({d, {b}});
    }
    return SubspaceDecomposition(qs);
}

std::vector<size_t> SubspaceDecomposition::sector_blocks(size_t sector) const {
    std::vector<size_t> r(qudits_.size());
    for (size_t q = qudits_.size(); q-- > 0;) {
        size_t nb = qudits_[q].blocks.size();
        r[q] = sector % nb;
        sector /= nb;
    }
    return r;
}

size_t SubspaceDecomposition::sector_from_blocks(const std::vector<size_t> &blocks) const {
    size_t s = 0;
    for (size_t q = 0; q < qudits_.size(); q++) {
        s = s * qudits_[q].blocks.size() + blocks[q];
    }
    return s;
}

std::string SubspaceDecomposition::sector_name(size_t sector) const {
    auto b = sector_blocks(sector);
    std::string r;
    for (size_t q = 0; q < b.size(); q++) {
        r += (q ? "," : "") + qudits_[q].blocks[b[q]].label;
    }
    return r;
}

size_t SubspaceDecomposition::sector_dim(size_t sector) const {
    auto b = sector_blocks(sector);
    size_t d = 1;
    for (size_t q = 0; q < b.size(); q++) {
        d *= qudits_[q].blocks[b[q]].basis.size();
    }
    return d;
}

size_t SubspaceDecomposition::sector_of(size_t index) const {
    std::vector<size_t> blocks(qudits_.size());
    for (size_t q = qudits_.size(); q-- > 0;) {
        blocks[q] = qudits_[q].block_of(index % qudits_[q].local_dim);
        index /= qudits_[q].local_dim;
    }
    return sector_from_blocks(blocks);
}

ComplexMatrix SubspaceDecomposition::embedding(size_t sector) const {
    auto b = sector_blocks(sector);
    ComplexMatrix x = ComplexMatrix::identity(1);
    for (size_t q = 0; q < b.size(); q++) {
        x = kron(x, qudits_[q].embedding(b[q]));
    }
    return x;
}

ComplexMatrix SubspaceDecomposition::projector(size_t sector) const {
    ComplexMatrix p(total_dim_, total_dim_);
    for (size_t i = 0; i < total_dim_; i++) {
        if (sector_of(i) == sector) {
            p(i, i) = 1.0;
        }
    }
    return p;
}

size_t SubspaceDecomposition::computational_sector() const {
    std::vector<size_t> blocks(qudits_.size());
    for (size_t q = 0; q < qudits_.size(); q++) {
        bool found = false;
        for (size_t r = 0; r < qudits_[q].blocks.size(); r++) {
            if (qudits_[q].blocks[r].label == "c") {
                blocks[q] = r;
                found = true;
            }
        }
        if (!found) {
            return num_sectors_;
        }
    }
    return sector_from_blocks(blocks);
}

ComplexMatrix dephase(const ComplexMatrix &a, const SubspaceDecomposition &decomp) {
    if (!a.is_square() || a.rows() != decomp.total_dim()) {
        throw std::invalid_argument("dephase: dimension mismatch");
    }
    size_t n = a.rows();
    std::vector<size_t> sec(n);
    for (size_t i = 0; i < n; i++) {
        sec[i] = decomp.sector_of(i);
    }
    ComplexMatrix r(n, n);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = 0; j < n; j++) {
            if (sec[i] == sec[j]) {
                r(i, j) = a(i, j);
            }
        }
    }
    return r;
}

IncoherenceReport is_incoherent_kraus_set(const KrausChannel &channel, const SubspaceDecomposition &in_decomp,
                                          const SubspaceDecomposition &out_decomp, double tol) {
    if (channel.input_dim != in_decomp.total_dim() || channel.output_dim != out_decomp.total_dim()) {
        throw std::invalid_argument("is_incoherent_kraus_set: dimension mismatch");
    }
    std::vector<size_t> in_sec(channel.input_dim);
    std::vector<size_t> out_sec(channel.output_dim);
    for (size_t a = 0; a < channel.input_dim; a++) {
        in_sec[a] = in_decomp.sector_of(a);
    }
    for (size_t i = 0; i < channel.output_dim; i++) {
        out_sec[i] = out_decomp.sector_of(i);
    }
    IncoherenceReport rep;
    for (const auto &k : channel.kraus) {
        // block_max[m][n] = max |entry| of P_m K P_n
        std::vector<std::vector<double>> block_max(out_decomp.num_sectors(),
                                                   std::vector<double>(in_decomp.num_sectors(), 0.0));
        for (size_t i = 0; i < channel.output_dim; i++) {
            for (size_t a = 0; a < channel.input_dim; a++) {
                auto &b = block_max[out_sec[i]][in_sec[a]];
                b = std::max(b, std::abs(k(i, a)));
            }
        }
        std::vector<int> row(in_decomp.num_sectors(), -1);
        std::vector<int> hit(out_decomp.num_sectors(), 0);
        for (size_t n = 0; n < in_decomp.num_sectors(); n++) {
            int count = 0;
            for (size_t m = 0; m < out_decomp.num_sectors(); m++) {
                if (block_max[m][n] > tol) {
                    count++;
                    row[n] = (int)m;
                }
            }
            if (count > 1) {
                rep.incoherent = false;
                row[n] = -1;
            } else if (count == 1 && hit[row[n]]++) {
                rep.strictly_incoherent = false;
            }
        }
        rep.transition.push_back(row);
    }
    if (!rep.incoherent) {
        rep.strictly_incoherent = false;
    }
    return rep;
}

IncoherenceReport is_incoherent_kraus_set(const KrausChannel &channel, const SubspaceDecomposition &decomp,
                                          double tol) {
    return is_incoherent_kraus_set(channel, decomp, decomp, tol);
}

double process_fidelity(const KrausChannel &channel, const SubspaceDecomposition &decomp) {
    if (channel.input_dim != channel.output_dim || channel.input_dim != decomp.total_dim()) {
        throw std::invalid_argument("process_fidelity: dimension mismatch");
    }
    size_t cs = decomp.computational_sector();
    if (cs == decomp.num_sectors()) {
        throw std::invalid_argument("process_fidelity: decomposition has no computational sector");
    }
    std::vector<size_t> comp;
    for (size_t i = 0; i < decomp.total_dim(); i++) {
        if (decomp.sector_of(i) == cs) {
            comp.push_back(i);
        }
    }
    double d = (double)comp.size();
    double f = 0;
    for (const auto &k : channel.kraus) {
        cplx t = 0;
        for (size_t i : comp) {
            t += k(i, i);
        }
        f += std::norm(t);
    }
    return f / (d * d);
}

ComplexMatrix channel_to_choi(const KrausChannel &channel) {
    size_t din = channel.input_dim;
    size_t n = din * channel.output_dim;
    ComplexMatrix j(n, n);
    for (const auto &k : channel.kraus) {
        const auto &v = k.data();  // row-major data is exactly vec with index i*din + a
        for (size_t x = 0; x < n; x++) {
            if (v[x] == cplx(0)) {
                continue;
            }
            for (size_t y = 0; y < n; y++) {
                j(x, y) += v[x] * std::conj(v[y]);
            }
        }
    }
    return j;
}

KrausChannel choi_to_kraus(const ComplexMatrix &choi, size_t input_dim, size_t output_dim, double tol) {
    size_t n = input_dim * output_dim;
    if (choi.rows() != n || choi.cols() != n) {
        throw std::invalid_argument("choi_to_kraus: dimension mismatch");
    }
    // Split into connected components of the nonzero pattern so that Kraus operators respect any block
    // structure of the channel.
    double scale = choi.max_abs();
    double cut = 1e-15 * scale;
    std::vector<size_t> comp(n, SIZE_MAX);
    std::vector<std::vector<size_t>> comps;
    for (size_t s = 0; s < n; s++) {
        if (comp[s] != SIZE_MAX) {
            continue;
        }
        std::vector<size_t> members{s};
        comp[s] = comps.size();
        for (size_t h = 0; h < members.size(); h++) {
            size_t x = members[h];
            for (size_t y = 0; y < n; y++) {
                if (comp[y] == SIZE_MAX && (std::abs(choi(x, y)) > cut || std::abs(choi(y, x)) > cut)) {
                    comp[y] = comps.size();
                    members.push_back(y);
                }
            }
        }
        std::sort(members.begin(), members.end());
        comps.push_back(members);
    }

    struct Term {
        double value;
        size_t order;
        std::vector<cplx> vec;
    };
    std::vector<Term> terms;
    double max_eig = 0;
    for (const auto &members : comps) {
        size_t m = members.size();
        ComplexMatrix sub(m, m);
        for (size_t x = 0; x < m; x++) {
            for (size_t y = 0; y < m; y++) {
                sub(x, y) = choi(members[x], members[y]);
            }
        }
        auto eig = hermitian_eigen(sub);
        for (size_t k = 0; k < m; k++) {
            max_eig = std::max(max_eig, eig.values[k]);
        }
        for (size_t k = m; k-- > 0;) {
            double lam = eig.values[k];
            std::vector<cplx> vec(n);
            size_t arg = 0;
            for (size_t x = 0; x < m; x++) {
                vec[members[x]] = eig.vectors(x, k);
                if (std::abs(eig.vectors(x, k)) > std::abs(vec[members[arg]]) + 1e-12) {
                    arg = x;
                }
            }
            cplx ph = std::abs(vec[members[arg]]) > 0 ? std::conj(vec[members[arg]]) / std::abs(vec[members[arg]]) : 1.0;
            for (auto &e : vec) {
                e *= ph;
            }
            terms.push_back({lam, terms.size(), std::move(vec)});
        }
    }
    for (const auto &t : terms) {
        if (t.value < -1e-9 * std::max(1.0, max_eig)) {
            throw std::invalid_argument("choi_to_kraus: Choi matrix is not positive semidefinite (eigenvalue " +
                                        std::to_string(t.value) + ")");
        }
    }
    std::stable_sort(terms.begin(), terms.end(), [](const Term &a, const Term &b) { return a.value > b.value; });
    KrausChannel ch;
    ch.input_dim = input_dim;
    ch.output_dim = output_dim;
    for (const auto &t : terms) {
        if (t.value <= tol) {
            continue;
        }
        double s = std::sqrt(t.value);
        ComplexMatrix k(output_dim, input_dim);
        for (size_t x = 0; x < n; x++) {
            k.data()[x] = s * t.vec[x];
        }
        ch.kraus.push_back(std::move(k));
    }
    if (ch.kraus.empty()) {
        throw std::invalid_argument("choi_to_kraus: Choi matrix has no eigenvalue above tolerance");
    }
    return ch;
}

double choi_distance(const KrausChannel &a, const KrausChannel &b) {
    return max_abs_diff(channel_to_choi(a), channel_to_choi(b));
}

ComplexMatrix superoperator(const KrausChannel &channel) {
    size_t din = channel.input_dim;
    size_t dout = channel.output_dim;
    ComplexMatrix s(dout * dout, din * din);
    for (const auto &k : channel.kraus) {
        for (size_t i = 0; i < dout; i++) {
            for (size_t a = 0; a < din; a++) {
                cplx kia = k(i, a);
                if (kia == cplx(0)) {
                    continue;
                }
                for (size_t j = 0; j < dout; j++) {
                    for (size_t b = 0; b < din; b++) {
                        s(i * dout + j, a * din + b) += kia * std::conj(k(j, b));
                    }
                }
            }
        }
    }
    return s;
}

ComplexMatrix superoperator_to_choi(const ComplexMatrix &s, size_t input_dim, size_t output_dim) {
    if (s.rows() != output_dim * output_dim || s.cols() != input_dim * input_dim) {
        throw std::invalid_argument("superoperator_to_choi: dimension mismatch");
    }
    size_t n = input_dim * output_dim;
    ComplexMatrix j(n, n);
    for (size_t i = 0; i < output_dim; i++) {
        for (size_t jj = 0; jj < output_dim; jj++) {
            for (size_t a = 0; a < input_dim; a++) {
                for (size_t b = 0; b < input_dim; b++) {
                    j(i * input_dim + a, jj * input_dim + b) = s(i * output_dim + jj, a * input_dim + b);
                }
            }
        }
    }
    return j;
}

ComplexMatrix apply_channel(const KrausChannel &channel, const ComplexMatrix &rho) {
    if (rho.rows() != channel.input_dim || rho.cols() != channel.input_dim) {
        throw std::invalid_argument("apply_channel: dimension mismatch");
    }
    ComplexMatrix out(channel.output_dim, channel.output_dim);
    for (const auto &k : channel.kraus) {
        out += k * rho * k.adjoint();
    }
    return out;
}

KrausChannel compose(const KrausChannel &first, const KrausChannel &second) {
    if (first.output_dim != second.input_dim) {
        throw std::invalid_argument("compose: dimension mismatch");
    }
    KrausChannel ch;
    ch.input_dim = first.input_dim;
    ch.output_dim = second.output_dim;
    for (const auto &b : second.kraus) {
        for (const auto &a : first.kraus) {
            ch.kraus.push_back(b * a);
        }
    }
    return ch;
}

KrausChannel tensor(const KrausChannel &a, const KrausChannel &b) {
    KrausChannel ch;
    ch.input_dim = a.input_dim * b.input_dim;
    ch.output_dim = a.output_dim * b.output_dim;
    for (const auto &x : a.kraus) {
        for (const auto &y : b.kraus) {
            ch.kraus.push_back(kron(x, y));
        }
    }
    return ch;
}

KrausChannel compress(const KrausChannel &channel, double tol) {
    return choi_to_kraus(channel_to_choi(channel), channel.input_dim, channel.output_dim, tol);
}

nlohmann::json channel_to_json(const KrausChannel &channel) {
    nlohmann::json ks = nlohmann::json::array();
    for (const auto &k : channel.kraus) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto &x : k.data()) {
            entries.push_back({x.real(), x.imag()});
        }
        ks.push_back(entries);
    }
    return {{"input_dim", channel.input_dim}, {"output_dim", channel.output_dim}, {"kraus", ks}};
}

KrausChannel channel_from_json(const nlohmann::json &j, double tol) {
    if (!j.is_object() || !j.contains("input_dim") || !j.contains("output_dim") || !j.contains("kraus")) {
        throw std::invalid_argument("channel json: expected object with input_dim, output_dim, kraus");
    }
    size_t din = j.at("input_dim").get<size_t>();
    size_t dout = j.at("output_dim").get<size_t>();
    std::vector<ComplexMatrix> ks;
    for (const auto &k : j.at("kraus")) {
        std::vector<cplx> entries;
        for (const auto &e : k) {
            if (!e.is_array() || e.size() != 2) {
                throw std::invalid_argument("channel json: entries must be [re, im] pairs");
            }
            entries.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        ks.emplace_back(dout, din, std::move(entries));
    }
    return KrausChannel::make(std::move(ks), tol);
}

}  // namespace leaksim
