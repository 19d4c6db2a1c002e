#include "leaksim/engine.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "leaksim/rpa.h"

namespace leaksim {

namespace {

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr size_t kMaxLocal = 9;

struct SparseEntry {
    uint8_t row;
    uint8_t col;
    cplx value;
};

struct Candidate {
    size_t din = 0;
    size_t dout = 0;
    std::vector<SparseEntry> entries;
    ComplexMatrix gram;  // B^dag B
    std::vector<cplx> column;  // create: the block as a column
    std::vector<uint8_t> out_labels;
    double weight = 0;
    int kraus_index = 0;
};

enum class InstrType { apply, create, measure, classical, probe, snapshot };

struct Instr {
    InstrType type = InstrType::apply;
    int uid = 0;
    std::vector<int> qudits;
    int cond_reg = -1;
    int cond_val = 1;
    std::vector<std::vector<Candidate>> by_source;
    int reg = -1;
    std::vector<int> regs;
    std::shared_ptr<const ClassicalFunction> fn;
    std::vector<ComplexMatrix> obs_by_label;
};

LocalDecomposition local_decomposition(size_t dim, SimMode mode) {
    if (mode == SimMode::rpa && dim == 3) {
        return SubspaceDecomposition::qutrit_leakage(1).qudit(0);
    }
    return SubspaceDecomposition::trivial({dim}).qudit(0);
}

Candidate make_candidate(const RpaBlock &b, const SubspaceDecomposition &out) {
    Candidate c;
    c.din = b.block.cols();
    c.dout = b.block.rows();
    c.kraus_index = (int)b.j;
    double scale = b.block.max_abs();
    for (size_t r = 0; r < c.dout; r++) {
        for (size_t k = 0; k < c.din; k++) {
            cplx v = b.block(r, k);
            if (std::abs(v) > 1e-15 * scale) {
                c.entries.push_back({(uint8_t)r, (uint8_t)k, v});
            }
        }
    }
    c.gram = b.block.adjoint() * b.block;
    c.weight = c.gram.trace().real() / (double)c.din;
    if (c.din == 1) {
        for (size_t r = 0; r < c.dout; r++) {
            c.column.push_back(b.block(r, 0));
        }
    }
    for (size_t blk : out.sector_blocks(b.target_sector)) {
        c.out_labels.push_back((uint8_t)blk);
    }
    return c;
}

std::vector<std::vector<Candidate>> lower_channel(const KrausChannel &ch, const SubspaceDecomposition &in,
                                                  const SubspaceDecomposition &out) {
    RpaChannel r = rpa_transform(ch, in, out);
    std::vector<std::vector<Candidate>> by_source(r.by_source.size());
    for (size_t t = 0; t < r.by_source.size(); t++) {
        for (const auto &b : r.by_source[t]) {
            by_source[t].push_back(make_candidate(b, out));
        }
        std::stable_sort(by_source[t].begin(), by_source[t].end(),
                         [](const Candidate &a, const Candidate &b) { return a.weight > b.weight; });
    }
    return by_source;
}

/// Memoized channel algebra keyed on operand identity.
class Fuser {
   public:
    using Ptr = std::shared_ptr<const KrausChannel>;

    Ptr then(const Ptr &first, const Ptr &second) { return get(0, 0, first, second); }
    Ptr before_gate(const Ptr &single, int slot, const Ptr &gate) { return get(1, slot, single, gate); }
    Ptr after_gate(const Ptr &gate, int slot, const Ptr &single) { return get(2, slot, gate, single); }

    Ptr split(const Ptr &ch, const SubspaceDecomposition &decomp) {
        auto it = split_.find(ch.get());
        if (it != split_.end()) {
            return it->second;
        }
        auto r = std::make_shared<KrausChannel>(rpa_transform(*ch, decomp).to_split_channel());
        keep_.push_back(ch);
        return split_[ch.get()] = r;
    }

   private:
    std::map<std::tuple<int, int, const void *, const void *>, Ptr> cache_;
    std::map<const void *, Ptr> split_;
    std::vector<Ptr> keep_;

    static KrausChannel embed(const KrausChannel &single, int slot, size_t other_dim) {
        KrausChannel id = KrausChannel::identity(other_dim);
        return slot == 0 ? tensor(single, id) : tensor(id, single);
    }

    Ptr get(int kind, int slot, const Ptr &a, const Ptr &b) {
        auto key = std::make_tuple(kind, slot, (const void *)a.get(), (const void *)b.get());
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            return it->second;
        }
        KrausChannel r;
        if (kind == 0) {
            r = compose(*a, *b);
        } else if (kind == 1) {
            size_t other = b->input_dim / a->input_dim;
            r = compose(embed(*a, slot, other), *b);
        } else {
            size_t other = a->input_dim / b->input_dim;
            r = compose(*a, embed(*b, slot, other));
        }
        Ptr p = std::make_shared<KrausChannel>(compress(r, 1e-14));
        keep_.push_back(a);
        keep_.push_back(b);
        return cache_[key] = p;
    }
};

bool fusable(const Operation &op) {
    return (op.kind == OpKind::unitary || op.kind == OpKind::channel) && op.condition_register < 0 && op.qudits.size() <= 2;
}

}  // namespace

class CompiledCircuit {
   public:
    std::vector<Instr> instrs;
    std::vector<LocalDecomposition> locals;
    size_t num_registers = 0;
    size_t num_probes = 0;
};

std::string mode_name(SimMode mode) {
    switch (mode) {
        case SimMode::exact3:
            return "exact3";
        case SimMode::rpa:
            return "rpa";
        case SimMode::qubit_only:
            return "qubit-only";
    }
    return "?";
}

SimMode mode_from_name(const std::string &name) {
    for (auto m : {SimMode::exact3, SimMode::rpa, SimMode::qubit_only}) {
        if (mode_name(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown mode '" + name + "' (expected exact3, rpa or qubit-only)");
}

double uniform01(uint64_t seed, uint64_t shot, uint64_t op_uid, uint64_t counter) {
    uint64_t h = mix64(seed);
    h = mix64(h ^ shot);
    h = mix64(h ^ (op_uid << 8) ^ counter);
    return (double)(h >> 11) * 0x1.0p-53;
}

nlohmann::json record_to_json(const TrajectoryRecord &r) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto &p : r.probes) {
        probes.push_back({p.real(), p.imag()});
    }
    std::vector<int> regs(r.registers.begin(), r.registers.end());
    nlohmann::json j = {{"shot", r.shot}, {"aborted", r.aborted}, {"registers", regs}, {"probes", probes},
                        {"peak_vector_length", r.peak_vector_length}, {"peak_alive", r.peak_alive}};
    if (r.aborted) {
        j["abort_reason"] = r.abort_reason;
    }
    if (!r.samples.empty()) {
        j["samples"] = r.samples;
    }
    return j;
}

Engine::Engine(const Circuit &circuit, const Schedule &schedule, EngineOptions options)
    : circuit_(circuit), options_(options), compiled_(std::make_unique<CompiledCircuit>()) {
    circuit_.validate();
    if (schedule.order.size() != circuit_.ops.size()) {
        throw std::invalid_argument("schedule does not cover the circuit");
    }
    auto &cc = *compiled_;
    for (const auto &q : circuit_.qudits) {
        if (options_.mode == SimMode::exact3 && q.local_dim != 3) {
            throw std::invalid_argument("exact3 mode needs qutrits");
        }
        if (options_.mode == SimMode::qubit_only && q.local_dim != 2) {
            throw std::invalid_argument("qubit-only mode needs a circuit built with local dimension 2");
        }
        cc.locals.push_back(local_decomposition(q.local_dim, options_.mode));
    }
    cc.num_registers = circuit_.registers.size();
    cc.num_probes = circuit_.probes.size();
    auto decomp_of = [&](const std::vector<int> &qs) {
        std::vector<LocalDecomposition> l;
        for (int q : qs) {
            l.push_back(cc.locals[q]);
        }
        return SubspaceDecomposition(l);
    };

    // Fusion pass over the scheduled order.
    struct Item {
        Operation op;
        int uid;
        bool dead = false;
    };
    std::vector<Item> items;
    std::vector<int> open(circuit_.qudits.size(), -1);
    Fuser fuser;
    bool split = options_.mode == SimMode::rpa;
    for (int k : schedule.order) {
        const Operation &src = circuit_.ops[k];
        Operation op = src;
        if (fusable(op) && split) {
            op.channel = fuser.split(op.channel, decomp_of(op.qudits));
        }
        if (!options_.fuse || !fusable(op)) {
            for (int q : op.qudits) {
                open[q] = -1;
            }
            items.push_back({op, k});
            continue;
        }
        if (op.qudits.size() == 1) {
            int q = op.qudits[0];
            if (open[q] >= 0) {
                Item &host = items[open[q]];
                if (host.op.qudits.size() == 1) {
                    host.op.channel = fuser.then(host.op.channel, op.channel);
                } else {
                    int slot = host.op.qudits[0] == q ? 0 : 1;
                    host.op.channel = fuser.after_gate(host.op.channel, slot, op.channel);
                }
                host.op.kind = OpKind::channel;
                continue;
            }
            open[q] = (int)items.size();
            items.push_back({op, k});
            continue;
        }
        for (int slot = 0; slot < 2; slot++) {
            int q = op.qudits[slot];
            if (open[q] >= 0 && items[open[q]].op.qudits.size() == 1) {
                Item &pre = items[open[q]];
                op.channel = fuser.before_gate(pre.op.channel, slot, op.channel);
                op.kind = OpKind::channel;
                pre.dead = true;
            }
        }
        for (int q : op.qudits) {
            open[q] = (int)items.size();
        }
        items.push_back({op, k});
    }

    for (const auto &item : items) {
        if (item.dead) {
            continue;
        }
        const Operation &op = item.op;
        Instr in;
        in.uid = item.uid;
        in.qudits = op.qudits;
        in.cond_reg = op.condition_register;
        in.cond_val = op.condition_value;
        switch (op.kind) {
            case OpKind::unitary:
            case OpKind::channel: {
                in.type = InstrType::apply;
                auto d = decomp_of(op.qudits);
                in.by_source = lower_channel(*op.channel, d, d);
                break;
            }
            case OpKind::create_qudit:
                in.type = InstrType::create;
                in.by_source = lower_channel(*op.channel, SubspaceDecomposition::trivial({1}), decomp_of(op.qudits));
                break;
            case OpKind::destroy_measure:
                in.type = InstrType::measure;
                in.reg = op.registers[0];
                break;
            case OpKind::classical_fn:
                in.type = InstrType::classical;
                in.fn = op.function;
                break;
            case OpKind::record:
                if (op.record == RecordKind::probe) {
                    in.type = InstrType::probe;
                    in.reg = op.registers[0];
                    const auto &local = cc.locals[op.qudits[0]];
                    for (size_t b = 0; b < local.blocks.size(); b++) {
                        ComplexMatrix x = local.embedding(b);
                        in.obs_by_label.push_back(x.adjoint() * *op.observable * x);
                    }
                } else {
                    in.type = InstrType::snapshot;
                    in.regs = op.registers;
                }
                break;
        }
        cc.instrs.push_back(std::move(in));
    }
}

Engine::~Engine() = default;

size_t Engine::num_instructions() const { return compiled_->instrs.size(); }

namespace {

class Abort : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct TargetLayout {
    size_t lo = 1, mid = 1, hi = 1;
    size_t old_mid = 0, old_hi = 0, new_mid = 0, new_hi = 0;
    size_t off_old[kMaxLocal];
    size_t off_new[kMaxLocal];
};

class Simulator {
   public:
    Simulator(const CompiledCircuit &cc, const EngineOptions &opt, uint64_t seed, uint64_t shot)
        : cc_(cc), opt_(opt), seed_(seed), shot_(shot) {
        qudit_pos_.assign(cc.locals.size(), -1);
        label_.assign(cc.locals.size(), 0);
        v_.assign(1, 1.0);
        rec_.shot = shot;
        rec_.registers.assign(cc.num_registers, 0);
        rec_.probes.assign(cc.num_probes, std::complex<double>(NAN, NAN));
        rec_.peak_vector_length = 1;
    }

    TrajectoryRecord run() {
        try {
            for (const auto &in : cc_.instrs) {
                if (in.cond_reg >= 0 && rec_.registers[in.cond_reg] != in.cond_val) {
                    continue;
                }
                exec(in);
            }
        } catch (const Abort &e) {
            rec_.aborted = true;
            rec_.abort_reason = e.what();
        }
        return std::move(rec_);
    }

   private:
    const CompiledCircuit &cc_;
    const EngineOptions &opt_;
    uint64_t seed_, shot_;
    std::vector<cplx> v_, w_;
    double norm2_ = 1;
    std::vector<int> pos_qudit_;
    std::vector<size_t> dims_;
    std::vector<int> qudit_pos_;
    std::vector<uint8_t> label_;
    TrajectoryRecord rec_;

    double draw(const Instr &in, uint64_t counter = 0) const { return uniform01(seed_, shot_, in.uid, counter); }

    size_t stride(int p) const {
        size_t s = 1;
        for (int k = 0; k < p; k++) {
            s *= dims_[k];
        }
        return s;
    }

    size_t sector_of(const Instr &in) const {
        size_t s = 0;
        for (int q : in.qudits) {
            s = s * cc_.locals[q].blocks.size() + label_[q];
        }
        return s;
    }

    size_t block_dim(int q, size_t label) const { return cc_.locals[q].blocks[label].basis.size(); }

    /// Offsets for the target digits before and after the op, given the new block dims of the targets.
    TargetLayout layout(const Instr &in, const std::vector<size_t> &new_dims) const {
        TargetLayout t;
        size_t n = in.qudits.size();
        int p0 = qudit_pos_[in.qudits[0]];
        if (n == 1) {
            size_t a = dims_[p0], b = new_dims[0];
            t.lo = stride(p0);
            t.hi = v_.size() / (t.lo * a);
            t.old_hi = t.lo * a;
            t.new_hi = t.lo * b;
            for (size_t x = 0; x < a; x++) {
                t.off_old[x] = x * t.lo;
            }
            for (size_t y = 0; y < b; y++) {
                t.off_new[y] = y * t.lo;
            }
            return t;
        }
        int p1 = qudit_pos_[in.qudits[1]];
        bool swapped = p0 > p1;
        int pl = swapped ? p1 : p0, ph = swapped ? p0 : p1;
        size_t al = dims_[pl], ah = dims_[ph];
        size_t bl = new_dims[swapped ? 1 : 0], bh = new_dims[swapped ? 0 : 1];
        t.lo = stride(pl);
        t.mid = stride(ph) / (t.lo * al);
        t.hi = v_.size() / (stride(ph) * ah);
        t.old_mid = t.lo * al;
        t.old_hi = t.old_mid * t.mid * ah;
        t.new_mid = t.lo * bl;
        t.new_hi = t.new_mid * t.mid * bh;
        size_t sol = t.lo, soh = t.old_mid * t.mid, snl = t.lo, snh = t.new_mid * t.mid;
        // op-local index = x0 * d1 + x1 with x0 the first listed qudit
        size_t a0 = dims_[p0], a1 = dims_[p1], b0 = new_dims[0], b1 = new_dims[1];
        for (size_t x0 = 0; x0 < a0; x0++) {
            for (size_t x1 = 0; x1 < a1; x1++) {
                size_t s0 = swapped ? soh : sol, s1 = swapped ? sol : soh;
                t.off_old[x0 * a1 + x1] = x0 * s0 + x1 * s1;
            }
        }
        for (size_t y0 = 0; y0 < b0; y0++) {
            for (size_t y1 = 0; y1 < b1; y1++) {
                size_t s0 = swapped ? snh : snl, s1 = swapped ? snl : snh;
                t.off_new[y0 * b1 + y1] = y0 * s0 + y1 * s1;
            }
        }
        return t;
    }

    template <class F>
    static void for_each_base(const TargetLayout &t, F &&f) {
        for (size_t h = 0; h < t.hi; h++) {
            for (size_t m = 0; m < t.mid; m++) {
                size_t bo = h * t.old_hi + m * t.old_mid;
                size_t bn = h * t.new_hi + m * t.new_mid;
                for (size_t l = 0; l < t.lo; l++) {
                    f(bo + l, bn + l);
                }
            }
        }
    }

    /// w = B v; returns ||w||^2.
    double apply_candidate(const Candidate &c, const TargetLayout &t, size_t new_len) {
        w_.assign(new_len, 0.0);
        const cplx *v = v_.data();
        cplx *w = w_.data();
        const auto &entries = c.entries;
        if (t.lo >= 4) {
            size_t lo = t.lo;
            for (size_t h = 0; h < t.hi; h++) {
                for (size_t m = 0; m < t.mid; m++) {
                    size_t bo = h * t.old_hi + m * t.old_mid;
                    size_t bn = h * t.new_hi + m * t.new_mid;
                    for (const auto &e : entries) {
                        const cplx *src = v + bo + t.off_old[e.col];
                        cplx *dst = w + bn + t.off_new[e.row];
                        const cplx val = e.value;
                        for (size_t l = 0; l < lo; l++) {
                            dst[l] += val * src[l];
                        }
                    }
                }
            }
        } else {
            size_t dout = c.dout;
            for_each_base(t, [&](size_t bo, size_t bn) {
                cplx acc[kMaxLocal] = {};
                for (const auto &e : entries) {
                    acc[e.row] += e.value * v[bo + t.off_old[e.col]];
                }
                for (size_t r = 0; r < dout; r++) {
                    w[bn + t.off_new[r]] = acc[r];
                }
            });
        }
        double norm = 0;
        for (size_t i = 0; i < new_len; i++) {
            norm += std::norm(w[i]);
        }
        return norm;
    }

    ComplexMatrix reduced(const TargetLayout &t, size_t din) const {
        ComplexMatrix rho(din, din);
        const cplx *v = v_.data();
        for_each_base(t, [&](size_t bo, size_t) {
            for (size_t a = 0; a < din; a++) {
                cplx va = v[bo + t.off_old[a]];
                if (va == 0.0) {
                    continue;
                }
                for (size_t b = 0; b < din; b++) {
                    rho(a, b) += va * std::conj(v[bo + t.off_old[b]]);
                }
            }
        });
        return rho;
    }

    static double expectation(const ComplexMatrix &m, const ComplexMatrix &rho) {
        // tr(m rho) with rho(a, b) = sum v_a conj(v_b)
        cplx s = 0;
        for (size_t a = 0; a < m.rows(); a++) {
            for (size_t b = 0; b < m.cols(); b++) {
                s += m(a, b) * rho(b, a);
            }
        }
        return s.real();
    }

    void accept(const Instr &in, const Candidate &c, double norm, size_t index) {
        std::swap(v_, w_);
        norm2_ = norm;
        for (size_t k = 0; k < in.qudits.size(); k++) {
            int q = in.qudits[k];
            label_[q] = c.out_labels[k];
            dims_[qudit_pos_[q]] = block_dim(q, label_[q]);
        }
        if (opt_.log_samples) {
            rec_.samples.push_back({in.uid, (int)index});
        }
        if (norm2_ < 1e-150) {
            renormalize();
        }
    }

    void renormalize() {
        double s = 1 / std::sqrt(norm2_);
        for (auto &x : v_) {
            x *= s;
        }
        norm2_ = 1;
    }

    void exec(const Instr &in) {
        switch (in.type) {
            case InstrType::apply:
                return exec_apply(in);
            case InstrType::create:
                return exec_create(in);
            case InstrType::measure:
                return exec_measure(in);
            case InstrType::classical:
                return exec_classical(in);
            case InstrType::probe:
                return exec_probe(in);
            case InstrType::snapshot:
                return exec_snapshot(in);
        }
    }

    void exec_apply(const Instr &in) {
        const auto &cands = in.by_source[sector_of(in)];
        if (cands.empty()) {
            throw Abort("no Kraus block for the current subspace sector");
        }
        auto new_dims_of = [&](const Candidate &c) {
            std::vector<size_t> d;
            for (size_t k = 0; k < in.qudits.size(); k++) {
                d.push_back(block_dim(in.qudits[k], c.out_labels[k]));
            }
            return d;
        };
        auto new_len = [&](const Candidate &c) { return v_.size() / c.din * c.dout; };
        const Candidate &main = cands[0];
        TargetLayout t0 = layout(in, new_dims_of(main));
        double n0 = apply_candidate(main, t0, new_len(main));
        double u = draw(in);
        double p0 = n0 / norm2_;
        if (cands.size() == 1) {
            if (std::abs(p0 - 1) > opt_.norm_tol) {
                throw Abort("normalization loss " + std::to_string(1 - p0));
            }
            return accept(in, main, n0, 0);
        }
        if (u < p0) {
            return accept(in, main, n0, 0);
        }
        ComplexMatrix rho = reduced(t0, main.din);
        std::vector<double> p(cands.size());
        double total = 0;
        for (size_t j = 0; j < cands.size(); j++) {
            p[j] = expectation(cands[j].gram, rho) / norm2_;
            total += p[j];
        }
        if (std::abs(total - 1) > opt_.norm_tol) {
            throw Abort("candidate probabilities sum to " + std::to_string(total));
        }
        double acc = p[0];
        size_t chosen = cands.size() - 1;
        for (size_t j = 1; j < cands.size(); j++) {
            acc += p[j];
            if (u < acc) {
                chosen = j;
                break;
            }
        }
        while (chosen > 0 && p[chosen] <= 0) {
            chosen--;
        }
        const Candidate &c = cands[chosen];
        TargetLayout t = layout(in, new_dims_of(c));
        double n = apply_candidate(c, t, new_len(c));
        if (std::abs(n / norm2_ - p[chosen]) > opt_.norm_tol) {
            throw Abort("sampled probability mismatch");
        }
        accept(in, c, n, chosen);
    }

    void exec_create(const Instr &in) {
        int q = in.qudits[0];
        const auto &cands = in.by_source[0];
        double u = draw(in);
        size_t chosen = 0;
        double acc = 0;
        for (size_t j = 0; j < cands.size(); j++) {
            acc += cands[j].weight;
            chosen = j;
            if (u < acc) {
                break;
            }
        }
        const Candidate &c = cands[chosen];
        double s = 1 / std::sqrt(c.weight);
        size_t len = v_.size();
        w_.resize(len * c.dout);
        for (size_t k = 0; k < c.dout; k++) {
            cplx amp = c.column[k] * s;
            for (size_t i = 0; i < len; i++) {
                w_[k * len + i] = v_[i] * amp;
            }
        }
        std::swap(v_, w_);
        qudit_pos_[q] = (int)pos_qudit_.size();
        pos_qudit_.push_back(q);
        label_[q] = c.out_labels[0];
        dims_.push_back(c.dout);
        if (opt_.log_samples) {
            rec_.samples.push_back({in.uid, (int)chosen});
        }
        rec_.peak_vector_length = std::max(rec_.peak_vector_length, v_.size());
        rec_.peak_alive = std::max(rec_.peak_alive, (int)pos_qudit_.size());
        size_t bound = 1;
        for (int a : pos_qudit_) {
            size_t m = 0;
            for (const auto &b : cc_.locals[a].blocks) {
                m = std::max(m, b.basis.size());
            }
            bound *= m;
        }
        if (v_.size() > bound) {
            throw std::logic_error("state vector exceeds its memory bound");
        }
    }

    void exec_measure(const Instr &in) {
        int q = in.qudits[0];
        int p = qudit_pos_[q];
        size_t a = dims_[p];
        size_t lo = stride(p);
        size_t hi = v_.size() / (lo * a);
        double mass[kMaxLocal] = {};
        for (size_t h = 0; h < hi; h++) {
            for (size_t x = 0; x < a; x++) {
                const cplx *row = v_.data() + lo * (x + a * h);
                double s = 0;
                for (size_t l = 0; l < lo; l++) {
                    s += std::norm(row[l]);
                }
                mass[x] += s;
            }
        }
        double total = 0;
        for (size_t x = 0; x < a; x++) {
            total += mass[x];
        }
        if (std::abs(total / norm2_ - 1) > opt_.norm_tol) {
            throw Abort("normalization drift before measurement");
        }
        double u = draw(in) * total;
        size_t x = a - 1;
        double acc = 0;
        for (size_t k = 0; k < a; k++) {
            acc += mass[k];
            if (u < acc) {
                x = k;
                break;
            }
        }
        while (x > 0 && mass[x] <= 0) {
            x--;
        }
        w_.resize(lo * hi);
        for (size_t h = 0; h < hi; h++) {
            std::copy_n(v_.data() + lo * (x + a * h), lo, w_.data() + lo * h);
        }
        std::swap(v_, w_);
        norm2_ = mass[x];
        rec_.registers[in.reg] = (int8_t)cc_.locals[q].blocks[label_[q]].basis[x];
        if (opt_.log_samples) {
            rec_.samples.push_back({in.uid, (int)x});
        }
        pos_qudit_.erase(pos_qudit_.begin() + p);
        dims_.erase(dims_.begin() + p);
        qudit_pos_[q] = -1;
        for (size_t k = p; k < pos_qudit_.size(); k++) {
            qudit_pos_[pos_qudit_[k]] = (int)k;
        }
        if (norm2_ < 1e-150) {
            renormalize();
        }
    }

    void exec_classical(const Instr &in) {
        const auto &f = *in.fn;
        double u = draw(in);
        size_t chosen = f.branches.size() - 1;
        double acc = 0;
        for (size_t j = 0; j < f.branches.size(); j++) {
            acc += f.branches[j].prob;
            if (u < acc) {
                chosen = j;
                break;
            }
        }
        std::vector<int> input;
        for (int r : f.inputs) {
            input.push_back(rec_.registers[r]);
        }
        const auto &table = f.branches[chosen].table;
        auto it = table.find(input);
        if (it == table.end()) {
            throw Abort("classical function undefined on its input");
        }
        for (size_t k = 0; k < f.outputs.size(); k++) {
            rec_.registers[f.outputs[k]] = (int8_t)it->second[k];
        }
    }

    void exec_probe(const Instr &in) {
        int q = in.qudits[0];
        const ComplexMatrix &o = in.obs_by_label[label_[q]];
        std::vector<size_t> same{dims_[qudit_pos_[q]]};
        TargetLayout t = layout(in, same);
        ComplexMatrix rho = reduced(t, same[0]);
        cplx s = 0;
        for (size_t a = 0; a < o.rows(); a++) {
            for (size_t b = 0; b < o.cols(); b++) {
                s += o(a, b) * rho(b, a);
            }
        }
        rec_.probes[in.reg] = s / norm2_;
    }

    void exec_snapshot(const Instr &in) {
        double u = draw(in) * norm2_;
        double acc = 0;
        size_t idx = 0;
        for (size_t i = 0; i < v_.size(); i++) {
            double m = std::norm(v_[i]);
            if (m <= 0) {
                continue;
            }
            idx = i;
            acc += m;
            if (u < acc) {
                break;
            }
        }
        for (size_t k = 0; k < in.qudits.size(); k++) {
            int q = in.qudits[k];
            int p = qudit_pos_[q];
            if (p < 0) {
                throw std::logic_error("snapshot of a qudit that is not alive");
            }
            size_t digit = (idx / stride(p)) % dims_[p];
            rec_.registers[in.regs[k]] = (int8_t)cc_.locals[q].blocks[label_[q]].basis[digit];
        }
    }
};

}  // namespace

TrajectoryRecord Engine::run(uint64_t seed, uint64_t shot) const {
    return Simulator(*compiled_, options_, seed, shot).run();
}

void Engine::run_batch(uint64_t seed, uint64_t first, uint64_t count, int workers,
                       const std::function<void(const TrajectoryRecord &)> &consume) const {
    workers = std::max(1, workers);
    if (workers == 1) {
        for (uint64_t s = first; s < first + count; s++) {
            consume(run(seed, s));
        }
        return;
    }
    const uint64_t wave = (uint64_t)workers * 64;
    std::vector<TrajectoryRecord> buf;
    for (uint64_t start = first; start < first + count; start += wave) {
        uint64_t n = std::min(wave, first + count - start);
        buf.assign(n, {});
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (int w = 0; w < workers; w++) {
            pool.emplace_back([&, w] {
                try {
                    for (uint64_t i = w; i < n; i += workers) {
                        buf[i] = run(seed, start + i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto &t : pool) {
            t.join();
        }
        for (auto &e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
        for (const auto &r : buf) {
            consume(r);
        }
    }
}

}  // namespace leaksim
