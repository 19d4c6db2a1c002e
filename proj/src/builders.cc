#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "leaksim/circuit.h"

namespace leaksim {

namespace {

using ChannelPtr = std::shared_ptr<const KrausChannel>;

class CodeBuilder {
   public:
    CodeBuilder(const NoiseModel &noise, const CodeOptions &options) : noise_(noise), opt_(options), dim_(options.local_dim) {
        if (dim_ != 2 && dim_ != 3) {
            throw std::invalid_argument("local_dim must be 2 or 3");
        }
        double t = noise_.durations.unitary;
        ComplexMatrix phase = leaked_phase(noise_.eta, t, dim_);
        h_ = std::make_shared<KrausChannel>(KrausChannel::unitary(phase * hadamard(dim_)));
        x_ = std::make_shared<KrausChannel>(KrausChannel::unitary(phase * pauli_x(dim_)));
        x_ideal_ = std::make_shared<KrausChannel>(KrausChannel::unitary(pauli_x(dim_)));
        if (dim_ == 3) {
            CzGateParams cz = noise_.cz;
            cz.duration = t;
            cz.leaking_qudit = 1;
            cz_ = std::make_shared<KrausChannel>(cz_gate(cz));
        } else {
            cz_ = std::make_shared<KrausChannel>(KrausChannel::unitary(ComplexMatrix::diagonal({1, 1, 1, -1})));
        }
        std::vector<cplx> zero(dim_, 0.0);
        zero[0] = 1;
        create_zero_ = std::make_shared<KrausChannel>(KrausChannel::make({ComplexMatrix::column(zero)}));
        ComplexMatrix p2(dim_, dim_);
        if (dim_ == 3) {
            p2(2, 2) = 1;
        }
        p2_ = std::make_shared<ComplexMatrix>(p2);
        for (const auto &o : opt_.custom_probes) {
            if (o.rows() != dim_ || o.cols() != dim_) {
                throw std::invalid_argument("custom probe dimension mismatch");
            }
            custom_probes_.push_back(std::make_shared<ComplexMatrix>(o));
        }
    }

    Circuit c;

    int qudit(const std::string &name, QuditRole role) { return c.add_qudit(name, role, dim_); }

    void prepare_data(const std::vector<int> &data, bool random_bits) {
        for (size_t i = 0; i < data.size(); i++) {
            ChannelPtr init = create_zero_;
            if ((int)i == opt_.custom_data_index) {
                if (opt_.custom_data_state.size() != dim_) {
                    throw std::invalid_argument("custom data state dimension mismatch");
                }
                init = std::make_shared<KrausChannel>(KrausChannel::make({ComplexMatrix::column(opt_.custom_data_state)}));
            }
            push(OpKind::create_qudit, "init", {data[i]}, {}, init, 0, -1);
            alive_.insert(data[i]);
        }
        c.layout.initial_bits.assign(data.size(), -1);
        if (!random_bits) {
            return;
        }
        for (size_t i = 0; i < data.size(); i++) {
            if ((int)i == opt_.custom_data_index) {
                continue;
            }
            int reg = c.add_register("init_d" + std::to_string(i));
            c.layout.initial_bits[i] = reg;
            Operation coin;
            coin.kind = OpKind::classical_fn;
            coin.name = "coin";
            coin.function = std::make_shared<ClassicalFunction>(ClassicalFunction::coin(reg));
            coin.round = -1;
            c.ops.push_back(coin);
            Operation flip;
            flip.kind = OpKind::unitary;
            flip.name = "X";
            flip.qudits = {data[i]};
            flip.channel = x_ideal_;
            flip.condition_register = reg;
            flip.condition_value = 1;
            flip.round = -1;
            c.ops.push_back(flip);
        }
    }

    void reset_moment(const std::vector<int> &measure, int round) {
        for (int q : measure) {
            push(OpKind::create_qudit, "R", {q}, {}, create_zero_, 0, round);
            alive_.insert(q);
        }
        noise(noise_.durations.reset, {}, round);
    }

    void single_moment(const std::string &gate, const std::vector<int> &targets, int round) {
        ChannelPtr ch = gate == "H" ? h_ : x_;
        for (int q : targets) {
            push(OpKind::unitary, gate, {q}, {}, ch, noise_.durations.unitary, round);
        }
        noise(noise_.durations.unitary, std::set<int>(targets.begin(), targets.end()), round);
    }

    void cz_moment(const std::vector<std::pair<int, int>> &pairs, int round) {
        std::set<int> busy;
        for (auto [m, d] : pairs) {
            push(OpKind::unitary, "CZ", {m, d}, {}, cz_, noise_.durations.unitary, round);
            busy.insert(m);
            busy.insert(d);
        }
        noise(noise_.durations.unitary, busy, round);
    }

    /// Noise window, then destructive measurement of the measure qudits.
    std::pair<std::vector<int>, std::vector<int>> measure_moment(const std::vector<int> &measure, int round) {
        noise(noise_.durations.measure, {}, round);
        std::vector<int> raw, decoded;
        for (size_t s = 0; s < measure.size(); s++) {
            std::string tag = "m_r" + std::to_string(round) + "_s" + std::to_string(s);
            int r = c.add_register(tag + "_raw");
            int o = c.add_register(tag);
            push(OpKind::destroy_measure, "M", {measure[s]}, {r}, nullptr, 0, round);
            alive_.erase(measure[s]);
            raw.push_back(r);
            decoded.push_back(o);
        }
        for (size_t s = 0; s < measure.size(); s++) {
            randomize(raw[s], decoded[s], round);
        }
        return {raw, decoded};
    }

    void end_of_round(const std::vector<int> &data, int round) {
        auto &l = c.layout;
        l.leak_probes.emplace_back();
        if (opt_.leak_probes) {
            for (size_t i = 0; i < data.size(); i++) {
                int slot = c.add_probe("p2_r" + std::to_string(round) + "_d" + std::to_string(i));
                probe(data[i], slot, p2_, round);
                l.leak_probes.back().push_back(slot);
            }
        }
        for (size_t k = 0; k < custom_probes_.size(); k++) {
            int slot = c.add_probe("obs" + std::to_string(k) + "_r" + std::to_string(round));
            probe(data.at(opt_.custom_data_index), slot, custom_probes_[k], round);
        }
        Operation snap;
        snap.kind = OpKind::record;
        snap.record = RecordKind::snapshot;
        snap.name = "snapshot";
        snap.qudits = data;
        snap.round = round;
        std::vector<int> decoded;
        for (size_t i = 0; i < data.size(); i++) {
            std::string tag = "snap_r" + std::to_string(round) + "_d" + std::to_string(i);
            snap.registers.push_back(c.add_register(tag + "_raw"));
            decoded.push_back(c.add_register(tag));
        }
        c.ops.push_back(snap);
        for (size_t i = 0; i < data.size(); i++) {
            randomize(snap.registers[i], decoded[i], round);
        }
        l.raw_snapshots.push_back(snap.registers);
        l.snapshots.push_back(decoded);
    }

   private:
    const NoiseModel &noise_;
    const CodeOptions &opt_;
    size_t dim_;
    ChannelPtr h_, x_, x_ideal_, cz_, create_zero_;
    std::shared_ptr<const ComplexMatrix> p2_;
    std::vector<std::shared_ptr<const ComplexMatrix>> custom_probes_;
    std::set<int> alive_;
    std::map<std::tuple<double, bool, std::string>, ChannelPtr> noise_cache_;

    void push(OpKind kind, const std::string &name, std::vector<int> qudits, std::vector<int> registers, ChannelPtr ch,
              double duration, int round) {
        Operation op;
        op.kind = kind;
        op.name = name;
        op.qudits = std::move(qudits);
        op.registers = std::move(registers);
        op.channel = std::move(ch);
        op.duration = duration;
        op.round = round;
        c.ops.push_back(std::move(op));
    }

    void probe(int q, int slot, std::shared_ptr<const ComplexMatrix> obs, int round) {
        Operation op;
        op.kind = OpKind::record;
        op.record = RecordKind::probe;
        op.name = "probe";
        op.qudits = {q};
        op.registers = {slot};
        op.observable = std::move(obs);
        op.round = round;
        c.ops.push_back(op);
    }

    void randomize(int in, int out, int round) {
        Operation op;
        op.kind = OpKind::classical_fn;
        op.name = "rand2";
        op.function = std::make_shared<ClassicalFunction>(ClassicalFunction::randomize_leaked(in, out));
        op.round = round;
        c.ops.push_back(op);
    }

    /// Decoherence for every alive qudit; idle qudits also pick up the leaked-state phase.
    ChannelPtr noise_channel(double t, bool idle, int q) {
        const std::string &name = c.qudits[q].name;
        auto key = std::make_tuple(t, idle, noise_.qudit_deco.count(name) ? name : std::string());
        auto it = noise_cache_.find(key);
        if (it != noise_cache_.end()) {
            return it->second;
        }
        KrausChannel ch = lindblad_channel(noise_.decoherence_of(name), t, dim_);
        if (idle && dim_ == 3 && noise_.eta != 0) {
            ch = compose(KrausChannel::unitary(leaked_phase(noise_.eta, t, dim_)), ch);
        }
        bool trivial = ch.size() == 1 && max_abs_diff(ch.kraus[0], ComplexMatrix::identity(dim_)) == 0;
        ChannelPtr ptr = trivial ? nullptr : std::make_shared<KrausChannel>(std::move(ch));
        noise_cache_[key] = ptr;
        return ptr;
    }

    void noise(double t, const std::set<int> &busy, int round) {
        for (int q : alive_) {
            ChannelPtr ch = noise_channel(t, !busy.count(q), q);
            if (ch) {
                push(OpKind::channel, "noise", {q}, {}, ch, t, round);
            }
        }
    }
};

void check_qudit_overrides(const NoiseModel &noise, const Circuit &c) {
    for (const auto &[name, d] : noise.qudit_deco) {
        bool found = std::any_of(c.qudits.begin(), c.qudits.end(), [&](const QuditInfo &q) { return q.name == name; });
        if (!found) {
            throw std::invalid_argument("noise override for unknown qudit '" + name + "'");
        }
    }
}

}  // namespace

Circuit build_repetition_code(int d, int rounds, const NoiseModel &noise, const CodeOptions &options) {
    if (d < 3 || d % 2 == 0) {
        throw std::invalid_argument("repetition code distance must be odd and >= 3");
    }
    if (rounds < 1) {
        throw std::invalid_argument("rounds must be >= 1");
    }
    CodeBuilder b(noise, options);
    std::vector<int> data, measure;
    for (int i = 0; i < 2 * d - 1; i++) {
        if (i % 2 == 0) {
            data.push_back(b.qudit("d" + std::to_string(i / 2), QuditRole::data));
        } else {
            measure.push_back(b.qudit("m" + std::to_string(i / 2), QuditRole::measure));
        }
    }
    auto &l = b.c.layout;
    l.code = "repetition";
    l.distance = d;
    l.rounds = rounds;
    l.data_qudits = data;
    l.flips_each_round = options.flips_each_round;
    l.logical = {data[0]};
    for (int s = 0; s < d - 1; s++) {
        l.stabilizers.push_back({"Z" + std::to_string(s), 'Z', measure[s], {data[s], data[s + 1]}});
    }
    const auto &dur = noise.durations;
    l.round_duration = dur.reset + 4 * dur.unitary + dur.measure + (options.flips_each_round ? dur.unitary : 0);

    b.prepare_data(data, options.random_initial_bits);
    std::vector<std::pair<int, int>> left, right;
    for (int s = 0; s < d - 1; s++) {
        left.push_back({measure[s], data[s]});
        right.push_back({measure[s], data[s + 1]});
    }
    for (int r = 0; r < rounds; r++) {
        b.reset_moment(measure, r);
        b.single_moment("H", measure, r);
        b.cz_moment(right, r);
        b.cz_moment(left, r);
        b.single_moment("H", measure, r);
        auto [raw, decoded] = b.measure_moment(measure, r);
        l.raw_measurements.push_back(raw);
        l.measurements.push_back(decoded);
        if (options.flips_each_round) {
            b.single_moment("X", data, r);
        }
        b.end_of_round(data, r);
    }
    check_qudit_overrides(noise, b.c);
    b.c.validate();
    return std::move(b.c);
}

Circuit build_surface_code(int d, int rounds, const NoiseModel &noise, const CodeOptions &options) {
    if (d != 3 && d != 5) {
        throw std::invalid_argument("surface code distance must be 3 or 5");
    }
    if (rounds < 1) {
        throw std::invalid_argument("rounds must be >= 1");
    }
    CodeBuilder b(noise, options);
    std::map<std::pair<int, int>, int> data_at;
    std::vector<int> data;
    for (int y = 1; y < 2 * d; y += 2) {
        for (int x = 1; x < 2 * d; x += 2) {
            int q = b.qudit("d" + std::to_string(x) + "_" + std::to_string(y), QuditRole::data);
            data_at[{x, y}] = q;
            data.push_back(q);
        }
    }
    struct Check {
        int x, y;
        char type;
    };
    std::vector<Check> checks;
    for (int y = 0; y <= 2 * d; y += 2) {
        for (int x = 0; x <= 2 * d; x += 2) {
            char type = (x + y) % 4 == 0 ? 'Z' : 'X';
            bool edge_y = y == 0 || y == 2 * d;
            bool edge_x = x == 0 || x == 2 * d;
            if (edge_x && edge_y) {
                continue;
            }
            if (edge_y && type != 'Z') {
                continue;
            }
            if (edge_x && type != 'X') {
                continue;
            }
            checks.push_back({x, y, type});
        }
    }
    auto &l = b.c.layout;
    l.code = "surface";
    l.distance = d;
    l.rounds = rounds;
    l.data_qudits = data;
    l.flips_each_round = false;
    std::vector<int> measure;
    for (const auto &ch : checks) {
        int q = b.qudit(std::string(1, ch.type) + std::to_string(ch.x) + "_" + std::to_string(ch.y), QuditRole::measure);
        measure.push_back(q);
        Stabilizer s{b.c.qudits[q].name, ch.type, q, {}};
        for (int dx : {-1, 1}) {
            for (int dy : {-1, 1}) {
                auto it = data_at.find({ch.x + dx, ch.y + dy});
                if (it != data_at.end()) {
                    s.data.push_back(it->second);
                }
            }
        }
        std::sort(s.data.begin(), s.data.end());
        l.stabilizers.push_back(s);
    }
    for (int y = 1; y < 2 * d; y += 2) {
        l.logical.push_back(data_at[{1, y}]);
    }
    const auto &dur = noise.durations;
    l.round_duration = dur.reset + 8 * dur.unitary + dur.measure;

    // Data whose main-diagonal neighbours are X checks sit in the X basis during CZ steps 1 and 4.
    std::vector<int> data_a;
    for (const auto &[xy, q] : data_at) {
        if ((xy.first + xy.second + 2) % 4 == 2) {
            data_a.push_back(q);
        }
    }
    std::sort(data_a.begin(), data_a.end());
    std::vector<int> outer = measure;
    outer.insert(outer.end(), data_a.begin(), data_a.end());
    std::sort(outer.begin(), outer.end());

    if (options.x_order.size() != 4 || options.z_order.size() != 4) {
        throw std::invalid_argument("CZ orders must have 4 steps");
    }
    std::vector<std::vector<std::pair<int, int>>> steps(4);
    for (int k = 0; k < 4; k++) {
        for (size_t s = 0; s < checks.size(); s++) {
            auto [dx, dy] = checks[s].type == 'X' ? options.x_order[k] : options.z_order[k];
            auto it = data_at.find({checks[s].x + dx, checks[s].y + dy});
            if (it != data_at.end()) {
                steps[k].push_back({measure[s], it->second});
            }
        }
    }

    b.prepare_data(data, false);
    for (int r = 0; r < rounds; r++) {
        b.reset_moment(measure, r);
        b.single_moment("H", outer, r);
        b.cz_moment(steps[0], r);
        b.single_moment("H", data, r);
        b.cz_moment(steps[1], r);
        b.cz_moment(steps[2], r);
        b.single_moment("H", data, r);
        b.cz_moment(steps[3], r);
        b.single_moment("H", outer, r);
        auto [raw, decoded] = b.measure_moment(measure, r);
        l.raw_measurements.push_back(raw);
        l.measurements.push_back(decoded);
        b.end_of_round(data, r);
    }
    check_qudit_overrides(noise, b.c);
    b.c.validate();
    return std::move(b.c);
}

}  // namespace leaksim
