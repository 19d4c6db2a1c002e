#include "leaksim/circuit.h"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace leaksim {

namespace {

std::string role_name(QuditRole r) {
    return r == QuditRole::data ? "data" : "measure";
}

QuditRole role_from_name(const std::string &s) {
    if (s == "data") {
        return QuditRole::data;
    }
    if (s == "measure") {
        return QuditRole::measure;
    }
    throw std::invalid_argument("unknown qudit role '" + s + "'");
}

nlohmann::json matrix_to_json(const ComplexMatrix &m) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto &x : m.data()) {
        entries.push_back({x.real(), x.imag()});
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

ComplexMatrix matrix_from_json(const nlohmann::json &j) {
    std::vector<cplx> entries;
    for (const auto &e : j.at("entries")) {
        entries.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return ComplexMatrix(j.at("rows").get<size_t>(), j.at("cols").get<size_t>(), std::move(entries));
}

nlohmann::json function_to_json(const ClassicalFunction &f) {
    nlohmann::json branches = nlohmann::json::array();
    for (const auto &b : f.branches) {
        nlohmann::json table = nlohmann::json::array();
        for (const auto &[in, out] : b.table) {
            table.push_back({in, out});
        }
        branches.push_back({{"p", b.prob}, {"table", table}});
    }
    return {{"in", f.inputs}, {"out", f.outputs}, {"branches", branches}};
}

ClassicalFunction function_from_json(const nlohmann::json &j) {
    ClassicalFunction f;
    f.inputs = j.at("in").get<std::vector<int>>();
    f.outputs = j.at("out").get<std::vector<int>>();
    for (const auto &b : j.at("branches")) {
        ClassicalBranch br;
        br.prob = b.at("p").get<double>();
        for (const auto &row : b.at("table")) {
            br.table[row[0].get<std::vector<int>>()] = row[1].get<std::vector<int>>();
        }
        f.branches.push_back(br);
    }
    return f;
}

nlohmann::json layout_to_json(const CodeLayout &l) {
    nlohmann::json stabs = nlohmann::json::array();
    for (const auto &s : l.stabilizers) {
        stabs.push_back({{"name", s.name}, {"type", std::string(1, s.type)}, {"measure", s.measure_qudit}, {"data", s.data}});
    }
    return {{"code", l.code},
            {"distance", l.distance},
            {"rounds", l.rounds},
            {"round_duration", l.round_duration},
            {"data_qudits", l.data_qudits},
            {"stabilizers", stabs},
            {"logical", l.logical},
            {"raw_measurements", l.raw_measurements},
            {"measurements", l.measurements},
            {"raw_snapshots", l.raw_snapshots},
            {"snapshots", l.snapshots},
            {"initial_bits", l.initial_bits},
            {"leak_probes", l.leak_probes},
            {"flips_each_round", l.flips_each_round}};
}

CodeLayout layout_from_json(const nlohmann::json &j) {
    CodeLayout l;
    l.code = j.at("code").get<std::string>();
    l.distance = j.at("distance").get<int>();
    l.rounds = j.at("rounds").get<int>();
    l.round_duration = j.at("round_duration").get<double>();
    l.data_qudits = j.at("data_qudits").get<std::vector<int>>();
    for (const auto &s : j.at("stabilizers")) {
        l.stabilizers.push_back({s.at("name").get<std::string>(), s.at("type").get<std::string>()[0],
                                 s.at("measure").get<int>(), s.at("data").get<std::vector<int>>()});
    }
    l.logical = j.at("logical").get<std::vector<int>>();
    l.raw_measurements = j.at("raw_measurements").get<std::vector<std::vector<int>>>();
    l.measurements = j.at("measurements").get<std::vector<std::vector<int>>>();
    l.raw_snapshots = j.at("raw_snapshots").get<std::vector<std::vector<int>>>();
    l.snapshots = j.at("snapshots").get<std::vector<std::vector<int>>>();
    l.initial_bits = j.at("initial_bits").get<std::vector<int>>();
    l.leak_probes = j.at("leak_probes").get<std::vector<std::vector<int>>>();
    l.flips_each_round = j.at("flips_each_round").get<bool>();
    return l;
}

std::string join(const std::vector<int> &v) {
    std::string s;
    for (size_t k = 0; k < v.size(); k++) {
        s += (k ? "," : "") + std::to_string(v[k]);
    }
    return s;
}

std::vector<int> split_ints(const std::string &s) {
    std::vector<int> r;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            r.push_back(std::stoi(item));
        }
    }
    return r;
}

}  // namespace

std::string op_kind_name(OpKind kind) {
    switch (kind) {
        case OpKind::unitary:
            return "unitary";
        case OpKind::channel:
            return "channel";
        case OpKind::create_qudit:
            return "create_qudit";
        case OpKind::destroy_measure:
            return "destroy_measure";
        case OpKind::classical_fn:
            return "classical_fn";
        case OpKind::record:
            return "record";
    }
    return "?";
}

OpKind op_kind_from_name(const std::string &name) {
    for (auto k : {OpKind::unitary, OpKind::channel, OpKind::create_qudit, OpKind::destroy_measure,
                   OpKind::classical_fn, OpKind::record}) {
        if (op_kind_name(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown operation kind '" + name + "'");
}

ClassicalFunction ClassicalFunction::coin(int output, double p_one) {
    ClassicalFunction f;
    f.outputs = {output};
    f.branches.push_back({1 - p_one, {{{}, {0}}}});
    f.branches.push_back({p_one, {{{}, {1}}}});
    return f;
}

ClassicalFunction ClassicalFunction::randomize_leaked(int input, int output) {
    ClassicalFunction f;
    f.inputs = {input};
    f.outputs = {output};
    f.branches.push_back({0.5, {{{0}, {0}}, {{1}, {1}}, {{2}, {0}}}});
    f.branches.push_back({0.5, {{{0}, {0}}, {{1}, {1}}, {{2}, {1}}}});
    return f;
}

ClassicalFunction ClassicalFunction::copy(int input, int output) {
    ClassicalFunction f;
    f.inputs = {input};
    f.outputs = {output};
    f.branches.push_back({1, {{{0}, {0}}, {{1}, {1}}, {{2}, {2}}}});
    return f;
}

int Circuit::add_qudit(const std::string &name, QuditRole role, size_t local_dim) {
    qudits.push_back({name, role, local_dim});
    return (int)qudits.size() - 1;
}

int Circuit::add_register(const std::string &name) {
    registers.push_back(name);
    return (int)registers.size() - 1;
}

int Circuit::add_probe(const std::string &name) {
    probes.push_back(name);
    return (int)probes.size() - 1;
}

void Circuit::validate() const {
    std::vector<int> alive(qudits.size(), 0);
    for (size_t i = 0; i < ops.size(); i++) {
        const auto &op = ops[i];
        auto fail = [&](const std::string &msg) {
            throw std::invalid_argument("op " + std::to_string(i) + " (" + op.name + "): " + msg);
        };
        std::set<int> seen;
        size_t dim = 1;
        for (int q : op.qudits) {
            if (q < 0 || q >= (int)qudits.size()) {
                fail("undeclared qudit " + std::to_string(q));
            }
            if (!seen.insert(q).second) {
                fail("repeated qudit");
            }
            dim *= qudits[q].local_dim;
        }
        for (int r : op.registers) {
            int limit = (op.kind == OpKind::record && op.record == RecordKind::probe) ? (int)probes.size()
                                                                                      : (int)registers.size();
            if (r < 0 || r >= limit) {
                fail("undeclared register " + std::to_string(r));
            }
        }
        if (op.condition_register >= (int)registers.size()) {
            fail("undeclared condition register");
        }
        if (op.kind != OpKind::create_qudit && op.kind != OpKind::classical_fn) {
            for (int q : op.qudits) {
                if (!alive[q]) {
                    fail("qudit " + qudits[q].name + " is not alive");
                }
            }
        }
        switch (op.kind) {
            case OpKind::unitary:
            case OpKind::channel:
                if (!op.channel || op.channel->input_dim != dim || op.channel->output_dim != dim) {
                    fail("channel dimension does not match targets");
                }
                if (op.kind == OpKind::unitary && op.channel->size() != 1) {
                    fail("unitary must have one Kraus operator");
                }
                break;
            case OpKind::create_qudit:
                if (op.qudits.size() != 1 || !op.channel || op.channel->input_dim != 1 || op.channel->output_dim != dim) {
                    fail("create_qudit needs one target and a 1 -> local_dim channel");
                }
                if (alive[op.qudits[0]]) {
                    fail("qudit already alive");
                }
                alive[op.qudits[0]] = 1;
                break;
            case OpKind::destroy_measure:
                if (op.qudits.size() != 1 || op.registers.size() != 1) {
                    fail("destroy_measure needs one target and one register");
                }
                alive[op.qudits[0]] = 0;
                break;
            case OpKind::classical_fn: {
                if (!op.function || !op.qudits.empty()) {
                    fail("classical_fn needs a function and no qudits");
                }
                double total = 0;
                for (const auto &b : op.function->branches) {
                    total += b.prob;
                    for (const auto &[in, out] : b.table) {
                        if (in.size() != op.function->inputs.size() || out.size() != op.function->outputs.size()) {
                            fail("classical table arity mismatch");
                        }
                    }
                }
                if (std::abs(total - 1) > 1e-12) {
                    fail("classical branch probabilities do not sum to 1");
                }
                for (int r : op.function->inputs) {
                    if (r < 0 || r >= (int)registers.size()) {
                        fail("undeclared register");
                    }
                }
                for (int r : op.function->outputs) {
                    if (r < 0 || r >= (int)registers.size()) {
                        fail("undeclared register");
                    }
                }
                break;
            }
            case OpKind::record:
                if (op.record == RecordKind::probe) {
                    if (op.qudits.size() != 1 || op.registers.size() != 1 || !op.observable ||
                        op.observable->rows() != dim || op.observable->cols() != dim) {
                        fail("probe needs one target, one slot and a matching observable");
                    }
                } else if (op.registers.size() != op.qudits.size()) {
                    fail("snapshot needs one register per qudit");
                }
                break;
        }
    }
}

std::string Circuit::to_text() const {
    std::stringstream out;
    out << "# leaksim circuit v1\n";
    for (const auto &q : qudits) {
        out << "QUDIT " << q.name << " " << role_name(q.role) << " " << q.local_dim << "\n";
    }
    for (const auto &r : registers) {
        out << "REGISTER " << r << "\n";
    }
    for (const auto &p : probes) {
        out << "PROBE " << p << "\n";
    }
    std::unordered_map<const KrausChannel *, int> channel_ids;
    std::unordered_map<const ComplexMatrix *, int> matrix_ids;
    for (const auto &op : ops) {
        if (op.channel && !channel_ids.count(op.channel.get())) {
            int id = (int)channel_ids.size();
            channel_ids[op.channel.get()] = id;
            out << "CHANNEL " << id << " " << channel_to_json(*op.channel).dump() << "\n";
        }
        if (op.observable && !matrix_ids.count(op.observable.get())) {
            int id = (int)matrix_ids.size();
            matrix_ids[op.observable.get()] = id;
            out << "MATRIX " << id << " " << matrix_to_json(*op.observable).dump() << "\n";
        }
    }
    out << "LAYOUT " << layout_to_json(layout).dump() << "\n";
    for (const auto &op : ops) {
        out << op_kind_name(op.kind) << " " << op.name;
        if (!op.qudits.empty()) {
            out << " q=" << join(op.qudits);
        }
        if (!op.registers.empty()) {
            out << " r=" << join(op.registers);
        }
        if (op.channel) {
            out << " ch=" << channel_ids[op.channel.get()];
        }
        if (op.observable) {
            out << " obs=" << matrix_ids[op.observable.get()];
        }
        if (op.kind == OpKind::record) {
            out << " rec=" << (op.record == RecordKind::probe ? "probe" : "snapshot");
        }
        if (op.condition_register >= 0) {
            out << " if=" << op.condition_register << ":" << op.condition_value;
        }
        nlohmann::json t = op.duration;
        out << " t=" << t.dump() << " round=" << op.round;
        if (op.function) {
            out << " fn=" << function_to_json(*op.function).dump();
        }
        out << "\n";
    }
    return out.str();
}

Circuit Circuit::from_text(const std::string &text) {
    Circuit c;
    std::map<int, std::shared_ptr<const KrausChannel>> channels;
    std::map<int, std::shared_ptr<const ComplexMatrix>> matrices;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        try {
            std::stringstream ls(line);
            std::string head;
            ls >> head;
            if (head == "QUDIT") {
                std::string name, role;
                size_t dim;
                ls >> name >> role >> dim;
                c.add_qudit(name, role_from_name(role), dim);
            } else if (head == "REGISTER") {
                std::string name;
                ls >> name;
                c.add_register(name);
            } else if (head == "PROBE") {
                std::string name;
                ls >> name;
                c.add_probe(name);
            } else if (head == "CHANNEL" || head == "MATRIX" || head == "LAYOUT") {
                int id = 0;
                if (head != "LAYOUT") {
                    ls >> id;
                }
                std::string rest;
                std::getline(ls, rest);
                auto j = nlohmann::json::parse(rest);
                if (head == "CHANNEL") {
                    auto ch = std::make_shared<KrausChannel>();
                    ch->input_dim = j.at("input_dim").get<size_t>();
                    ch->output_dim = j.at("output_dim").get<size_t>();
                    for (const auto &k : j.at("kraus")) {
                        std::vector<cplx> e;
                        for (const auto &x : k) {
                            e.emplace_back(x[0].get<double>(), x[1].get<double>());
                        }
                        ch->kraus.emplace_back(ch->output_dim, ch->input_dim, std::move(e));
                    }
                    channels[id] = ch;
                } else if (head == "MATRIX") {
                    matrices[id] = std::make_shared<ComplexMatrix>(matrix_from_json(j));
                } else {
                    c.layout = layout_from_json(j);
                }
            } else {
                Operation op;
                op.kind = op_kind_from_name(head);
                ls >> op.name;
                std::string field;
                while (ls >> field) {
                    auto eq = field.find('=');
                    if (eq == std::string::npos) {
                        throw std::invalid_argument("malformed field '" + field + "'");
                    }
                    std::string key = field.substr(0, eq);
                    std::string val = field.substr(eq + 1);
                    if (key == "fn") {
                        std::string rest;
                        std::getline(ls, rest);
                        op.function = std::make_shared<ClassicalFunction>(function_from_json(nlohmann::json::parse(val + rest)));
                        break;
                    } else if (key == "q") {
                        op.qudits = split_ints(val);
                    } else if (key == "r") {
                        op.registers = split_ints(val);
                    } else if (key == "ch") {
                        op.channel = channels.at(std::stoi(val));
                    } else if (key == "obs") {
                        op.observable = matrices.at(std::stoi(val));
                    } else if (key == "rec") {
                        op.record = val == "probe" ? RecordKind::probe : RecordKind::snapshot;
                    } else if (key == "if") {
                        auto colon = val.find(':');
                        op.condition_register = std::stoi(val.substr(0, colon));
                        op.condition_value = std::stoi(val.substr(colon + 1));
                    } else if (key == "t") {
                        op.duration = nlohmann::json::parse(val).get<double>();
                    } else if (key == "round") {
                        op.round = std::stoi(val);
                    } else {
                        throw std::invalid_argument("unknown field '" + key + "'");
                    }
                }
                c.ops.push_back(std::move(op));
            }
        } catch (const std::exception &e) {
            throw std::invalid_argument("circuit text line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

}  // namespace leaksim
