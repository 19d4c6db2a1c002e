#include "leaksim/noise.h"

#include <cmath>
#include <stdexcept>

namespace leaksim {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_time(double t, const char *name) {
    if (!(t > 0)) {
        throw std::invalid_argument(std::string("decoherence time ") + name + " must be > 0 or inf");
    }
}

double json_time(const nlohmann::json &v, const std::string &path) {
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "inf" || s == "infinity") {
            return kInf;
        }
        throw std::invalid_argument(path + ": expected a number or \"inf\"");
    }
    if (v.is_null()) {
        return kInf;
    }
    if (!v.is_number()) {
        throw std::invalid_argument(path + ": expected a number or \"inf\"");
    }
    return v.get<double>();
}

nlohmann::json time_json(double t) {
    if (std::isinf(t)) {
        return "inf";
    }
    return t;
}

void check_deco(const DecoherenceParams &d) {
    check_time(d.T1, "T1");
    check_time(d.Tphi, "Tphi");
    check_time(d.T_L, "T_L");
    check_time(d.T_h, "T_h");
    if (!(d.heat01 >= 0)) {
        throw std::invalid_argument("heat01 must be >= 0");
    }
}

DecoherenceParams decoherence_from_json(const nlohmann::json &v, DecoherenceParams d, const std::string &base) {
    if (!v.is_object()) {
        throw std::invalid_argument(base + ": expected an object");
    }
    for (const auto &[k, x] : v.items()) {
        std::string path = base + "." + k;
        if (k == "T1") {
            d.T1 = json_time(x, path);
        } else if (k == "Tphi") {
            d.Tphi = json_time(x, path);
        } else if (k == "T_L") {
            d.T_L = json_time(x, path);
        } else if (k == "T_h") {
            d.T_h = json_time(x, path);
        } else if (k == "heat01") {
            if (!x.is_number()) {
                throw std::invalid_argument(path + ": expected a number");
            }
            d.heat01 = x.get<double>();
        } else {
            throw std::invalid_argument(path + ": unknown field");
        }
    }
    return d;
}

nlohmann::json decoherence_json(const DecoherenceParams &d) {
    return {{"T1", time_json(d.T1)},
            {"Tphi", time_json(d.Tphi)},
            {"T_L", time_json(d.T_L)},
            {"T_h", time_json(d.T_h)},
            {"heat01", d.heat01}};
}

}  // namespace

std::vector<ComplexMatrix> lindblad_operators(const DecoherenceParams &params, size_t local_dim) {
    if (local_dim != 2 && local_dim != 3) {
        throw std::invalid_argument("lindblad_operators: local_dim must be 2 or 3");
    }
    check_deco(params);
    std::vector<ComplexMatrix> ops;
    size_t d = local_dim;
    if (!std::isinf(params.T_h) && (params.heat01 > 0 || d == 3)) {
        ComplexMatrix heat(d, d);
        heat(1, 0) = std::sqrt(params.heat01 / params.T_h);
        if (d == 3) {
            heat(2, 1) = std::sqrt(2 / params.T_h);
        }
        ops.push_back(heat);
    }
    if (!std::isinf(params.T1) || (d == 3 && !std::isinf(params.T_L))) {
        ComplexMatrix cool(d, d);
        if (!std::isinf(params.T1)) {
            cool(0, 1) = std::sqrt(1 / params.T1);
        }
        if (d == 3 && !std::isinf(params.T_L)) {
            cool(1, 2) = std::sqrt(1 / params.T_L);
        }
        ops.push_back(cool);
    }
    if (!std::isinf(params.Tphi)) {
        ComplexMatrix n(d, d);
        for (size_t k = 0; k < d; k++) {
            n(k, k) = std::sqrt(2 / params.Tphi) * (double)k;
        }
        ops.push_back(n);
    }
    return ops;
}

ComplexMatrix lindbladian(const std::vector<ComplexMatrix> &ops) {
    if (ops.empty()) {
        throw std::invalid_argument("lindbladian: no operators");
    }
    size_t d = ops[0].rows();
    ComplexMatrix id = ComplexMatrix::identity(d);
    ComplexMatrix s(d * d, d * d);
    for (const auto &l : ops) {
        ComplexMatrix ldl = l.adjoint() * l;
        s += kron(l, l.conj());
        s -= 0.5 * kron(ldl, id);
        s -= 0.5 * kron(id, ldl.transpose());
    }
    return s;
}

KrausChannel lindblad_channel(const DecoherenceParams &params, double t_ns, size_t local_dim) {
    if (!(t_ns >= 0)) {
        throw std::invalid_argument("lindblad_channel: t must be >= 0");
    }
    auto ops = lindblad_operators(params, local_dim);
    if (ops.empty() || t_ns == 0) {
        return KrausChannel::identity(local_dim);
    }
    ComplexMatrix gen = lindbladian(ops);
    ComplexMatrix e = matrix_exp((t_ns / 1000.0) * gen);
    ComplexMatrix choi = superoperator_to_choi(e, local_dim, local_dim);
    return choi_to_kraus(choi, local_dim, local_dim);
}

ComplexMatrix leaked_phase(double eta, double t_ns, size_t local_dim) {
    ComplexMatrix u = ComplexMatrix::identity(local_dim);
    if (local_dim == 3) {
        u(2, 2) = std::polar(1.0, -2 * kPi * eta * t_ns);
    }
    return u;
}

ComplexMatrix cz_unitary(const CzGateParams &params) {
    if (!(params.p >= 0 && params.p <= 1)) {
        throw std::invalid_argument("cz_gate: p must be in [0, 1]");
    }
    // Index 3*a + b for (a, b) = (non-leaking operand, leaking operand).
    std::vector<cplx> phases(9, 1.0);
    phases[3 * 1 + 1] = -1.0;
    phases[3 * 0 + 2] = std::polar(1.0, params.phi12 + params.phi);
    phases[3 * 1 + 2] = std::polar(1.0, params.phi12);
    cplx leak_phase = std::polar(1.0, -2 * kPi * params.eta * params.duration);
    for (size_t a = 0; a < 3; a++) {
        for (size_t b = 0; b < 3; b++) {
            if (a == 2) {
                phases[3 * a + b] *= leak_phase;
            }
            if (b == 2) {
                phases[3 * a + b] *= leak_phase;
            }
        }
    }
    ComplexMatrix diag = ComplexMatrix::diagonal(phases);
    ComplexMatrix mix = ComplexMatrix::identity(9);
    double c = std::sqrt(1 - params.p);
    double s = std::sqrt(params.p);
    size_t i11 = 4;
    size_t i02 = 2;
    mix(i11, i11) = c;
    mix(i11, i02) = -std::polar(1.0, params.phi_t) * s;
    mix(i02, i11) = std::polar(1.0, -params.phi_t) * s;
    mix(i02, i02) = c;
    ComplexMatrix u = mix * diag;
    if (params.leaking_qudit == 1) {
        return u;
    }
    if (params.leaking_qudit != 0) {
        throw std::invalid_argument("cz_gate: leaking_qudit must be 0 or 1");
    }
    ComplexMatrix swap(9, 9);
    for (size_t a = 0; a < 3; a++) {
        for (size_t b = 0; b < 3; b++) {
            swap(3 * b + a, 3 * a + b) = 1.0;
        }
    }
    return swap * u * swap;
}

KrausChannel cz_gate(const CzGateParams &params) {
    return KrausChannel::make({cz_unitary(params)}, 1e-12);
}

ComplexMatrix hadamard(size_t local_dim) {
    ComplexMatrix h = ComplexMatrix::identity(local_dim);
    double r = std::sqrt(0.5);
    h(0, 0) = r;
    h(0, 1) = r;
    h(1, 0) = r;
    h(1, 1) = -r;
    return h;
}

ComplexMatrix pauli_x(size_t local_dim) {
    ComplexMatrix x = ComplexMatrix::identity(local_dim);
    x(0, 0) = 0;
    x(1, 1) = 0;
    x(0, 1) = 1;
    x(1, 0) = 1;
    return x;
}

KrausChannel stabilizer_cz_kraus(double phi) {
    ComplexMatrix l0(3, 3);
    l0(0, 0) = 1;
    l0(2, 2) = std::cos(phi / 2);
    ComplexMatrix l1(3, 3);
    l1(1, 1) = 1;
    l1(2, 2) = cplx(0, std::sin(phi / 2));
    ComplexMatrix p0 = ComplexMatrix::outer(2, 0, 0);
    ComplexMatrix p1 = ComplexMatrix::outer(2, 1, 1);
    ComplexMatrix k0 = kron(l0, p0) + kron(l1, p1);
    ComplexMatrix k1 = kron(l0, p1) + kron(l1, p0);
    return KrausChannel::make({k0, k1});
}

NoiseModel noise_preset(const std::string &name) {
    NoiseModel m;
    m.name = name;
    if (name == "noiseless") {
        return m;
    }
    if (name == "thermal") {
        m.deco = {20, 80, 10, 1000};
        return m;
    }
    if (name == "coherent") {
        m.deco = {20, 80, 10, kInf};
        m.cz.p = 2.4e-3;
        m.cz.phi_t = 0;
        m.eta = 0.3;
        m.cz.eta = 0.3;
        return m;
    }
    if (name == "physical") {
        m.deco = {20, 40, 10, 1000};
        m.cz.p = 4e-4;
        m.eta = 0.2;
        m.cz.eta = 0.2;
        return m;
    }
    throw std::invalid_argument("unknown noise preset '" + name + "'");
}

std::vector<std::string> noise_preset_names() {
    return {"noiseless", "thermal", "coherent", "physical"};
}

NoiseModel leak_free(NoiseModel model) {
    model.deco.T_h = kInf;
    for (auto &[name, d] : model.qudit_deco) {
        d.T_h = kInf;
    }
    model.cz.p = 0;
    model.name += "-leak-free";
    return model;
}

NoiseModel noise_from_json(const nlohmann::json &j, NoiseModel base) {
    if (!j.is_object()) {
        throw std::invalid_argument("noise: expected an object");
    }
    NoiseModel m = base;
    for (const auto &[key, v] : j.items()) {
        if (key == "preset") {
            continue;
        } else if (key == "name") {
            m.name = v.get<std::string>();
        } else if (key == "eta") {
            m.eta = v.get<double>();
            m.cz.eta = m.eta;
        } else if (key == "decoherence") {
            m.deco = decoherence_from_json(v, m.deco, "noise.decoherence");
        } else if (key == "qudit_decoherence") {
            continue;
        } else if (key == "cz") {
            for (const auto &[k, x] : v.items()) {
                std::string path = "noise.cz." + k;
                if (!x.is_number()) {
                    throw std::invalid_argument(path + ": expected a number");
                }
                if (k == "p") {
                    m.cz.p = x.get<double>();
                    if (!(m.cz.p >= 0 && m.cz.p <= 1)) {
                        throw std::invalid_argument(path + ": must be in [0, 1]");
                    }
                } else if (k == "phi_t") {
                    m.cz.phi_t = x.get<double>();
                } else if (k == "phi") {
                    m.cz.phi = x.get<double>();
                } else if (k == "phi12") {
                    m.cz.phi12 = x.get<double>();
                } else if (k == "eta") {
                    m.cz.eta = x.get<double>();
                } else if (k == "duration") {
                    m.cz.duration = x.get<double>();
                } else {
                    throw std::invalid_argument(path + ": unknown field");
                }
            }
        } else if (key == "durations") {
            for (const auto &[k, x] : v.items()) {
                std::string path = "noise.durations." + k;
                if (!x.is_number() || x.get<double>() < 0) {
                    throw std::invalid_argument(path + ": expected a number >= 0");
                }
                if (k == "unitary") {
                    m.durations.unitary = x.get<double>();
                    m.cz.duration = m.durations.unitary;
                } else if (k == "reset") {
                    m.durations.reset = x.get<double>();
                } else if (k == "measure") {
                    m.durations.measure = x.get<double>();
                } else {
                    throw std::invalid_argument(path + ": unknown field");
                }
            }
        } else {
            throw std::invalid_argument("noise." + key + ": unknown field");
        }
    }
    check_deco(m.deco);
    if (j.contains("qudit_decoherence")) {
        const auto &q = j["qudit_decoherence"];
        if (!q.is_object()) {
            throw std::invalid_argument("noise.qudit_decoherence: expected an object");
        }
        m.qudit_deco.clear();
        for (const auto &[name, v] : q.items()) {
            m.qudit_deco[name] = decoherence_from_json(v, m.deco, "noise.qudit_decoherence." + name);
            check_deco(m.qudit_deco[name]);
        }
    }
    return m;
}

nlohmann::json noise_to_json(const NoiseModel &m) {
    nlohmann::json j = {{"name", m.name},
            {"eta", m.eta},
            {"decoherence", decoherence_json(m.deco)},
            {"cz",
             {{"p", m.cz.p},
              {"phi_t", m.cz.phi_t},
              {"phi", m.cz.phi},
              {"phi12", m.cz.phi12},
              {"eta", m.cz.eta},
              {"duration", m.cz.duration}}},
            {"durations",
             {{"unitary", m.durations.unitary}, {"reset", m.durations.reset}, {"measure", m.durations.measure}}}};
    if (!m.qudit_deco.empty()) {
        auto &q = j["qudit_decoherence"] = nlohmann::json::object();
        for (const auto &[name, d] : m.qudit_deco) {
            q[name] = decoherence_json(d);
        }
    }
    return j;
}

}  // namespace leaksim
