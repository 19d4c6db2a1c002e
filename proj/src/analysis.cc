#include "leaksim/analysis.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace leaksim {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double binomial_se(uint64_t fails, uint64_t n) {
    if (n == 0) return 0;
    // Continuity-corrected estimate keeps zero-count points finite in the weights.
    double p = (fails + 0.5) / (n + 1.0);
    return std::sqrt(p * (1 - p) / n);
}

}  // namespace

FitResult fit_logical_error(const LogicalCurve &curve, const FitOptions &options) {
    if (curve.rounds.size() != curve.p.size()) throw std::invalid_argument("fit: rounds and P_L sizes differ");
    bool weighted = curve.stderr_.size() == curve.p.size() &&
                    std::all_of(curve.stderr_.begin(), curve.stderr_.end(), [](double s) { return s > 0; });
    FitResult fit;
    int k_max = options.k_max > 0 ? options.k_max : std::numeric_limits<int>::max();
    std::vector<double> xs, ys, ws;
    for (size_t i = 0; i < curve.p.size(); ++i) {
        int k = curve.rounds[i];
        if (k < options.k_min || k > k_max) continue;
        double F = 1 - 2 * curve.p[i];
        if (!(F > 0)) {
            std::cerr << "warning: fit excludes round " << k << " with F_L = " << F << "\n";
            fit.excluded.push_back(k);
            continue;
        }
        xs.push_back(k);
        ys.push_back(std::log(F));
        if (weighted) {
            double sy = 2 * curve.stderr_[i] / F;
            ws.push_back(1 / (sy * sy));
        } else {
            ws.push_back(1);
        }
    }
    if (xs.size() < 2) throw std::invalid_argument("fit: fewer than two usable rounds");
    fit.k_min = (int)*std::min_element(xs.begin(), xs.end());
    fit.k_max = (int)*std::max_element(xs.begin(), xs.end());

    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        S += ws[i];
        Sx += ws[i] * xs[i];
        Sy += ws[i] * ys[i];
        Sxx += ws[i] * xs[i] * xs[i];
        Sxy += ws[i] * xs[i] * ys[i];
    }
    double det = S * Sxx - Sx * Sx;
    if (!(det > 0)) throw std::invalid_argument("fit: degenerate round window");
    double a = (Sxx * Sy - Sx * Sxy) / det;
    double b = (S * Sxy - Sx * Sy) / det;
    double scale = 1;
    if (!weighted) {
        double rss = 0;
        for (size_t i = 0; i < xs.size(); ++i) rss += std::pow(ys[i] - a - b * xs[i], 2);
        scale = xs.size() > 2 ? rss / (xs.size() - 2) : 0;
    }
    fit.cov[0][0] = scale * Sxx / det;
    fit.cov[1][1] = scale * S / det;
    fit.cov[0][1] = fit.cov[1][0] = -scale * Sx / det;

    fit.A = std::exp(a);
    fit.eps = (1 - std::exp(b)) / 2;
    fit.A_err = fit.A * std::sqrt(fit.cov[0][0]);
    fit.eps_err = std::exp(b) / 2 * std::sqrt(fit.cov[1][1]);
    return fit;
}

nlohmann::json fit_to_json(const FitResult &fit) {
    return {{"A", fit.A},
            {"eps", fit.eps},
            {"A_err", fit.A_err},
            {"eps_err", fit.eps_err},
            {"cov_lnA_lnB", {{fit.cov[0][0], fit.cov[0][1]}, {fit.cov[1][0], fit.cov[1][1]}}},
            {"k_min", fit.k_min},
            {"k_max", fit.k_max},
            {"excluded", fit.excluded}};
}

double coherence_decay(double phi, int m, int c) {
    if (c != 0 && c != 1) throw std::invalid_argument("coherence_decay: c must be 0 or 1");
    double base = c == 0 ? std::cos(phi / 2) : std::sin(phi / 2);
    return std::pow(base, m);
}

double leaked_outcome_pmf(double phi, int m, int m0, int rest_parity) {
    if (m0 < 0 || m0 > m) return 0;
    double c2 = std::pow(std::cos(phi / 2), 2);
    double s2 = std::pow(std::sin(phi / 2), 2);
    if (rest_parity % 2) std::swap(c2, s2);
    double log_choose = std::lgamma(m + 1.0) - std::lgamma(m0 + 1.0) - std::lgamma(m - m0 + 1.0);
    return std::exp(log_choose) * std::pow(c2, m0) * std::pow(s2, m - m0);
}

std::vector<double> difference_eq_p2(double T_r, double T_h, double T_L, int k_max) {
    double gp = T_r / T_h, gm = T_r / T_L;
    double g = gp + gm;
    if (g > 1) throw std::invalid_argument("difference equation: per-round probability exceeds 1");
    std::vector<double> p(k_max + 1, 0.0);
    if (g == 0) return p;
    for (int k = 0; k <= k_max; ++k) p[k] = gp / g * (1 - std::pow(1 - g, k));
    return p;
}

ComplexMatrix markov3_generator(const RateModel &m) {
    if (m.g01 < 0 || m.g12 < 0 || m.g21 < 0) throw std::invalid_argument("markov3: negative rate");
    ComplexMatrix R(3, 3);
    R(0, 1) = m.g01;
    R(1, 1) = -(m.g01 + m.g21);
    R(1, 2) = m.g12;
    R(2, 1) = m.g21;
    R(2, 2) = -m.g12;
    return R;
}

ComplexMatrix markov3_projection() {
    return ComplexMatrix(3, 3, {0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 1});
}

std::vector<double> markov3_p2(const RateModel &model, int k_max) {
    ComplexMatrix step = markov3_projection() * matrix_exp(cplx(model.T_r) * markov3_generator(model));
    std::vector<cplx> P{1, 0, 0};
    std::vector<double> out(k_max + 1, 0.0);
    for (int k = 1; k <= k_max; ++k) {
        P = step * P;
        out[k] = P[2].real();
    }
    return out;
}

namespace {

double gamma21_residual(const std::vector<double> &p2, const std::vector<double> &w, RateModel m, double g) {
    m.g21 = g;
    auto model = markov3_p2(m, (int)p2.size());
    double r = 0;
    for (size_t k = 0; k < p2.size(); ++k) r += w[k] * std::pow(p2[k] - model[k + 1], 2);
    return r;
}

}  // namespace

Gamma21Fit fit_gamma21(const std::vector<double> &p2, const std::vector<double> &p2_err, const RateModel &fixed,
                       const DecoherenceParams &physical) {
    if (p2.empty()) throw std::invalid_argument("fit_gamma21: empty population curve");
    std::vector<double> w(p2.size(), 1.0);
    if (p2_err.size() == p2.size()) {
        for (size_t k = 0; k < p2.size(); ++k)
            if (p2_err[k] > 0) w[k] = 1 / (p2_err[k] * p2_err[k]);
    }
    const int K = (int)p2.size();

    // Coarse scan in log g21, then Gauss-Newton in u = ln g21.
    double best_u = 0, best_r = kInf;
    for (int i = 0; i <= 240; ++i) {
        double u = std::log(1e-8) + i * (std::log(1e2) - std::log(1e-8)) / 240;
        double r = gamma21_residual(p2, w, fixed, std::exp(u));
        if (r < best_r) best_r = r, best_u = u;
    }

    Gamma21Fit fit;
    double u = best_u;
    RateModel m = fixed;
    for (int it = 0; it < 100; ++it) {
        fit.iterations = it + 1;
        const double h = 1e-6;
        m.g21 = std::exp(u);
        auto f0 = markov3_p2(m, K);
        m.g21 = std::exp(u + h);
        auto fp = markov3_p2(m, K);
        m.g21 = std::exp(u - h);
        auto fm = markov3_p2(m, K);
        double JtJ = 0, Jtr = 0;
        for (int k = 1; k <= K; ++k) {
            double J = (fp[k] - fm[k]) / (2 * h);
            JtJ += w[k - 1] * J * J;
            Jtr += w[k - 1] * J * (p2[k - 1] - f0[k]);
        }
        if (!(JtJ > 0)) break;
        double du = Jtr / JtJ;
        double r0 = gamma21_residual(p2, w, fixed, std::exp(u));
        double lambda = 1;
        while (lambda > 1e-6 && gamma21_residual(p2, w, fixed, std::exp(u + lambda * du)) > r0) lambda /= 2;
        if (lambda <= 1e-6) {
            fit.converged = std::abs(du) < 1e-8;
            break;
        }
        u += lambda * du;
        if (std::abs(lambda * du) < 1e-12) {
            fit.converged = true;
            break;
        }
    }
    fit.g21 = std::exp(u);
    fit.residual = gamma21_residual(p2, w, fixed, fit.g21);
    fit.effective = physical;
    fit.effective.T_h = 2 / fit.g21;
    fit.effective.heat01 = 0;
    if (!fit.converged)
        std::cerr << "warning: gamma21 fit did not converge, residual " << fit.residual << "\n";
    return fit;
}

NoiseModel thermal_approximation(const NoiseModel &coherent, const Gamma21Fit &fit) {
    NoiseModel m = coherent;
    m.name = coherent.name + "_thermal_approx";
    m.deco = fit.effective;
    m.cz.p = 0;
    return m;
}

NoiseModel thermal_approximation(const NoiseModel &coherent, const std::vector<std::string> &qudits,
                                 const std::vector<Gamma21Fit> &fits) {
    if (qudits.size() != fits.size()) throw std::invalid_argument("thermal_approximation: size mismatch");
    NoiseModel m = coherent;
    m.name = coherent.name + "_thermal_approx";
    m.cz.p = 0;
    for (size_t i = 0; i < qudits.size(); ++i) m.qudit_deco[qudits[i]] = fits[i].effective;
    return m;
}

ShotStatistics::ShotStatistics(const CodeLayout &layout, int blocks)
    : rounds_(layout.rounds),
      blocks_(std::max(1, blocks)),
      stabilizers_(layout.stabilizers.size()),
      data_(layout.data_qudits.size()),
      probes_(layout.leak_probes) {
    block_shots_.assign(blocks_, 0);
    fails_.assign(blocks_, std::vector<uint64_t>(rounds_, 0));
    events_.assign(stabilizers_, std::vector<uint64_t>(rounds_, 0));
    event_trials_ = events_;
    p2_sum_.assign(data_, std::vector<double>(rounds_, 0.0));
    p2_sq_ = p2_sum_;
    p2_avg_sum_.assign(rounds_, 0.0);
    p2_avg_sq_ = p2_avg_sum_;
}

void ShotStatistics::add(const TrajectoryRecord &record, const Decoder *decoder) {
    if (record.aborted) {
        ++aborted_;
        return;
    }
    ++shots_;
    int b = (int)(record.shot % blocks_);
    ++block_shots_[b];
    if (decoder) {
        decoded_ = true;
        for (int k = 1; k <= std::min(rounds_, decoder->max_rounds()); ++k) {
            auto events = decoder->detection_events(record.registers, k);
            auto res = decoder->decode(events, k);
            greedy_ += res.greedy;
            fails_[b][k - 1] += decoder->observable(record.registers, k) != res.correction;
        }
        for (size_t s = 0; s < stabilizers_; ++s) {
            for (int r = 0; r < rounds_; ++r) {
                int e = decoder->stabilizer_event(record.registers, (int)s, r);
                if (e < 0) continue;
                ++event_trials_[s][r];
                events_[s][r] += e;
            }
        }
    }
    for (int r = 0; r < (int)probes_.size() && r < rounds_; ++r) {
        if (probes_[r].size() != data_) continue;
        double avg = 0;
        for (size_t i = 0; i < data_; ++i) {
            double v = record.probes.at(probes_[r][i]).real();
            p2_sum_[i][r] += v;
            p2_sq_[i][r] += v * v;
            avg += v;
        }
        avg /= std::max<size_t>(1, data_);
        p2_avg_sum_[r] += avg;
        p2_avg_sq_[r] += avg * avg;
    }
}

void ShotStatistics::merge(const ShotStatistics &o) {
    if (o.rounds_ != rounds_ || o.blocks_ != blocks_ || o.stabilizers_ != stabilizers_ || o.data_ != data_)
        throw std::invalid_argument("ShotStatistics::merge: shape mismatch");
    shots_ += o.shots_;
    aborted_ += o.aborted_;
    greedy_ += o.greedy_;
    decoded_ = decoded_ || o.decoded_;
    for (int b = 0; b < blocks_; ++b) {
        block_shots_[b] += o.block_shots_[b];
        for (int r = 0; r < rounds_; ++r) fails_[b][r] += o.fails_[b][r];
    }
    for (size_t s = 0; s < stabilizers_; ++s)
        for (int r = 0; r < rounds_; ++r) {
            events_[s][r] += o.events_[s][r];
            event_trials_[s][r] += o.event_trials_[s][r];
        }
    for (size_t i = 0; i < data_; ++i)
        for (int r = 0; r < rounds_; ++r) {
            p2_sum_[i][r] += o.p2_sum_[i][r];
            p2_sq_[i][r] += o.p2_sq_[i][r];
        }
    for (int r = 0; r < rounds_; ++r) {
        p2_avg_sum_[r] += o.p2_avg_sum_[r];
        p2_avg_sq_[r] += o.p2_avg_sq_[r];
    }
}

LogicalCurve ShotStatistics::logical_curve_without(int skip) const {
    LogicalCurve c;
    uint64_t n = 0;
    for (int b = 0; b < blocks_; ++b)
        if (b != skip) n += block_shots_[b];
    for (int k = 1; k <= rounds_; ++k) {
        uint64_t f = 0;
        for (int b = 0; b < blocks_; ++b)
            if (b != skip) f += fails_[b][k - 1];
        c.rounds.push_back(k);
        c.p.push_back(n ? (double)f / n : kNaN);
        c.stderr_.push_back(binomial_se(f, n));
    }
    return c;
}

LogicalCurve ShotStatistics::logical_curve() const { return logical_curve_without(-1); }

std::vector<std::vector<double>> ShotStatistics::def() const {
    std::vector<std::vector<double>> out(stabilizers_, std::vector<double>(rounds_, kNaN));
    for (size_t s = 0; s < stabilizers_; ++s)
        for (int r = 0; r < rounds_; ++r)
            if (event_trials_[s][r]) out[s][r] = (double)events_[s][r] / event_trials_[s][r];
    return out;
}

namespace {

double mean_of(double sum, uint64_t n) { return n ? sum / n : kNaN; }

double se_of(double sum, double sq, uint64_t n) {
    if (n < 2) return kNaN;
    double mean = sum / n;
    double var = std::max(0.0, (sq - n * mean * mean) / (n - 1));
    return std::sqrt(var / n);
}

}  // namespace

std::vector<std::vector<double>> ShotStatistics::p2_mean() const {
    std::vector<std::vector<double>> out(data_, std::vector<double>(rounds_));
    for (size_t i = 0; i < data_; ++i)
        for (int r = 0; r < rounds_; ++r) out[i][r] = mean_of(p2_sum_[i][r], shots_);
    return out;
}

std::vector<std::vector<double>> ShotStatistics::p2_stderr() const {
    std::vector<std::vector<double>> out(data_, std::vector<double>(rounds_));
    for (size_t i = 0; i < data_; ++i)
        for (int r = 0; r < rounds_; ++r) out[i][r] = se_of(p2_sum_[i][r], p2_sq_[i][r], shots_);
    return out;
}

std::vector<double> ShotStatistics::p2_average() const {
    std::vector<double> out(rounds_);
    for (int r = 0; r < rounds_; ++r) out[r] = mean_of(p2_avg_sum_[r], shots_);
    return out;
}

std::vector<double> ShotStatistics::p2_average_stderr() const {
    std::vector<double> out(rounds_);
    for (int r = 0; r < rounds_; ++r) out[r] = se_of(p2_avg_sum_[r], p2_avg_sq_[r], shots_);
    return out;
}

AddedRate added_logical_error(const ShotStatistics &leaky, const ShotStatistics &baseline,
                              const FitOptions &options) {
    AddedRate out;
    out.leaky = fit_logical_error(leaky.logical_curve(), options);
    out.baseline = fit_logical_error(baseline.logical_curve(), options);
    out.value = out.leaky.eps - out.baseline.eps;
    out.unpaired_err = std::hypot(out.leaky.eps_err, out.baseline.eps_err);
    out.paired_err = kNaN;
    int B = leaky.blocks();
    if (B != baseline.blocks() || B < 2) return out;
    std::vector<double> reps;
    for (int b = 0; b < B; ++b) {
        try {
            double l = fit_logical_error(leaky.logical_curve_without(b), options).eps;
            double r = fit_logical_error(baseline.logical_curve_without(b), options).eps;
            reps.push_back(l - r);
        } catch (const std::invalid_argument &) {
            return out;
        }
    }
    double mean = 0;
    for (double v : reps) mean += v / B;
    double var = 0;
    for (double v : reps) var += (v - mean) * (v - mean);
    out.paired_err = std::sqrt(var * (B - 1) / B);
    return out;
}

std::vector<double> added_logical_curve(const ShotStatistics &leaky, const ShotStatistics &baseline) {
    auto a = leaky.logical_curve(), b = baseline.logical_curve();
    std::vector<double> out;
    for (size_t i = 0; i < std::min(a.p.size(), b.p.size()); ++i) out.push_back(a.p[i] - b.p[i]);
    return out;
}

double mean_percentage_error(const std::vector<double> &approx, const std::vector<double> &reference) {
    double sum = 0;
    int n = 0;
    for (size_t i = 0; i < std::min(approx.size(), reference.size()); ++i) {
        if (reference[i] == 0 || !std::isfinite(reference[i]) || !std::isfinite(approx[i])) continue;
        sum += std::abs(approx[i] - reference[i]) / std::abs(reference[i]);
        ++n;
    }
    return n ? 100 * sum / n : kNaN;
}

double long_time_mean(const std::vector<std::vector<double>> &table, int first_round,
                      const std::vector<int> &stabilizers) {
    std::vector<int> rows = stabilizers;
    if (rows.empty())
        for (size_t s = 0; s < table.size(); ++s) rows.push_back((int)s);
    double sum = 0;
    int n = 0;
    for (int s : rows)
        for (size_t r = std::max(0, first_round); r < table.at(s).size(); ++r)
            if (std::isfinite(table[s][r])) sum += table[s][r], ++n;
    return n ? sum / n : kNaN;
}

std::vector<std::vector<double>> table_difference(const std::vector<std::vector<double>> &a,
                                                  const std::vector<std::vector<double>> &b) {
    if (a.size() != b.size()) throw std::invalid_argument("table_difference: shape mismatch");
    auto out = a;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw std::invalid_argument("table_difference: shape mismatch");
        for (size_t j = 0; j < a[i].size(); ++j) out[i][j] = a[i][j] - b[i][j];
    }
    return out;
}

std::string logical_csv(const LogicalCurve &curve) {
    std::ostringstream os;
    os.precision(10);
    os << "round,P_L,stderr\n";
    for (size_t i = 0; i < curve.p.size(); ++i)
        os << curve.rounds[i] << ',' << curve.p[i] << ',' << (i < curve.stderr_.size() ? curve.stderr_[i] : 0.0)
           << '\n';
    return os.str();
}

std::string def_csv(const std::vector<std::vector<double>> &def, const CodeLayout &layout) {
    std::ostringstream os;
    os.precision(10);
    os << "stabilizer,round,DEF\n";
    for (size_t s = 0; s < def.size(); ++s)
        for (size_t r = 0; r < def[s].size(); ++r) {
            if (!std::isfinite(def[s][r])) continue;
            os << layout.stabilizers.at(s).name << ',' << r << ',' << def[s][r] << '\n';
        }
    return os.str();
}

std::string p2_csv(const ShotStatistics &stats, const Circuit &circuit) {
    std::ostringstream os;
    os.precision(10);
    os << "qudit,round,P2,stderr\n";
    auto mean = stats.p2_mean();
    auto se = stats.p2_stderr();
    for (size_t i = 0; i < mean.size(); ++i)
        for (size_t r = 0; r < mean[i].size(); ++r)
            os << circuit.qudits.at(circuit.layout.data_qudits.at(i)).name << ',' << r << ',' << mean[i][r] << ','
               << se[i][r] << '\n';
    return os.str();
}

std::vector<Gamma21Fit> fit_gamma21_per_qudit(const ShotStatistics &stats, const RateModel &fixed,
                                              const DecoherenceParams &physical) {
    auto mean = stats.p2_mean();
    auto se = stats.p2_stderr();
    std::vector<Gamma21Fit> fits;
    for (size_t q = 0; q < mean.size(); ++q) {
        double floor = kInf;
        for (double e : se[q])
            if (e > 0) floor = std::min(floor, e);
        std::vector<double> err = se[q];
        for (double &e : err)
            if (!(e > 0)) e = std::isinf(floor) ? 1 : floor;
        fits.push_back(fit_gamma21(mean[q], err, fixed, physical));
    }
    return fits;
}

}  // namespace leaksim
