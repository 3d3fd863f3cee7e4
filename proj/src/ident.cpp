#include "tem/ident.hpp"

#include "tem/config.hpp"
#include "tem/discretize.hpp"
#include "tem/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tem::ident {

void IdentWindow::validate() const
{
    if (t_end - t_begin < 60.0) throw ConfigError("ident: window span must be >= 60 s");
    if (t.size() < 2 || t.size() != x_ref.size() || t.size() != u.size() ||
        t.size() != d.size() || t.size() != v.size())
        throw DimensionMismatchError("ident: inconsistent window arrays");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw ConfigError("ident: samples must be time-ordered");
    for (int i = 0; i < kNx; ++i)
        if (g_weights[i] < 0.0) throw ConfigError("ident: G must be nonnegative");
}

double IdentWindow::mean_T_amb() const
{
    double s = 0;
    for (const auto& f : d) s += f.T_amb;
    return s / static_cast<double>(d.size());
}

double IdentWindow::mean_I_b() const
{
    double s = 0;
    for (const auto& f : d) s += f.I_b;
    return s / static_cast<double>(d.size());
}

StateVector IdentWindow::mean_state() const
{
    StateVector m{};
    for (const auto& x : x_ref)
        for (int i = 0; i < kNx; ++i) m[i] += x[i];
    for (int i = 0; i < kNx; ++i) m[i] /= static_cast<double>(x_ref.size());
    return m;
}

StateVector default_g_weights()
{
    StateVector g;
    const double wt = 1.0 / (50.0 * 50.0);
    const double wp = 1.0 / (1e5 * 1e5);
    g = {{wt, wt, wt, 1.0, wt, wp, wp, wt, wt}};
    return g;
}

namespace {

constexpr int kNg = 10;
using DG = Dual<kNg>;

struct GammaDual {
    std::array<DG, kNg> g;
    DG operator[](int i) const { return g[static_cast<std::size_t>(i)]; }
};

// One shooting pass: residual norm plus (optionally) the Gauss-Newton
// normal equations accumulated from the tangent sensitivities.
double rollout_residual(const Model& com, const IdentWindow& w, const GammaVector& gamma,
                        Eigen::Matrix<double, kNg, kNg>* JtJ, Eigen::Matrix<double, kNg, 1>* Jtr)
{
    const std::size_t n = w.t.size();
    double cost = 0.0;

    if (JtJ == nullptr) {
        StateVector x = w.x_ref[0];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double dt = w.t[i + 1] - w.t[i];
            x = rk4_step_live(com, x, w.u[i], w.d[i], w.v[i], gamma, dt, Guards::Smooth);
            for (int s = 0; s < kNx; ++s) {
                const double e = w.x_ref[i + 1][s] - x[s];
                cost += dt * w.g_weights[s] * e * e;
            }
        }
        return cost;
    }

    GammaDual gd;
    for (int i = 0; i < kNg; ++i) gd.g[static_cast<std::size_t>(i)] = DG(gamma[i], i);
    StateT<DG> x;
    for (int s = 0; s < kNx; ++s) x[s] = DG(w.x_ref[0][s]);

    JtJ->setZero();
    Jtr->setZero();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dt = w.t[i + 1] - w.t[i];
        x = rk4_step_live(com, x, InputT<DG>{{DG(w.u[i][0]), DG(w.u[i][1]), DG(w.u[i][2]),
                                              DG(w.u[i][3]), DG(w.u[i][4]), DG(w.u[i][5])}},
                          w.d[i], w.v[i], gd, dt, Guards::Smooth);
        for (int s = 0; s < kNx; ++s) {
            const double wgt = dt * w.g_weights[s];
            if (wgt == 0.0) continue;
            const double e = w.x_ref[i + 1][s] - x[s].v; // residual
            cost += wgt * e * e;
            Eigen::Matrix<double, kNg, 1> row;
            for (int p = 0; p < kNg; ++p) row[p] = -x[s].d[static_cast<std::size_t>(p)];
            *JtJ += wgt * (row * row.transpose());
            *Jtr += wgt * e * row;
        }
    }
    return cost;
}

} // namespace

FitResult fit_window(const Model& com, const IdentWindow& w, const GammaVector& gamma_init,
                     double lo, double hi)
{
    w.validate();
    if (!gamma_init.within_bounds()) throw ConfigError("ident: gamma_init outside bounds");

    FitResult out;
    GammaVector gamma = gamma_init;
    out.residual_init = rollout_residual(com, w, gamma, nullptr, nullptr);
    double best = out.residual_init;
    GammaVector best_gamma = gamma;

    double lambda = 1e-3;
    Eigen::Matrix<double, kNg, kNg> JtJ;
    Eigen::Matrix<double, kNg, 1> Jtr;

    for (int it = 0; it < 60; ++it) {
        const double cost = rollout_residual(com, w, gamma, &JtJ, &Jtr);
        if (cost < best) {
            best = cost;
            best_gamma = gamma;
        }
        bool stepped = false;
        for (int inner = 0; inner < 10; ++inner) {
            Eigen::Matrix<double, kNg, kNg> H = JtJ;
            for (int i = 0; i < kNg; ++i)
                H(i, i) += lambda * std::max(JtJ(i, i), 1e-12) + 1e-14;
            const Eigen::Matrix<double, kNg, 1> step = H.ldlt().solve(-Jtr);
            if (!step.allFinite()) break;
            GammaVector trial;
            double max_step = 0.0;
            for (int i = 0; i < kNg; ++i) {
                trial[i] = std::clamp(gamma[i] + step[i], lo, hi);
                max_step = std::max(max_step, std::abs(trial[i] - gamma[i]));
            }
            if (max_step < 1e-10) break;
            const double trial_cost = rollout_residual(com, w, trial, nullptr, nullptr);
            if (trial_cost < cost) {
                gamma = trial;
                lambda = std::max(1e-12, lambda / 3.0);
                stepped = true;
                if (trial_cost < best) {
                    best = trial_cost;
                    best_gamma = gamma;
                }
                break;
            }
            lambda *= 4.0;
        }
        out.iterations = it + 1;
        if (!stepped) break;
        if (best > 0.0 && std::abs(best - cost) < 1e-15 * std::max(1.0, cost)) break;
    }

    out.gamma = best_gamma;
    out.residual = best;
    return out;
}

GammaMap build_map(const std::vector<IdentWindow>& windows, const std::vector<FitResult>& fits)
{
    if (windows.size() != fits.size())
        throw DimensionMismatchError("build_map: one fit per window required");
    GammaMap map;
    for (std::size_t j = 0; j < windows.size(); ++j) {
        GammaAnchor a;
        a.T_amb = windows[j].mean_T_amb();
        a.x_mean = windows[j].mean_state();
        a.I_b = windows[j].mean_I_b();
        a.gamma = fits[j].gamma;
        a.window_id = static_cast<int>(j);
        a.residual = fits[j].residual;

        bool replaced = false;
        for (auto& prev : map.anchors) {
            double dx = 0;
            for (int i = 0; i < kNx; ++i) dx += std::abs(prev.x_mean[i] - a.x_mean[i]);
            if (std::abs(prev.T_amb - a.T_amb) < 1e-9 && std::abs(prev.I_b - a.I_b) < 1e-9 &&
                dx < 1e-9) {
                std::fprintf(stderr,
                             "[ident] duplicate operating condition: window %d replaces %d\n",
                             a.window_id, prev.window_id);
                prev = a;
                replaced = true;
                break;
            }
        }
        if (!replaced) map.anchors.push_back(a);
    }
    return map;
}

GammaVector GammaMap::query(double T_amb, const StateVector& x, double I_b) const
{
    if (anchors.empty()) throw EmptyMapError("gamma map: empty");
    const StateVector scales = {{50, 50, 50, 1, 50, 1e5, 1e5, 50, 50}};
    double wsum = 0.0;
    std::array<double, 10> acc{};
    for (const auto& a : anchors) {
        double d2 = std::pow((T_amb - a.T_amb) / 10.0, 2) + std::pow((I_b - a.I_b) / 50.0, 2);
        for (int i = 0; i < kNx; ++i)
            d2 += std::pow((x[i] - a.x_mean[i]) / scales[i], 2) / kNx;
        if (d2 < 1e-14) return a.gamma; // exact anchor hit
        const double w = 1.0 / d2;
        wsum += w;
        for (int i = 0; i < 10; ++i) acc[static_cast<std::size_t>(i)] += w * a.gamma[i];
    }
    GammaVector g;
    for (int i = 0; i < 10; ++i) g[i] = acc[static_cast<std::size_t>(i)] / wsum;
    return g;
}

GammaMap GammaMap::identity()
{
    GammaMap m;
    GammaAnchor a;
    a.T_amb = 273.15;
    a.I_b = 0;
    a.gamma = GammaVector{};
    a.window_id = -1;
    m.anchors.push_back(a);
    return m;
}

void GammaMap::save(const std::string& path) const
{
    config::File f;
    f.set_num("map", "num_anchors", static_cast<double>(anchors.size()));
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const std::string sec = "anchor." + std::to_string(i);
        const auto& a = anchors[i];
        f.set_num(sec, "T_amb_K", a.T_amb);
        f.set_num(sec, "I_b_A", a.I_b);
        f.set_list(sec, "x_mean", std::vector<double>(a.x_mean.v.begin(), a.x_mean.v.end()));
        f.set_list(sec, "gamma", std::vector<double>(a.gamma.g.begin(), a.gamma.g.end()));
        f.set_num(sec, "window_id", a.window_id);
        f.set_num(sec, "residual", a.residual);
    }
    f.write(path);
}

GammaMap GammaMap::load(const std::string& path)
{
    const config::File f = config::File::parse(path);
    GammaMap m;
    const int n = f.get_int("map", "num_anchors", 0);
    for (int i = 0; i < n; ++i) {
        const std::string sec = "anchor." + std::to_string(i);
        GammaAnchor a;
        a.T_amb = f.get_num(sec, "T_amb_K");
        a.I_b = f.get_num(sec, "I_b_A");
        const auto xm = f.get_list(sec, "x_mean");
        const auto gm = f.get_list(sec, "gamma");
        if (xm.size() != kNx || gm.size() != 10)
            throw ConfigError("gamma map: bad anchor arrays in " + sec);
        std::copy(xm.begin(), xm.end(), a.x_mean.v.begin());
        std::copy(gm.begin(), gm.end(), a.gamma.g.begin());
        a.window_id = f.get_int(sec, "window_id", -1);
        a.residual = f.get_num(sec, "residual", 0.0);
        m.anchors.push_back(a);
    }
    if (m.anchors.empty()) throw EmptyMapError("gamma map: no anchors in " + path);
    return m;
}

GammaMap identify(const Model& com, const std::vector<IdentWindow>& windows,
                  const GammaVector& gamma_init, std::vector<FitResult>* fits_out)
{
    std::vector<FitResult> fits(windows.size());
    const int n = static_cast<int>(windows.size());
    if (tem::parallel::enabled()) {
#pragma omp parallel for schedule(dynamic) num_threads(tem::parallel::max_threads())
        for (int i = 0; i < n; ++i)
            fits[static_cast<std::size_t>(i)] =
                fit_window(com, windows[static_cast<std::size_t>(i)], gamma_init);
    } else {
        for (int i = 0; i < n; ++i)
            fits[static_cast<std::size_t>(i)] =
                fit_window(com, windows[static_cast<std::size_t>(i)], gamma_init);
    }
    if (fits_out != nullptr) *fits_out = fits;
    return build_map(windows, fits);
}

// ---- timeseries schema helpers ----

namespace cols {
const char* kState[kNx] = {"T_mot_K", "T_inv_K",  "T_dcdc_K", "SOC",     "T_b_K",
                           "p_in_Pa", "p_out_Pa", "T_int_K",  "T_cair_K"};
const char* kInput[kNu] = {"omega_comp_rpm", "mdot_bl_kg_s", "omega_mot_p_rpm",
                           "omega_b_p_rpm",  "Q_ht_W",       "omega_fan_rpm"};
} // namespace cols

std::vector<std::string> timeseries_state_columns()
{
    std::vector<std::string> v;
    for (const auto* c : cols::kState) v.emplace_back(c);
    return v;
}

StateVector read_state_row(const csv::Table& t, std::size_t row)
{
    StateVector x;
    for (int i = 0; i < kNx; ++i)
        x[i] = t.rows[row][static_cast<std::size_t>(t.require_col(cols::kState[i]))];
    return x;
}

ControlInput read_input_row(const csv::Table& t, std::size_t row)
{
    ControlInput u;
    for (int j = 0; j < kNu; ++j)
        u[j] = t.rows[row][static_cast<std::size_t>(t.require_col(cols::kInput[j]))];
    return u;
}

DisturbanceFrame read_disturbance_row(const csv::Table& t, std::size_t row)
{
    DisturbanceFrame d;
    d.T_amb = t.rows[row][static_cast<std::size_t>(t.require_col("T_amb_K"))];
    d.v_veh = t.rows[row][static_cast<std::size_t>(t.require_col("v_veh_mps"))];
    d.I_b = t.rows[row][static_cast<std::size_t>(t.require_col("I_b_A"))];
    d.Q_gen_mot = t.rows[row][static_cast<std::size_t>(t.require_col("Qgen_mot_W"))];
    d.Q_gen_dcdc = t.rows[row][static_cast<std::size_t>(t.require_col("Qgen_dcdc_W"))];
    d.Q_gen_inv = t.rows[row][static_cast<std::size_t>(t.require_col("Qgen_inv_W"))];
    return d;
}

ModeFlags read_modes_row(const csv::Table& t, std::size_t row)
{
    ModeFlags v;
    auto flag = [&](const char* name) {
        return t.rows[row][static_cast<std::size_t>(t.require_col(name))] > 0.5;
    };
    v.hpm = flag("delta_hpm");
    v.series = flag("delta_ps");
    v.rb = flag("delta_rb");
    v.ev = flag("delta_ev");
    v.ch = flag("delta_ch");
    v.w = flag("delta_w");
    return v;
}

std::vector<IdentWindow> extract_windows(const csv::Table& ts, double window_s, double overlap_s)
{
    const int it = ts.require_col("t_s");
    const std::size_t n = ts.num_rows();
    if (n < 2) throw ConfigError("extract_windows: timeseries too short");
    const double t0 = ts.rows.front()[static_cast<std::size_t>(it)];
    const double t_end = ts.rows.back()[static_cast<std::size_t>(it)];
    const double stride = window_s - overlap_s;
    if (stride <= 0) throw ConfigError("extract_windows: overlap must be < window");

    std::vector<IdentWindow> windows;
    for (double tb = t0; tb + window_s <= t_end + 1e-9; tb += stride) {
        IdentWindow w;
        w.t_begin = tb;
        w.t_end = tb + window_s;
        w.g_weights = default_g_weights();
        for (std::size_t r = 0; r < n; ++r) {
            const double t = ts.rows[r][static_cast<std::size_t>(it)];
            if (t < tb - 1e-9 || t > tb + window_s + 1e-9) continue;
            w.t.push_back(t);
            w.x_ref.push_back(read_state_row(ts, r));
            w.u.push_back(read_input_row(ts, r));
            w.d.push_back(read_disturbance_row(ts, r));
            w.v.push_back(read_modes_row(ts, r));
        }
        if (w.t.size() >= 2 && w.t.back() - w.t.front() >= 60.0) windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<StateVector> open_loop_rollout(const Model& com, const csv::Table& ts,
                                           const GammaMap& map)
{
    const int it = ts.require_col("t_s");
    const std::size_t n = ts.num_rows();
    std::vector<StateVector> pred(n);
    pred[0] = read_state_row(ts, 0);
    const auto& rt = com.tables().refrigerant;
    const double p_lo = rt.p_min() * 1.0001, p_hi = rt.p_max() * 0.9999;
    for (std::size_t r = 0; r + 1 < n; ++r) {
        const double dt = ts.rows[r + 1][static_cast<std::size_t>(it)] -
                          ts.rows[r][static_cast<std::size_t>(it)];
        const DisturbanceFrame d = read_disturbance_row(ts, r);
        const GammaVector g = map.query(d.T_amb, pred[r], d.I_b);
        StateVector x = rk4_step_live(com, pred[r], read_input_row(ts, r), d,
                                      read_modes_row(ts, r), g, dt, Guards::Smooth);
        // keep pressures inside the property tables; temperatures run free
        x.p_in() = std::clamp(x.p_in(), p_lo, p_hi);
        x.p_out() = std::clamp(x.p_out(), std::min(x.p_in() * 1.000001, p_hi), p_hi);
        pred[r + 1] = x;
    }
    return pred;
}

ErrorStats prediction_errors(const csv::Table& ts, const std::vector<StateVector>& predicted)
{
    ErrorStats e{};
    const std::size_t n = std::min(ts.num_rows(), predicted.size());
    for (int s = 0; s < kNx; ++s) {
        double se = 0, ae = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const double truth =
                ts.rows[r][static_cast<std::size_t>(ts.require_col(cols::kState[s]))];
            const double d = predicted[r][s] - truth;
            se += d * d;
            ae += std::abs(d);
        }
        e.rmse[s] = std::sqrt(se / static_cast<double>(n));
        e.mae[s] = ae / static_cast<double>(n);
    }
    return e;
}

} // namespace tem::ident
