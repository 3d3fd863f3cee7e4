#pragma once

#include "tem/dual.hpp"
#include "tem/errors.hpp"
#include "tem/fluid.hpp"
#include "tem/params.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace tem {

// State vector layout (Eq. 1 order).
enum StateIdx : int {
    kTmot = 0,
    kTinv = 1,
    kTdcdc = 2,
    kSoc = 3,
    kTb = 4,
    kPin = 5,
    kPout = 6,
    kTint = 7,
    kTcair = 8,
};
constexpr int kNx = 9;

// Control input layout.
enum InputIdx : int {
    kOmegaComp = 0,
    kMdotBl = 1,
    kOmegaMotP = 2,
    kOmegaBP = 3,
    kQht = 4,
    kOmegaFan = 5,
};
constexpr int kNu = 6;

template <class T>
struct StateT {
    std::array<T, kNx> v{};

    T& T_mot() { return v[kTmot]; }
    T& T_inv() { return v[kTinv]; }
    T& T_dcdc() { return v[kTdcdc]; }
    T& soc() { return v[kSoc]; }
    T& T_b() { return v[kTb]; }
    T& p_in() { return v[kPin]; }
    T& p_out() { return v[kPout]; }
    T& T_int() { return v[kTint]; }
    T& T_cair() { return v[kTcair]; }
    const T& T_mot() const { return v[kTmot]; }
    const T& T_inv() const { return v[kTinv]; }
    const T& T_dcdc() const { return v[kTdcdc]; }
    const T& soc() const { return v[kSoc]; }
    const T& T_b() const { return v[kTb]; }
    const T& p_in() const { return v[kPin]; }
    const T& p_out() const { return v[kPout]; }
    const T& T_int() const { return v[kTint]; }
    const T& T_cair() const { return v[kTcair]; }

    T& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    const T& operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

template <class T>
struct InputT {
    std::array<T, kNu> v{};

    T& omega_comp() { return v[kOmegaComp]; }
    T& mdot_bl() { return v[kMdotBl]; }
    T& omega_mot_p() { return v[kOmegaMotP]; }
    T& omega_b_p() { return v[kOmegaBP]; }
    T& Q_ht() { return v[kQht]; }
    T& omega_fan() { return v[kOmegaFan]; }
    const T& omega_comp() const { return v[kOmegaComp]; }
    const T& mdot_bl() const { return v[kMdotBl]; }
    const T& omega_mot_p() const { return v[kOmegaMotP]; }
    const T& omega_b_p() const { return v[kOmegaBP]; }
    const T& Q_ht() const { return v[kQht]; }
    const T& omega_fan() const { return v[kOmegaFan]; }

    T& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    const T& operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

using StateVector = StateT<double>;
using ControlInput = InputT<double>;

struct DisturbanceFrame {
    double T_amb = 273.15;  // K
    double v_veh = 0.0;     // m/s
    double I_b = 0.0;       // A
    double Q_gen_mot = 0.0; // W
    double Q_gen_dcdc = 0.0;
    double Q_gen_inv = 0.0;
};

// Discrete supervisory decisions, held fixed over a prediction horizon.
struct ModeFlags {
    bool hpm = false;    // heat-pump mode
    bool series = true;  // series (true) / parallel coolant circuits
    bool rb = false;     // refrigerant bypass to the waste-heat exchanger
    bool ev = false;     // cabin evaporator active
    bool ch = false;     // chiller active
    bool w = false;      // inner condenser active (tracks hpm)

    bool consistent() const
    {
        if (hpm && (ev || ch)) return false;
        return w == hpm;
    }
};

enum class Guards {
    Hard,   // plain simulation semantics: hard clamps, ZeroFlow errors
    Smooth, // optimization semantics: smooth floors, no errors
};

template <class T>
struct PowerBreakdownT {
    T comp, blower, pump_mot, pump_b, heater, fan;
    T total() const { return comp + blower + pump_mot + pump_b + heater + fan; }
};

// Per-evaluation heat-flow diagnostics (filled for double evaluations only).
struct RhsDiagnostics {
    double Q_cool_mot = 0, Q_cool_inv = 0, Q_cool_dcdc = 0, Q_cool_b = 0;
    double Q_hx = 0, Q_ch = 0, Q_rad = 0, Q_ce = 0, Q_ic = 0, Q_ev = 0;
    double Q_ab = 0, Q_rj = 0;
    double mdot_ref = 0, mdot_mot_clnt = 0, mdot_b_clnt = 0, mdot_ce_air = 0;
    double T_vent = 0, T_loop_mot_in = 0, T_loop_b_in = 0;
    double Gamma_ab = 0, Gamma_rj = 0;
};

template <class T>
struct HxResult {
    T Q;        // hot -> cold heat flow (W)
    T hot_out;  // hot stream outlet temperature
    T cold_out; // cold stream outlet temperature
    T eps;      // effectiveness
    bool zero_flow = false;
};

namespace detail {

// Fraction of the heat-transfer area acting as flow cross-section; closes
// the velocity needed by the Reynolds number from the mass flow rate.
constexpr double kFlowAreaCoolant = 1.0e-4;
constexpr double kFlowAreaAir = 5.0e-3;
constexpr double kMinCapacityRate = 1.0e-3; // W/K floor on m_dot*cp
constexpr double kMaxPlateCoeff = 0.995;    // cap on per-element approach factor

template <class T>
T smooth_floor(const T& x, double lo, double width)
{
    return lo + width * softplus((x - lo) * (1.0 / width));
}

template <class T>
T floor_guarded(const T& x, double lo, double width, Guards g)
{
    if (g == Guards::Smooth) return smooth_floor(x, lo, width);
    return value(x) > lo ? x : T(lo);
}

// Smooth interpolation of min(a, b); width in the units of a and b.
template <class T>
T smooth_min(const T& a, const T& b, double width, Guards g)
{
    if (g == Guards::Hard) return value(a) < value(b) ? a : b;
    const T d = a - b;
    return 0.5 * (a + b - sqrt(d * d + width * width));
}

} // namespace detail

// Control-oriented model: x_dot = f(x, u, d, v, gamma, theta). Pure over an
// immutable ParameterSet and property tables; safe for concurrent use.
class Model {
public:
    Model(ParameterSet params, const fluid::Tables* tables)
        : p_(std::move(params)), tables_(tables)
    {
    }

    const ParameterSet& params() const { return p_; }
    const fluid::Tables& tables() const { return *tables_; }

    // Evaluate theta at the state's operating point (live-property mode).
    template <class T>
    fluid::FluidStateT<T> eval_theta(const StateT<T>& x) const
    {
        return tables_->refrigerant.eval_fluid_state(x.p_in(), x.p_out(), p_.superheat_K,
                                                     p_.subcool_K);
    }

    // ---- Battery ----

    // Eq. 4/5: I^2 R with the double-quadratic resistance polynomial.
    template <class T>
    T battery_resistance(const T& T_b, const T& soc, Guards g = Guards::Hard) const
    {
        T r(0.0);
        T ti(1.0);
        for (int i = 0; i <= 2; ++i) {
            T sj(1.0);
            for (int j = 0; j <= 2; ++j) {
                r += p_.psi_ij(i, j) * ti * sj;
                sj *= soc;
            }
            ti *= T_b;
        }
        return detail::floor_guarded(r, 0.0, 1e-4, g);
    }

    template <class T>
    T battery_heat(double I_b, const T& T_b, const T& soc, Guards g = Guards::Hard) const
    {
        return (I_b * I_b) * battery_resistance(T_b, soc, g);
    }

    double soc_dot(double I_b) const { return -I_b / p_.C_nom; }

    // ---- Pumps (Eqs. 7-9) ----

    enum class Circuit { MotorLoop, BatteryLoop };

    template <class T>
    struct PumpResult {
        T mdot;   // kg/s
        T P_elec; // W
    };

    template <class T>
    PumpResult<T> pump_flow_power(const T& omega_rpm, Circuit c, const T& rho_clnt) const
    {
        const double disp = (c == Circuit::MotorLoop) ? p_.V_disp_mot : p_.V_disp_b;
        const double k = (c == Circuit::MotorLoop) ? p_.k_circuit_mot : p_.k_circuit_b;
        PumpResult<T> r;
        r.mdot = rho_clnt * p_.alpha_p * p_.eta_vol * disp * (omega_rpm / 60.0);
        const T dp = k * r.mdot * r.mdot;
        r.P_elec = r.mdot * dp / (rho_clnt * p_.eta_p);
        return r;
    }

    // ---- NTU-effectiveness framework (Eqs. 10-16) ----

    template <class T>
    struct FilmCoeff {
        T Re, Pr, Nu, h;
    };

    // Dittus-Boelter film coefficient for one stream through area A with
    // hydraulic diameter D. Stream velocity comes from the flow-area closure.
    template <class T, class P>
    FilmCoeff<T> film(const T& mdot, double A, double D, const P& props, bool is_air,
                      Guards g) const
    {
        const double a_flow = (is_air ? detail::kFlowAreaAir : detail::kFlowAreaCoolant) * A;
        FilmCoeff<T> f;
        const T m = detail::floor_guarded(mdot, 1e-7, 1e-7, g);
        f.Re = m * (D / (a_flow)) / props.mu;
        f.Pr = props.cp * props.mu / props.k;
        f.Nu = 0.023 * pow(f.Re, 0.8) * cbrt(f.Pr);
        f.h = f.Nu * props.k / D;
        return f;
    }

    static double nu_dittus_boelter(double Re, double Pr)
    {
        return 0.023 * std::pow(Re, 0.8) * std::cbrt(Pr);
    }

    template <class T>
    static T ua_two_sided(const T& h_hot, const T& h_cold, double A)
    {
        return 1.0 / (1.0 / (h_hot * A) + 1.0 / (h_cold * A));
    }

    template <class T>
    static T effectiveness(const T& ntu)
    {
        return 1.0 - exp(-ntu);
    }

    // Generic two-stream exchanger (Eq. 13 single-stream exponential form
    // with C_min the smaller capacity rate).
    template <class T, class PH, class PC>
    HxResult<T> hx_transfer(const T& hot_in, const T& cold_in, const T& mdot_hot,
                            const T& mdot_cold, const PH& hot_props, const PC& cold_props,
                            double A, double D_hot, double D_cold, bool hot_is_air,
                            bool cold_is_air, Guards g = Guards::Hard) const
    {
        HxResult<T> r;
        if (value(mdot_hot) <= 1e-9 || value(mdot_cold) <= 1e-9) {
            if (g == Guards::Hard) {
                r.Q = T(0.0);
                r.hot_out = hot_in;
                r.cold_out = cold_in;
                r.eps = T(0.0);
                r.zero_flow = true;
                return r;
            }
        }
        const auto fh = film(mdot_hot, A, D_hot, hot_props, hot_is_air, g);
        const auto fc = film(mdot_cold, A, D_cold, cold_props, cold_is_air, g);
        const T ua = ua_two_sided(fh.h, fc.h, A);
        const T C_hot = detail::floor_guarded(mdot_hot * hot_props.cp, detail::kMinCapacityRate,
                                              detail::kMinCapacityRate, g);
        const T C_cold = detail::floor_guarded(mdot_cold * cold_props.cp, detail::kMinCapacityRate,
                                               detail::kMinCapacityRate, g);
        const T C_min = detail::smooth_min(C_hot, C_cold, 1.0e-2, g);
        r.eps = effectiveness(ua / C_min);
        r.Q = r.eps * C_min * (hot_in - cold_in);
        r.hot_out = hot_in - r.Q / C_hot;
        r.cold_out = cold_in + r.Q / C_cold;
        return r;
    }

    // Eq. 17: auxiliary heater outlet temperature.
    template <class T>
    T heater_outlet(const T& T_in, const T& Q_ht, const T& mdot, const T& cp,
                    Guards g = Guards::Hard) const
    {
        if (g == Guards::Hard && value(mdot) <= 1e-9) {
            if (value(Q_ht) == 0.0) return T_in;
            throw ZeroFlowError("heater_outlet: zero coolant flow with heater active");
        }
        const T C = detail::floor_guarded(mdot * cp, detail::kMinCapacityRate,
                                          detail::kMinCapacityRate, g);
        return T_in + p_.eta_ht * Q_ht / (p_.alpha_ht * C);
    }

    // Eq. 18 and the ram/fan airflow closure.
    template <class T>
    struct FanResult {
        T P_fan;
        T mdot_ce_air;
    };

    template <class T>
    FanResult<T> fan_power_airflow(const T& omega_fan, double v_veh) const
    {
        FanResult<T> r;
        const T ratio = omega_fan / p_.omega_fan_ref;
        r.P_fan = (p_.P_fan_nom / p_.eta_fan) * ratio * ratio * ratio;
        r.mdot_ce_air = p_.alpha_ram * v_veh + p_.alpha_fan * omega_fan;
        return r;
    }

    enum class Component { Motor = 0, Inverter = 1, DcDc = 2, Battery = 3 };

    // Approach factor of a component cold plate: the fraction of (T_i -
    // T_clnt_in) removed per pass, from the convective NTU term plus the
    // conduction term of Eq. 20, saturated below 1 so loop chaining stays
    // contractive.
    template <class T, class P>
    T plate_coeff(Component c, const T& mdot, const T& C_eff, const P& props, Guards g) const
    {
        double A, D, kappa;
        switch (c) {
        case Component::Motor: A = p_.A_hx_mot; D = p_.D_ch_mot; kappa = p_.kappa_cond_mot; break;
        case Component::Inverter: A = p_.A_hx_inv; D = p_.D_ch_inv; kappa = p_.kappa_cond_inv; break;
        case Component::DcDc: A = p_.A_hx_dcdc; D = p_.D_ch_dcdc; kappa = p_.kappa_cond_dcdc; break;
        default: A = p_.A_hx_b; D = p_.D_ch_b; kappa = p_.kappa_cond_b; break;
        }
        const auto f = film(mdot, A, D, props, false, g);
        const T ntu = f.h * A / C_eff;
        const T eps = effectiveness(ntu);
        const T a_raw = eps + kappa * (A / D) / C_eff;
        constexpr double amax = detail::kMaxPlateCoeff;
        return amax * (1.0 - exp(-a_raw * (1.0 / amax)));
    }

    // Eqs. 19-20 for one component given its coolant inlet temperature.
    template <class T>
    T component_temp_dot(Component c, const T& T_i, const T& clnt_in, const T& mdot_clnt,
                         double Q_gen, double gamma_i, Guards g = Guards::Hard) const
    {
        const fluid::StreamPropsT<T> pr = tables_->secondary.coolant_t(T_i);
        const T C_eff = detail::floor_guarded(mdot_clnt * pr.cp, detail::kMinCapacityRate,
                                              detail::kMinCapacityRate, g);
        const T a = plate_coeff(c, mdot_clnt, C_eff, pr, g);
        const T Q_cool = a * C_eff * (T_i - clnt_in);
        double mcp;
        switch (c) {
        case Component::Motor: mcp = p_.m_mot * p_.cp_mot; break;
        case Component::Inverter: mcp = p_.m_inv * p_.cp_inv; break;
        case Component::DcDc: mcp = p_.m_dcdc * p_.cp_dcdc; break;
        default: mcp = p_.m_b * p_.cp_b; break;
        }
        return gamma_i * (Q_gen - Q_cool) / mcp;
    }

    // ---- Compressor (Eqs. 21-24, 28) ----

    template <class T>
    struct CompressorResult {
        T mdot_ref; // kg/s
        T h2;       // J/kg
        T P_comp;   // W
        T T_out;    // K
        T eta_v;
    };

    template <class T>
    CompressorResult<T> compressor(const T& omega_rpm, const fluid::FluidStateT<T>& th,
                                   Guards g = Guards::Hard) const
    {
        CompressorResult<T> r;
        T eta_v = p_.alpha_v * (th.p_out / th.p_in) + p_.beta_v;
        if (g == Guards::Smooth) {
            eta_v = detail::smooth_floor(eta_v, 0.05, 1e-3);
            eta_v = -detail::smooth_floor(-eta_v, -1.0, 1e-3);
        } else {
            if (value(eta_v) < 0.05) eta_v = T(0.05);
            if (value(eta_v) > 1.0) eta_v = T(1.0);
        }
        r.eta_v = eta_v;
        r.mdot_ref = eta_v * omega_rpm * p_.V_disp_comp * p_.alpha_mf / (60.0 * th.v_in);
        r.h2 = th.h1 + (th.h2s - th.h1) / p_.eta_isen;
        r.P_comp = r.mdot_ref * (r.h2 - th.h1) / (p_.eta_mech * p_.eta_elec);
        r.T_out = th.hp.T_sat + p_.alpha_sh * (th.h2s - th.h1) / th.cp_ref_vh;
        return r;
    }

    // ---- Cabin (Eqs. 29-32) ----

    double envelope_resistance_total() const
    {
        const double Rg =
            p_.beta_glass * (1.0 / (p_.U_glass * p_.A_glass) +
                             p_.delta_glass / (p_.lambda_glass * p_.A_glass));
        const double Rd =
            p_.beta_doors * (1.0 / (p_.U_doors * p_.A_doors) +
                             p_.delta_doors / (p_.lambda_doors * p_.A_doors));
        const double Rr = p_.beta_roof * (1.0 / (p_.U_roof * p_.A_roof) +
                                          p_.delta_roof / (p_.lambda_roof * p_.A_roof));
        return 1.0 / (1.0 / Rg + 1.0 / Rd + 1.0 / Rr);
    }

    // ---- Full right-hand side ----

    // G is any gamma container indexable by int (GammaVector for plain
    // evaluation, a dual-valued array for parameter sensitivities).
    template <class T, class G>
    StateT<T> rhs(const StateT<T>& x, const InputT<T>& u, const DisturbanceFrame& d,
                  const ModeFlags& v, const G& gam, const fluid::FluidStateT<T>& th,
                  Guards g = Guards::Hard, RhsDiagnostics* diag = nullptr) const;

    // Eq. 33 actuator power with per-device breakdown.
    template <class T>
    PowerBreakdownT<T> actuator_powers(const StateT<T>& x, const InputT<T>& u,
                                       const fluid::FluidStateT<T>& th,
                                       Guards g = Guards::Hard) const
    {
        PowerBreakdownT<T> pb;
        const fluid::StreamPropsT<T> pr_m = tables_->secondary.coolant_t(x.T_mot());
        const fluid::StreamPropsT<T> pr_b = tables_->secondary.coolant_t(x.T_b());
        pb.pump_mot = pump_flow_power(u.omega_mot_p(), Circuit::MotorLoop, pr_m.rho).P_elec;
        pb.pump_b = pump_flow_power(u.omega_b_p(), Circuit::BatteryLoop, pr_b.rho).P_elec;
        pb.comp = compressor(u.omega_comp(), th, g).P_comp;
        const T blr = u.mdot_bl() / p_.mdot_bl_ref;
        pb.blower = p_.P_bl_nom * blr * blr * blr;
        pb.heater = u.Q_ht();
        pb.fan = fan_power_airflow(u.omega_fan(), 0.0).P_fan;
        return pb;
    }

    template <class T>
    T total_power(const StateT<T>& x, const InputT<T>& u, const fluid::FluidStateT<T>& th,
                  Guards g = Guards::Hard) const
    {
        return actuator_powers(x, u, th, g).total();
    }

    // Capacitance coefficients of the mean-void-fraction pressure model
    // (Eqs. 26a/26b).
    template <class T>
    T gamma_capacitance_ab(const fluid::FluidStateT<T>& th) const
    {
        return p_.V_ab * ((1.0 - p_.phi_ab) * th.lp.d_rholhl_dp + p_.phi_ab * th.lp.d_rhoghg_dp -
                          1.0 + (p_.M_wab * p_.C_ab / p_.V_ab) * th.lp.dTsat_dp);
    }

    template <class T>
    T gamma_capacitance_rj(const fluid::FluidStateT<T>& th) const
    {
        return p_.V_rj * ((1.0 - p_.phi_rj) * th.hp.d_rholhl_dp + p_.phi_rj * th.hp.d_rhoghg_dp -
                          1.0 + (p_.M_wrj * p_.C_rj / p_.V_rj) * th.hp.dTsat_dp);
    }

    // Synthetic component-loss maps feeding the disturbance vector.
    double q_gen_mot(double v_veh) const { return p_.qgen_mot_a + p_.qgen_mot_b * v_veh * v_veh; }
    double q_gen_inv(double v_veh) const { return p_.qgen_inv_a + p_.qgen_inv_b * v_veh * v_veh; }
    double q_gen_dcdc(double v_veh) const
    {
        return p_.qgen_dcdc_a + p_.qgen_dcdc_b * v_veh * v_veh;
    }

private:
    // Affine representation T = a*T0 + b of a loop temperature in terms of
    // the unknown loop-inlet temperature T0; loop closure solves T0 = b/(1-a).
    template <class T>
    struct Affine {
        T a, b;
        T at(const T& T0) const { return a * T0 + b; }
    };

    ParameterSet p_;
    const fluid::Tables* tables_;
};

void validate_state(const StateVector& x); // throws on invariant violation

// ---- rhs implementation ----

template <class T, class G>
StateT<T> Model::rhs(const StateT<T>& x, const InputT<T>& u, const DisturbanceFrame& d,
                     const ModeFlags& v, const G& gam, const fluid::FluidStateT<T>& th,
                     Guards g, RhsDiagnostics* diag) const
{
    using detail::floor_guarded;
    using detail::kMinCapacityRate;

    const double f_hpm = v.hpm ? 1.0 : 0.0;
    const double f_rb = v.rb ? 1.0 : 0.0;
    const double f_ev = v.ev ? 1.0 : 0.0;
    const double f_ch = v.ch ? 1.0 : 0.0;
    const double f_w = v.w ? 1.0 : 0.0;

    // Stream properties. Coolant transport properties follow the adjacent
    // thermal-mass temperatures; air follows ambient / cabin air.
    const fluid::StreamPropsT<T> pr_cl_m = tables_->secondary.coolant_t(x.T_mot());
    const fluid::StreamPropsT<T> pr_cl_b = tables_->secondary.coolant_t(x.T_b());
    const fluid::StreamProps pr_air_amb = tables_->secondary.air(d.T_amb);
    const fluid::StreamPropsT<T> pr_air_cab = tables_->secondary.air_t(x.T_cair());

    // Coolant flows (Eq. 7) and front-end airflow (Eq. 18 closure).
    const auto pump1 = pump_flow_power(u.omega_mot_p(), Circuit::MotorLoop, pr_cl_m.rho);
    const auto pump2 = pump_flow_power(u.omega_b_p(), Circuit::BatteryLoop, pr_cl_b.rho);
    const T mdot1 = pump1.mdot;
    const T mdot2 = pump2.mdot;
    const T C1 = floor_guarded(mdot1 * pr_cl_m.cp, kMinCapacityRate, kMinCapacityRate, g);
    const T C2 = floor_guarded(mdot2 * pr_cl_b.cp, kMinCapacityRate, kMinCapacityRate, g);
    const auto fan = fan_power_airflow(u.omega_fan(), d.v_veh);
    const T mdot_ce = fan.mdot_ce_air;
    const T C_ce = floor_guarded(mdot_ce * pr_air_amb.cp, kMinCapacityRate, kMinCapacityRate, g);
    const T C_bl =
        floor_guarded(u.mdot_bl() * pr_air_cab.cp, kMinCapacityRate, kMinCapacityRate, g);

    // Cabin air path: recirculation mix, inner condenser (Eq. 32), evaporator.
    const T T_mix = (1.0 - p_.r_rec) * d.T_amb + p_.r_rec * x.T_cair();
    const auto film_ic = film(u.mdot_bl(), p_.A_ic, p_.D_ic_air, pr_air_cab, true, g);
    const T ua_ic = ua_two_sided(film_ic.h, T(p_.h_ref_ic), p_.A_ic);
    const T eps_ic = effectiveness(ua_ic / C_bl);
    const T Q_ic = f_w * eps_ic * C_bl * (th.hp.T_sat - T_mix);
    const T T_after_ic = T_mix + Q_ic / C_bl;
    const auto film_ev = film(u.mdot_bl(), p_.A_ev, p_.D_ev_air, pr_air_cab, true, g);
    const T ua_ev = ua_two_sided(film_ev.h, T(p_.h_ref_ev), p_.A_ev);
    const T eps_ev = effectiveness(ua_ev / C_bl);
    const T Q_ev = f_ev * eps_ev * C_bl * (T_after_ic - th.lp.T_sat);
    const T T_vent = T_after_ic - Q_ev / C_bl;

    // Front condenser/evaporator against ambient air.
    const auto film_ce = film(mdot_ce, p_.A_ce, p_.D_ce_air, pr_air_amb, true, g);
    const T ua_ce = ua_two_sided(film_ce.h, T(p_.h_ref_ce), p_.A_ce);
    const T eps_ce = effectiveness(ua_ce / C_ce);
    const T Q_ce_abs = eps_ce * C_ce * (d.T_amb - th.lp.T_sat);
    const T Q_ce_rej = eps_ce * C_ce * (th.hp.T_sat - d.T_amb);

    // Battery-loop refrigerant couplings.
    const auto film_whr = film(mdot2, p_.A_whr, p_.D_whr_clnt, pr_cl_b, false, g);
    const T eps_whr = effectiveness(ua_two_sided(film_whr.h, T(p_.h_ref_whr), p_.A_whr) / C2);
    const auto film_chl = film(mdot2, p_.A_chiller, p_.D_ch_clnt, pr_cl_b, false, g);
    const T eps_chl =
        effectiveness(ua_two_sided(film_chl.h, T(p_.h_ref_chiller), p_.A_chiller) / C2);

    // Radiator: two-stream; coolant side flow depends on the circuit mode.
    const T C_rad_loop = v.series ? C2 : C1;
    const T mdot_rad = v.series ? mdot2 : mdot1;
    const auto film_rad_c = film(mdot_rad, p_.A_rad, p_.D_rad_clnt, pr_cl_b, false, g);
    const auto film_rad_a = film(mdot_ce, p_.A_rad, p_.D_rad_air, pr_air_amb, true, g);
    const T ua_rad = ua_two_sided(film_rad_c.h, film_rad_a.h, p_.A_rad);
    const T C_min_rad = detail::smooth_min(C_rad_loop, C_ce, 1.0e-2, g);
    const T eps_rad = effectiveness(ua_rad / C_min_rad);
    const double f_rad = 1.0 - f_hpm; // radiator bypassed in heat-pump mode
    const T frac_rad = f_rad * eps_rad * C_min_rad / C_rad_loop;

    // Cold-plate approach factors.
    const T a_mot = plate_coeff(Component::Motor, mdot1, C1, pr_cl_m, g);
    const T a_inv = plate_coeff(Component::Inverter, mdot1, C1, pr_cl_m, g);
    const T a_dcdc = plate_coeff(Component::DcDc, mdot1, C1, pr_cl_m, g);
    const T a_b = plate_coeff(Component::Battery, mdot2, C2, pr_cl_b, g);

    // Loop closure: propagate T = a*T0 + b through the circuit, then solve
    // the fixed point T0 = b/(1-a).
    auto through_plate = [](Affine<T> A_, const T& a_c, const T& T_c) {
        return Affine<T>{(1.0 - a_c) * A_.a, (1.0 - a_c) * A_.b + a_c * T_c};
    };
    auto through_sink = [](Affine<T> A_, const T& frac, const T& T_sink) {
        // T' = T - frac*(T - T_sink)
        return Affine<T>{(1.0 - frac) * A_.a, (1.0 - frac) * A_.b + frac * T_sink};
    };

    const T heater_dT = p_.eta_ht * u.Q_ht() / (p_.alpha_ht * C2);
    const T Tsat_lp = th.lp.T_sat;

    T T_in_mot, T_in_inv, T_in_dcdc, T_in_ht, T_in_b, T_in_whr, T_in_chl, T_in_rad;
    if (v.series) {
        Affine<T> A_{T(1.0), T(0.0)};
        A_ = through_plate(A_, a_mot, x.T_mot());
        A_ = through_plate(A_, a_inv, x.T_inv());
        A_ = through_plate(A_, a_dcdc, x.T_dcdc());
        A_.b += heater_dT;
        A_ = through_plate(A_, a_b, x.T_b());
        A_ = through_sink(A_, f_rb * eps_whr, Tsat_lp);
        A_ = through_sink(A_, f_ch * eps_chl, Tsat_lp);
        A_ = through_sink(A_, frac_rad, T(d.T_amb));
        const T T0 = A_.b / (1.0 - A_.a);
        T_in_mot = T0;
        T_in_inv = T_in_mot + a_mot * (x.T_mot() - T_in_mot);
        T_in_dcdc = T_in_inv + a_inv * (x.T_inv() - T_in_inv);
        T_in_ht = T_in_dcdc + a_dcdc * (x.T_dcdc() - T_in_dcdc);
        T_in_b = T_in_ht + heater_dT;
        T_in_whr = T_in_b + a_b * (x.T_b() - T_in_b);
        T_in_chl = T_in_whr - f_rb * eps_whr * (T_in_whr - Tsat_lp);
        T_in_rad = T_in_chl - f_ch * eps_chl * (T_in_chl - Tsat_lp);
    } else {
        Affine<T> Am{T(1.0), T(0.0)};
        Am = through_plate(Am, a_mot, x.T_mot());
        Am = through_plate(Am, a_inv, x.T_inv());
        Am = through_plate(Am, a_dcdc, x.T_dcdc());
        Am = through_sink(Am, frac_rad, T(d.T_amb));
        const T T0m = Am.b / (1.0 - Am.a);
        T_in_mot = T0m;
        T_in_inv = T_in_mot + a_mot * (x.T_mot() - T_in_mot);
        T_in_dcdc = T_in_inv + a_inv * (x.T_inv() - T_in_inv);
        Affine<T> Ab{T(1.0), T(0.0)};
        Ab.b += heater_dT;
        Ab = through_plate(Ab, a_b, x.T_b());
        Ab = through_sink(Ab, f_rb * eps_whr, Tsat_lp);
        Ab = through_sink(Ab, f_ch * eps_chl, Tsat_lp);
        const T T0b = Ab.b / (1.0 - Ab.a);
        T_in_ht = T0b;
        T_in_b = T_in_ht + heater_dT;
        T_in_whr = T_in_b + a_b * (x.T_b() - T_in_b);
        T_in_chl = T_in_whr - f_rb * eps_whr * (T_in_whr - Tsat_lp);
        T_in_rad = T_in_dcdc + a_dcdc * (x.T_dcdc() - T_in_dcdc);
    }

    const T Q_cool_mot = a_mot * C1 * (x.T_mot() - T_in_mot);
    const T Q_cool_inv = a_inv * C1 * (x.T_inv() - T_in_inv);
    const T Q_cool_dcdc = a_dcdc * C1 * (x.T_dcdc() - T_in_dcdc);
    const T Q_cool_b = a_b * C2 * (x.T_b() - T_in_b);
    const T Q_hx = f_rb * eps_whr * C2 * (T_in_whr - Tsat_lp);
    const T Q_ch = f_ch * eps_chl * C2 * (T_in_chl - Tsat_lp);
    const T Q_rad = frac_rad * C_rad_loop * (T_in_rad - d.T_amb);

    // Compressor and refrigerant pressure dynamics (Eqs. 21-27).
    const auto comp = compressor(u.omega_comp(), th, g);
    const T Q_ab = f_hpm * Q_ce_abs + Q_hx + Q_ev + Q_ch;
    const T Q_rj = Q_ic + (1.0 - f_hpm) * Q_ce_rej;
    const T Gab = gamma_capacitance_ab(th);
    const T Grj = gamma_capacitance_rj(th);
    if (g == Guards::Hard) {
        if (std::abs(value(Gab)) < 1e-4 * p_.V_ab || std::abs(value(Grj)) < 1e-4 * p_.V_rj)
            throw DegenerateCapacitanceError("pressure_dot: capacitance near zero");
    }
    const T dp_in = gam[5] * (Q_ab + comp.mdot_ref * (th.h4 - th.h1)) / Gab;
    const T dp_out = gam[6] * (-Q_rj + gam[7] * comp.mdot_ref * (comp.h2 - th.h3)) / Grj;

    // Component temperature dynamics (Eq. 19).
    const T Qgen_b = gam[4] * battery_heat(d.I_b, x.T_b(), x.soc(), g);
    const T dT_mot = gam[0] * (d.Q_gen_mot - Q_cool_mot) / (p_.m_mot * p_.cp_mot);
    const T dT_inv = gam[1] * (d.Q_gen_inv - Q_cool_inv) / (p_.m_inv * p_.cp_inv);
    const T dT_dcdc = gam[2] * (d.Q_gen_dcdc - Q_cool_dcdc) / (p_.m_dcdc * p_.cp_dcdc);
    const T dT_b = gam[3] * (Qgen_b - Q_cool_b) / (p_.m_b * p_.cp_b);

    // Cabin two-node dynamics (Eqs. 29-31).
    const double R_tot = envelope_resistance_total();
    const T dT_int = gam[8] *
                     ((d.T_amb - x.T_int()) / R_tot +
                      p_.alpha_int * (x.T_cair() - x.T_int()) / R_tot) /
                     (p_.M_int * p_.cp_int);
    const T dT_cair = gam[9] *
                      (C_bl * (T_vent - x.T_cair()) + p_.Q_human +
                       (x.T_int() - x.T_cair()) / (p_.alpha_R_int * R_tot)) /
                      p_.C_air;

    StateT<T> dx;
    dx[kTmot] = dT_mot;
    dx[kTinv] = dT_inv;
    dx[kTdcdc] = dT_dcdc;
    dx[kSoc] = T(soc_dot(d.I_b));
    dx[kTb] = dT_b;
    dx[kPin] = dp_in;
    dx[kPout] = dp_out;
    dx[kTint] = dT_int;
    dx[kTcair] = dT_cair;

    if constexpr (std::is_same_v<T, double>) {
        if (diag != nullptr) {
            diag->Q_cool_mot = Q_cool_mot;
            diag->Q_cool_inv = Q_cool_inv;
            diag->Q_cool_dcdc = Q_cool_dcdc;
            diag->Q_cool_b = Q_cool_b;
            diag->Q_hx = Q_hx;
            diag->Q_ch = Q_ch;
            diag->Q_rad = Q_rad;
            diag->Q_ce = v.hpm ? Q_ce_abs : Q_ce_rej;
            diag->Q_ic = Q_ic;
            diag->Q_ev = Q_ev;
            diag->Q_ab = Q_ab;
            diag->Q_rj = Q_rj;
            diag->mdot_ref = comp.mdot_ref;
            diag->mdot_mot_clnt = mdot1;
            diag->mdot_b_clnt = mdot2;
            diag->mdot_ce_air = mdot_ce;
            diag->T_vent = T_vent;
            diag->T_loop_mot_in = T_in_mot;
            diag->T_loop_b_in = T_in_b;
            diag->Gamma_ab = Gab;
            diag->Gamma_rj = Grj;
        }
    }
    return dx;
}

} // namespace tem
