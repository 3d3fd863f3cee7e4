#include "tem/supervisor.hpp"

namespace tem {

bool Supervisor::below_with_hysteresis(double value, double threshold, bool prev_below) const
{
    const double half = 0.5 * cfg_.hysteresis_K;
    if (prev_below) return value < threshold + half;
    return value < threshold - half;
}

ModeFlags Supervisor::select_modes(double T_amb, const StateVector& x,
                                   const ModeFlags& prev) const
{
    const double T_amb_C = T_amb - 273.15;
    ModeFlags m;
    m.hpm = below_with_hysteresis(T_amb_C, cfg_.heat_pump_on_C, prev.hpm);
    const bool hot = !below_with_hysteresis(T_amb_C, cfg_.parallel_on_C, !prev.series);
    m.series = !hot;
    m.ch = hot;
    m.ev = hot;

    if (m.hpm) {
        // Heat-pump routing: no evaporator/chiller, inner condenser active.
        m.ev = false;
        m.ch = false;
        // Waste-heat recovery when the powertrain loop is usefully warmer
        // than the low-side saturation temperature. Motor temperature proxies
        // the loop; the refrigerant-side temperature comes from the tables.
        const double T_sat_lp = tables_->refrigerant.T_sat().value(x.p_in());
        const double margin = cfg_.whr_margin_K;
        const double half = 0.5 * cfg_.hysteresis_K;
        const double trigger = x.T_mot() - (T_sat_lp + margin);
        m.rb = prev.rb ? (trigger > -half) : (trigger > half);
    } else {
        m.rb = false;
    }
    m.w = m.hpm;
    return m;
}

} // namespace tem
