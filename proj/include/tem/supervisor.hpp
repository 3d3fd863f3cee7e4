#pragma once

#include "tem/fluid.hpp"
#include "tem/model.hpp"

namespace tem {

// Rule thresholds for the discrete mode layer. The paper publishes only the
// ~35 C parallel switch; the remaining rules are reconstructions and stay
// config-exposed for calibration.
struct SupervisorConfig {
    double heat_pump_on_C = 10.0;  // heat pump below this ambient
    double parallel_on_C = 35.0;   // parallel circuits above this ambient
    double hysteresis_K = 2.0;     // full band; flips need half-band overshoot
    double whr_margin_K = 3.0;     // waste-heat recovery if coolant > Tsat(p_in) + margin

    void validate() const
    {
        if (!(parallel_on_C > heat_pump_on_C))
            throw ConfigError("supervisor: parallel threshold must exceed heat-pump threshold");
        if (!(hysteresis_K > 0.0)) throw ConfigError("supervisor: hysteresis band must be > 0");
    }
};

// Rule-based upper layer. Stateless apart from the previous flags passed by
// the caller; output is held fixed over each prediction horizon.
class Supervisor {
public:
    Supervisor(SupervisorConfig cfg, const fluid::Tables* tables)
        : cfg_(cfg), tables_(tables)
    {
        cfg_.validate();
    }

    const SupervisorConfig& config() const { return cfg_; }

    ModeFlags select_modes(double T_amb, const StateVector& x, const ModeFlags& prev) const;

private:
    // Hysteresis comparator: returns `below threshold` with the previous
    // decision retained inside the half-band.
    bool below_with_hysteresis(double value, double threshold, bool prev_below) const;

    SupervisorConfig cfg_;
    const fluid::Tables* tables_;
};

} // namespace tem
