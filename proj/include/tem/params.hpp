#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tem {

// Identified scaling parameters. Slots 0..3 scale the motor, inverter,
// DC-DC, and battery temperature dynamics, slot 4 the battery heat
// generation, 5..7 the refrigerant pressure dynamics, 8..9 the cabin nodes.
struct GammaVector {
    std::array<double, 10> g{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

    static constexpr double kLower = 0.1;
    static constexpr double kUpper = 10.0;

    double operator[](int i) const { return g[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return g[static_cast<std::size_t>(i)]; }
    bool within_bounds() const
    {
        for (double v : g)
            if (v < kLower || v > kUpper) return false;
        return true;
    }
};

// Constant plant parameters (the overbar quantities). SI units throughout;
// actuator speeds are rpm and converted internally.
struct ParameterSet {
    // Component thermal masses and cold plates
    double m_mot = 60.0, cp_mot = 900.0;
    double m_inv = 12.0, cp_inv = 800.0;
    double m_dcdc = 8.0, cp_dcdc = 800.0;
    double m_b = 300.0, cp_b = 1000.0;
    double A_hx_mot = 0.50, D_ch_mot = 0.012, kappa_cond_mot = 0.6;
    double A_hx_inv = 0.25, D_ch_inv = 0.010, kappa_cond_inv = 0.5;
    double A_hx_dcdc = 0.15, D_ch_dcdc = 0.010, kappa_cond_dcdc = 0.5;
    double A_hx_b = 0.80, D_ch_b = 0.012, kappa_cond_b = 0.6;

    // Coolant pumps (fixed displacement)
    double alpha_p = 1.0;
    double eta_vol = 0.95;
    double V_disp_mot = 1.05e-5; // m^3/rev
    double V_disp_b = 1.05e-5;
    double k_circuit_mot = 2.0e5; // Pa/(kg/s)^2
    double k_circuit_b = 2.0e5;
    double eta_p = 0.70;

    // Radiator
    double A_rad = 1.6, D_rad_clnt = 0.008, D_rad_air = 0.004;

    // Refrigerant-coupled exchangers (refrigerant side condensing/evaporating
    // at T_sat with an effective film coefficient)
    double A_whr = 0.60, D_whr_clnt = 0.008, h_ref_whr = 2500.0;
    double A_chiller = 0.50, D_ch_clnt = 0.008, h_ref_chiller = 2500.0;
    double A_ic = 1.10, D_ic_air = 0.004, h_ref_ic = 2200.0;
    double A_ce = 1.60, D_ce_air = 0.004, h_ref_ce = 2200.0;
    double A_ev = 0.90, D_ev_air = 0.004, h_ref_ev = 2200.0;

    // Auxiliary heater and radiator fan
    double eta_ht = 0.95;
    double alpha_ht = 1.0;
    double P_fan_nom = 350.0;      // W
    double omega_fan_ref = 2500.0; // rpm
    double eta_fan = 0.85;
    double alpha_ram = 0.045;  // kg/s per m/s
    double alpha_fan = 2.2e-5; // kg/s per rpm

    // Cabin blower (power law mirroring the fan affinity law)
    double P_bl_nom = 300.0;
    double mdot_bl_ref = 0.15; // kg/s

    // Compressor
    double alpha_v = -0.03;
    double beta_v = 0.98;
    double V_disp_comp = 3.3e-5; // m^3/rev
    double alpha_mf = 1.0;
    double eta_isen = 0.75;
    double eta_mech = 0.92;
    double eta_elec = 0.90;
    double alpha_sh = 1.0;

    // Refrigerant volumes, mean void fractions, wall masses/capacities
    double V_ab = 4.0e-3, V_rj = 3.0e-3;   // m^3
    double phi_ab = 0.75, phi_rj = 0.55;
    double M_wab = 10.0, M_wrj = 8.0;      // kg
    double C_ab = 900.0, C_rj = 900.0;     // J/(kg K)

    // Cabin envelope elements: glass, doors, roof
    double U_glass = 6.0, A_glass = 4.0, delta_glass = 0.005, lambda_glass = 1.0, beta_glass = 1.0;
    double U_doors = 3.0, A_doors = 6.0, delta_doors = 0.020, lambda_doors = 0.05, beta_doors = 1.0;
    double U_roof = 4.0, A_roof = 5.0, delta_roof = 0.015, lambda_roof = 0.04, beta_roof = 1.0;
    double M_int = 80.0, cp_int = 800.0;
    double alpha_int = 2.0;
    double alpha_R_int = 2.0;
    double C_air = 3000.0;  // J/K
    double Q_human = 80.0;  // W
    double r_rec = 0.5;

    // Battery electrical model: R_b = sum psi_ij T^i SOC^j, C_nom in Coulombs
    double C_nom = 5.4e5; // 150 Ah
    std::array<double, 9> psi{0.18, -0.012, 0.010,   // T^0 * {1, SOC, SOC^2}
                              -4.0e-4, 0.0, 0.0,     // T^1 * {...}
                              2.2e-7, 0.0, 0.0};     // T^2 * {...}

    // Synthetic heat-generation maps Q = a + b v^2 (W, v in m/s); these feed
    // the disturbance vector and are never perturbed in the plant twin.
    double qgen_mot_a = 150.0, qgen_mot_b = 1.665;
    double qgen_inv_a = 60.0, qgen_inv_b = 0.486;
    double qgen_dcdc_a = 40.0, qgen_dcdc_b = 0.099;

    // Fixed superheat/subcooling used when evaluating theta
    double superheat_K = 5.0;
    double subcool_K = 5.0;

    double psi_ij(int i, int j) const { return psi[static_cast<std::size_t>(3 * i + j)]; }

    static ParameterSet load(const std::string& path);
    void save(const std::string& path) const;

    // Independent multiplicative perturbations in [1-magnitude, 1+magnitude]
    // over every physical parameter except C_nom and the Q_gen maps.
    // Efficiencies and fractions are clamped back into their valid ranges.
    ParameterSet perturbed(std::uint64_t seed, double magnitude) const;

    void validate() const; // throws ConfigError on nonphysical values
};

} // namespace tem
