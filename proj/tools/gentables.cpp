// Regenerates the property-table data assets under data/tables/.
//
// Refrigerant: R134a-class saturation curves from an Antoine vapor-pressure
// fit, a Watson latent-heat correlation, and a Clausius-Clapeyron-consistent
// vapor volume, on a 50-node log-spaced pressure grid (100 kPa .. 3 MPa).
// Coolant: 50/50 glycol-water; air: dry air at 1 atm, both on a 230..400 K
// temperature grid.

#include "tem/csv.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace {

constexpr double kAntoineA = 21.6256; // ln(Pa)
constexpr double kAntoineB = 2249.7;  // K
constexpr double kAntoineC = -24.34;  // K
constexpr double kTcrit = 374.21;     // K
constexpr double kLat0 = 326.6e3;     // J/kg, Watson prefactor
constexpr double kHl0 = 200.0e3;      // J/kg at 0 C (IIR reference)
constexpr double kSl0 = 1000.0;       // J/(kg K) at 0 C (IIR reference)

double t_sat(double p) { return kAntoineB / (kAntoineA - std::log(p)) - kAntoineC; }
double dp_dT(double p, double T) { return p * kAntoineB / ((T + kAntoineC) * (T + kAntoineC)); }
double latent(double T) { return kLat0 * std::pow(1.0 - T / kTcrit, 0.38); }
double h_liq(double T)
{
    const double dT = T - 273.15;
    return kHl0 + 1340.0 * dT + 2.8 * dT * dT;
}
double rho_liq(double T)
{
    const double dT = T - 273.15;
    return 1295.0 - 3.4 * dT - 0.015 * dT * dT;
}
double s_liq(double T)
{
    // integral of cp_l(T)/T with cp_l = 1340 + 5.6 (T - 273.15)
    const double T0 = 273.15;
    return kSl0 + (1340.0 - 5.6 * T0) * std::log(T / T0) + 5.6 * (T - T0);
}

} // namespace

int main(int argc, char** argv)
{
    const std::string out_dir = argc > 1 ? argv[1] : "data/tables";

    {
        tem::csv::Table t;
        t.columns = {"p_Pa", "Tsat_K", "hl_J_per_kg", "hg_J_per_kg", "rhol", "rhog", "s_l", "s_g"};
        const int n = 50;
        const double p_lo = 1.0e5, p_hi = 3.0e6;
        for (int i = 0; i < n; ++i) {
            const double p = p_lo * std::pow(p_hi / p_lo, double(i) / (n - 1));
            const double T = t_sat(p);
            const double L = latent(T);
            const double hl = h_liq(T);
            const double hg = hl + L;
            const double rl = rho_liq(T);
            const double vg = 1.0 / rl + L / (T * dp_dT(p, T));
            const double rg = 1.0 / vg;
            const double sl = s_liq(T);
            const double sg = sl + L / T;
            t.rows.push_back({p, T, hl, hg, rl, rg, sl, sg});
        }
        tem::csv::write_file(out_dir + "/r134a_sat.csv", t);
        std::printf("wrote %s/r134a_sat.csv (%d nodes)\n", out_dir.c_str(), n);
    }

    {
        tem::csv::Table t;
        t.columns = {"T_K", "rho_kg_m3", "cp_J_kgK", "mu_Pa_s", "k_W_mK"};
        for (double T = 230.0; T <= 400.0 + 1e-9; T += 10.0) {
            const double dT = T - 273.15;
            const double rho = 1082.0 - 0.57 * dT;
            const double cp = 3300.0 + 2.0 * dT;
            const double mu = 3.9e-3 * std::exp(1800.0 * (1.0 / T - 1.0 / 293.15));
            const double k = 0.38 + 5.0e-4 * dT;
            t.rows.push_back({T, rho, cp, mu, k});
        }
        tem::csv::write_file(out_dir + "/coolant_props.csv", t);
        std::printf("wrote %s/coolant_props.csv\n", out_dir.c_str());
    }

    {
        tem::csv::Table t;
        t.columns = {"T_K", "rho_kg_m3", "cp_J_kgK", "mu_Pa_s", "k_W_mK"};
        for (double T = 230.0; T <= 400.0 + 1e-9; T += 10.0) {
            const double rho = 353.1 / T;
            const double cp = 1003.0 + 0.02 * (T - 273.15);
            const double mu = 1.458e-6 * std::pow(T, 1.5) / (T + 110.4);
            const double k = 0.0241 * std::pow(T / 273.15, 0.86);
            t.rows.push_back({T, rho, cp, mu, k});
        }
        tem::csv::write_file(out_dir + "/air_props.csv", t);
        std::printf("wrote %s/air_props.csv\n", out_dir.c_str());
    }
    return 0;
}
