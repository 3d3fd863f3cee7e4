#pragma once

#include "tem/dual.hpp"
#include "tem/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace tem::fluid {

// Piecewise-linear table over a strictly increasing grid. Values interpolate
// exactly through the nodes. Derivatives use node-centered secants (central
// difference over the neighboring nodes, one-sided at the ends) interpolated
// linearly between nodes, so they are continuous and usable under AD.
class PropertyTable {
public:
    PropertyTable() = default;
    PropertyTable(std::vector<double> grid, std::vector<double> values, std::string name);

    double x_min() const { return grid_.front(); }
    double x_max() const { return grid_.back(); }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::string& name() const { return name_; }

    template <class T>
    T value(const T& x) const
    {
        const int i = bracket(tem::value(x));
        const double w = 1.0 / (grid_[i + 1] - grid_[i]);
        return values_[i] + (x - grid_[i]) * ((values_[i + 1] - values_[i]) * w);
    }

    template <class T>
    T derivative(const T& x) const
    {
        const int i = bracket(tem::value(x));
        const double w = 1.0 / (grid_[i + 1] - grid_[i]);
        return node_slopes_[i] + (x - grid_[i]) * ((node_slopes_[i + 1] - node_slopes_[i]) * w);
    }

    double node_slope(int i) const { return node_slopes_[i]; }
    void check_range(double x) const;

private:
    int bracket(double x) const; // index of the interval containing x
    std::vector<double> grid_;
    std::vector<double> values_;
    std::vector<double> node_slopes_;
    std::string name_;
};

// Saturation-line quantities at one pressure.
template <class T>
struct SatPointT {
    T T_sat;
    T h_l, h_g;
    T rho_l, rho_g;
    T s_l, s_g;
    T d_rholhl_dp; // d(rho_l*h_l)/dp
    T d_rhoghg_dp; // d(rho_g*h_g)/dp
    T dTsat_dp;
};

// Thermophysical parameter vector theta evaluated at one operating point.
template <class T>
struct FluidStateT {
    T p_in, p_out;
    SatPointT<T> lp, hp;
    T v_in;      // compressor inlet specific volume
    T h1;        // compressor inlet enthalpy (superheated vapor at p_in)
    T h2s;       // isentropic outlet enthalpy at p_out
    T h3;        // condenser exit enthalpy (subcooled liquid at p_out)
    T h4;        // evaporator inlet enthalpy (isenthalpic expansion)
    T cp_ref_vh; // vapor heat capacity at the high-pressure side
    double superheat_K{5.0};
    double subcool_K{5.0};
};

using FluidState = FluidStateT<double>;

// Saturation tables for an R134a-class refrigerant on a log-spaced pressure
// grid, loaded from the checked-in CSV asset.
class RefrigerantTables {
public:
    static RefrigerantTables load(const std::string& csv_path);

    const PropertyTable& T_sat() const { return T_sat_; }
    const PropertyTable& h_l() const { return h_l_; }
    const PropertyTable& h_g() const { return h_g_; }
    const PropertyTable& rho_l() const { return rho_l_; }
    const PropertyTable& rho_g() const { return rho_g_; }
    const PropertyTable& s_l() const { return s_l_; }
    const PropertyTable& s_g() const { return s_g_; }
    const PropertyTable& rholhl() const { return rholhl_; }
    const PropertyTable& rhoghg() const { return rhoghg_; }

    double p_min() const { return T_sat_.x_min(); }
    double p_max() const { return T_sat_.x_max(); }

    // Inverse of the saturation curve; T must lie inside the tabulated range.
    double p_sat(double T) const;

    // Vapor heat capacity correlation used for superheated-state entropy and
    // the compressor outlet temperature.
    template <class T>
    T cp_vapor(const T& p) const
    {
        return 850.0 + 3.0e-4 * p;
    }

    template <class T>
    SatPointT<T> sat_point(const T& p) const
    {
        SatPointT<T> s;
        s.T_sat = T_sat_.value(p);
        s.h_l = h_l_.value(p);
        s.h_g = h_g_.value(p);
        s.rho_l = rho_l_.value(p);
        s.rho_g = rho_g_.value(p);
        s.s_l = s_l_.value(p);
        s.s_g = s_g_.value(p);
        s.d_rholhl_dp = rholhl_.derivative(p);
        s.d_rhoghg_dp = rhoghg_.derivative(p);
        s.dTsat_dp = T_sat_.derivative(p);
        return s;
    }

    template <class T>
    FluidStateT<T> eval_fluid_state(const T& p_in, const T& p_out, double superheat_K = 5.0,
                                    double subcool_K = 5.0) const
    {
        T_sat_.check_range(tem::value(p_in));
        T_sat_.check_range(tem::value(p_out));
        if (!(tem::value(p_out) > tem::value(p_in)))
            throw InvertedPressuresError("eval_fluid_state: p_out <= p_in");

        FluidStateT<T> f;
        f.p_in = p_in;
        f.p_out = p_out;
        f.superheat_K = superheat_K;
        f.subcool_K = subcool_K;
        f.lp = sat_point(p_in);
        f.hp = sat_point(p_out);

        const T cp_v_lp = cp_vapor(p_in);
        f.cp_ref_vh = cp_vapor(p_out);

        // State 1: superheated vapor at p_in. Ideal-gas proportionality for
        // the specific volume of the slightly superheated inlet.
        const T T1 = f.lp.T_sat + superheat_K;
        f.h1 = f.lp.h_g + cp_v_lp * superheat_K;
        f.v_in = (1.0 / f.lp.rho_g) * (T1 / f.lp.T_sat);

        // Isentropic compression to p_out using the embedded entropy tables
        // with a constant-cp superheat extension.
        const T s1 = f.lp.s_g + cp_v_lp * log(T1 / f.lp.T_sat);
        const T T2s = f.hp.T_sat * exp((s1 - f.hp.s_g) / f.cp_ref_vh);
        f.h2s = f.hp.h_g + f.cp_ref_vh * (T2s - f.hp.T_sat);

        // State 3: subcooled liquid at p_out; state 4: isenthalpic expansion.
        const T cp_l = liquid_cp(f.hp.T_sat);
        f.h3 = f.hp.h_l - cp_l * subcool_K;
        f.h4 = f.h3;
        return f;
    }

    template <class T>
    static T liquid_cp(const T& T_K)
    {
        return 1340.0 + 5.6 * (T_K - 273.15);
    }

private:
    PropertyTable T_sat_, h_l_, h_g_, rho_l_, rho_g_, s_l_, s_g_;
    PropertyTable rholhl_, rhoghg_;
};

template <class T>
struct StreamPropsT {
    T rho;
    T cp;
    T mu;
    T k;
};

using StreamProps = StreamPropsT<double>;

enum class Stream { Coolant, Air };

// Temperature-indexed transport property tables for the coolant and air
// streams, loaded from checked-in CSV assets.
class SecondaryTables {
public:
    static SecondaryTables load(const std::string& coolant_csv, const std::string& air_csv);

    StreamProps props(Stream s, double T_K) const;
    StreamProps coolant(double T_K) const { return props(Stream::Coolant, T_K); }
    StreamProps air(double T_K) const { return props(Stream::Air, T_K); }

    template <class T>
    StreamPropsT<T> coolant_t(const T& T_K) const
    {
        clnt_rho_.check_range(tem::value(T_K));
        return {clnt_rho_.value(T_K), clnt_cp_.value(T_K), clnt_mu_.value(T_K),
                clnt_k_.value(T_K)};
    }

    template <class T>
    StreamPropsT<T> air_t(const T& T_K) const
    {
        air_rho_.check_range(tem::value(T_K));
        return {air_rho_.value(T_K), air_cp_.value(T_K), air_mu_.value(T_K), air_k_.value(T_K)};
    }

    const PropertyTable& coolant_mu() const { return clnt_mu_; }
    const PropertyTable& coolant_cp() const { return clnt_cp_; }
    const PropertyTable& coolant_rho() const { return clnt_rho_; }
    const PropertyTable& coolant_k() const { return clnt_k_; }
    const PropertyTable& air_rho() const { return air_rho_; }
    const PropertyTable& air_cp() const { return air_cp_; }
    const PropertyTable& air_mu() const { return air_mu_; }
    const PropertyTable& air_k() const { return air_k_; }

private:
    PropertyTable clnt_rho_, clnt_cp_, clnt_mu_, clnt_k_;
    PropertyTable air_rho_, air_cp_, air_mu_, air_k_;
};

// Bundle of all property assets; immutable after construction and safe for
// concurrent reads.
struct Tables {
    RefrigerantTables refrigerant;
    SecondaryTables secondary;

    static Tables load(const std::string& data_dir);
};

} // namespace tem::fluid
