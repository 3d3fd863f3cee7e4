#include "tem/fluid.hpp"

#include "tem/csv.hpp"

#include <algorithm>
#include <cmath>

namespace tem::fluid {

PropertyTable::PropertyTable(std::vector<double> grid, std::vector<double> values,
                             std::string name)
    : grid_(std::move(grid)), values_(std::move(values)), name_(std::move(name))
{
    if (grid_.size() < 2 || grid_.size() != values_.size())
        throw ConfigError("PropertyTable '" + name_ + "': bad sizes");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1]))
            throw ConfigError("PropertyTable '" + name_ + "': grid not strictly increasing");

    const std::size_t n = grid_.size();
    node_slopes_.resize(n);
    node_slopes_[0] = (values_[1] - values_[0]) / (grid_[1] - grid_[0]);
    node_slopes_[n - 1] = (values_[n - 1] - values_[n - 2]) / (grid_[n - 1] - grid_[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        node_slopes_[i] = (values_[i + 1] - values_[i - 1]) / (grid_[i + 1] - grid_[i - 1]);
}

void PropertyTable::check_range(double x) const
{
    if (x < grid_.front() || x > grid_.back())
        throw OutOfRangeError("PropertyTable '" + name_ + "': query " + std::to_string(x) +
                              " outside [" + std::to_string(grid_.front()) + ", " +
                              std::to_string(grid_.back()) + "]");
}

int PropertyTable::bracket(double x) const
{
    check_range(x);
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    int i = static_cast<int>(it - grid_.begin()) - 1;
    const int last = static_cast<int>(grid_.size()) - 2;
    return std::clamp(i, 0, last);
}

RefrigerantTables RefrigerantTables::load(const std::string& csv_path)
{
    const csv::Table t = csv::read_file(csv_path);
    const int ip = t.require_col("p_Pa");
    const int iT = t.require_col("Tsat_K");
    const int ihl = t.require_col("hl_J_per_kg");
    const int ihg = t.require_col("hg_J_per_kg");
    const int irl = t.require_col("rhol");
    const int irg = t.require_col("rhog");
    const int isl = t.require_col("s_l");
    const int isg = t.require_col("s_g");

    std::vector<double> p, Ts, hl, hg, rl, rg, sl, sg, rlhl, rghg;
    for (const auto& r : t.rows) {
        p.push_back(r[ip]);
        Ts.push_back(r[iT]);
        hl.push_back(r[ihl]);
        hg.push_back(r[ihg]);
        rl.push_back(r[irl]);
        rg.push_back(r[irg]);
        sl.push_back(r[isl]);
        sg.push_back(r[isg]);
        rlhl.push_back(r[irl] * r[ihl]);
        rghg.push_back(r[irg] * r[ihg]);
    }

    RefrigerantTables out;
    out.T_sat_ = PropertyTable(p, Ts, "Tsat");
    out.h_l_ = PropertyTable(p, hl, "h_l");
    out.h_g_ = PropertyTable(p, hg, "h_g");
    out.rho_l_ = PropertyTable(p, rl, "rho_l");
    out.rho_g_ = PropertyTable(p, rg, "rho_g");
    out.s_l_ = PropertyTable(p, sl, "s_l");
    out.s_g_ = PropertyTable(p, sg, "s_g");
    out.rholhl_ = PropertyTable(p, rlhl, "rhol*hl");
    out.rhoghg_ = PropertyTable(std::move(p), std::move(rghg), "rhog*hg");
    return out;
}

double RefrigerantTables::p_sat(double T) const
{
    const auto& Ts = T_sat_.values();
    const auto& p = T_sat_.grid();
    if (T < Ts.front() || T > Ts.back())
        throw OutOfRangeError("p_sat: temperature outside saturation table");
    const auto it = std::upper_bound(Ts.begin(), Ts.end(), T);
    std::size_t i = static_cast<std::size_t>(it - Ts.begin());
    i = std::clamp<std::size_t>(i, 1, Ts.size() - 1) - 1;
    const double w = (T - Ts[i]) / (Ts[i + 1] - Ts[i]);
    return p[i] + w * (p[i + 1] - p[i]);
}

namespace {

PropertyTable column_table(const csv::Table& t, const std::string& col, const std::string& name)
{
    const int iT = t.require_col("T_K");
    const int ic = t.require_col(col);
    std::vector<double> g, v;
    for (const auto& r : t.rows) {
        g.push_back(r[iT]);
        v.push_back(r[ic]);
    }
    return PropertyTable(std::move(g), std::move(v), name);
}

} // namespace

SecondaryTables SecondaryTables::load(const std::string& coolant_csv, const std::string& air_csv)
{
    const csv::Table tc = csv::read_file(coolant_csv);
    const csv::Table ta = csv::read_file(air_csv);
    SecondaryTables s;
    s.clnt_rho_ = column_table(tc, "rho_kg_m3", "coolant rho");
    s.clnt_cp_ = column_table(tc, "cp_J_kgK", "coolant cp");
    s.clnt_mu_ = column_table(tc, "mu_Pa_s", "coolant mu");
    s.clnt_k_ = column_table(tc, "k_W_mK", "coolant k");
    s.air_rho_ = column_table(ta, "rho_kg_m3", "air rho");
    s.air_cp_ = column_table(ta, "cp_J_kgK", "air cp");
    s.air_mu_ = column_table(ta, "mu_Pa_s", "air mu");
    s.air_k_ = column_table(ta, "k_W_mK", "air k");
    return s;
}

StreamProps SecondaryTables::props(Stream s, double T_K) const
{
    if (s == Stream::Coolant) {
        clnt_rho_.check_range(T_K);
        return {clnt_rho_.value(T_K), clnt_cp_.value(T_K), clnt_mu_.value(T_K),
                clnt_k_.value(T_K)};
    }
    air_rho_.check_range(T_K);
    return {air_rho_.value(T_K), air_cp_.value(T_K), air_mu_.value(T_K), air_k_.value(T_K)};
}

Tables Tables::load(const std::string& data_dir)
{
    Tables t;
    t.refrigerant = RefrigerantTables::load(data_dir + "/tables/r134a_sat.csv");
    t.secondary =
        SecondaryTables::load(data_dir + "/tables/coolant_props.csv", data_dir + "/tables/air_props.csv");
    return t;
}

} // namespace tem::fluid
