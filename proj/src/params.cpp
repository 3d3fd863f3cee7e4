#include "tem/params.hpp"

#include "tem/config.hpp"
#include "tem/errors.hpp"

#include <algorithm>
#include <random>

namespace tem {

namespace {

struct FieldRef {
    const char* section;
    const char* key;
    double ParameterSet::* ptr;
    bool perturbable;
    double clamp_lo;
    double clamp_hi;
};

constexpr double kNoClamp = -1.0e300;

// One canonical field list drives load, save, and twin perturbation, so the
// perturbation order is stable for a given seed.
const std::vector<FieldRef>& fields()
{
    static const std::vector<FieldRef> f = {
        {"components", "m_mot", &ParameterSet::m_mot, true, 1e-6, kNoClamp},
        {"components", "cp_mot", &ParameterSet::cp_mot, true, 1e-6, kNoClamp},
        {"components", "m_inv", &ParameterSet::m_inv, true, 1e-6, kNoClamp},
        {"components", "cp_inv", &ParameterSet::cp_inv, true, 1e-6, kNoClamp},
        {"components", "m_dcdc", &ParameterSet::m_dcdc, true, 1e-6, kNoClamp},
        {"components", "cp_dcdc", &ParameterSet::cp_dcdc, true, 1e-6, kNoClamp},
        {"components", "m_b", &ParameterSet::m_b, true, 1e-6, kNoClamp},
        {"components", "cp_b", &ParameterSet::cp_b, true, 1e-6, kNoClamp},
        {"components", "A_hx_mot", &ParameterSet::A_hx_mot, true, 1e-6, kNoClamp},
        {"components", "D_ch_mot", &ParameterSet::D_ch_mot, true, 1e-6, kNoClamp},
        {"components", "kappa_cond_mot", &ParameterSet::kappa_cond_mot, true, 0.0, kNoClamp},
        {"components", "A_hx_inv", &ParameterSet::A_hx_inv, true, 1e-6, kNoClamp},
        {"components", "D_ch_inv", &ParameterSet::D_ch_inv, true, 1e-6, kNoClamp},
        {"components", "kappa_cond_inv", &ParameterSet::kappa_cond_inv, true, 0.0, kNoClamp},
        {"components", "A_hx_dcdc", &ParameterSet::A_hx_dcdc, true, 1e-6, kNoClamp},
        {"components", "D_ch_dcdc", &ParameterSet::D_ch_dcdc, true, 1e-6, kNoClamp},
        {"components", "kappa_cond_dcdc", &ParameterSet::kappa_cond_dcdc, true, 0.0, kNoClamp},
        {"components", "A_hx_b", &ParameterSet::A_hx_b, true, 1e-6, kNoClamp},
        {"components", "D_ch_b", &ParameterSet::D_ch_b, true, 1e-6, kNoClamp},
        {"components", "kappa_cond_b", &ParameterSet::kappa_cond_b, true, 0.0, kNoClamp},
        {"pumps", "alpha_p", &ParameterSet::alpha_p, true, 1e-6, kNoClamp},
        {"pumps", "eta_vol", &ParameterSet::eta_vol, true, 1e-3, 0.999},
        {"pumps", "V_disp_mot", &ParameterSet::V_disp_mot, true, 1e-12, kNoClamp},
        {"pumps", "V_disp_b", &ParameterSet::V_disp_b, true, 1e-12, kNoClamp},
        {"pumps", "k_circuit_mot", &ParameterSet::k_circuit_mot, true, 0.0, kNoClamp},
        {"pumps", "k_circuit_b", &ParameterSet::k_circuit_b, true, 0.0, kNoClamp},
        {"pumps", "eta_p", &ParameterSet::eta_p, true, 1e-3, 0.999},
        {"exchangers", "A_rad", &ParameterSet::A_rad, true, 1e-6, kNoClamp},
        {"exchangers", "D_rad_clnt", &ParameterSet::D_rad_clnt, true, 1e-6, kNoClamp},
        {"exchangers", "D_rad_air", &ParameterSet::D_rad_air, true, 1e-6, kNoClamp},
        {"exchangers", "A_whr", &ParameterSet::A_whr, true, 1e-6, kNoClamp},
        {"exchangers", "D_whr_clnt", &ParameterSet::D_whr_clnt, true, 1e-6, kNoClamp},
        {"exchangers", "h_ref_whr", &ParameterSet::h_ref_whr, true, 1.0, kNoClamp},
        {"exchangers", "A_chiller", &ParameterSet::A_chiller, true, 1e-6, kNoClamp},
        {"exchangers", "D_ch_clnt", &ParameterSet::D_ch_clnt, true, 1e-6, kNoClamp},
        {"exchangers", "h_ref_chiller", &ParameterSet::h_ref_chiller, true, 1.0, kNoClamp},
        {"exchangers", "A_ic", &ParameterSet::A_ic, true, 1e-6, kNoClamp},
        {"exchangers", "D_ic_air", &ParameterSet::D_ic_air, true, 1e-6, kNoClamp},
        {"exchangers", "h_ref_ic", &ParameterSet::h_ref_ic, true, 1.0, kNoClamp},
        {"exchangers", "A_ce", &ParameterSet::A_ce, true, 1e-6, kNoClamp},
        {"exchangers", "D_ce_air", &ParameterSet::D_ce_air, true, 1e-6, kNoClamp},
        {"exchangers", "h_ref_ce", &ParameterSet::h_ref_ce, true, 1.0, kNoClamp},
        {"exchangers", "A_ev", &ParameterSet::A_ev, true, 1e-6, kNoClamp},
        {"exchangers", "D_ev_air", &ParameterSet::D_ev_air, true, 1e-6, kNoClamp},
        {"exchangers", "h_ref_ev", &ParameterSet::h_ref_ev, true, 1.0, kNoClamp},
        {"heater_fan", "eta_ht", &ParameterSet::eta_ht, true, 1e-3, 0.999},
        {"heater_fan", "alpha_ht", &ParameterSet::alpha_ht, true, 1e-3, kNoClamp},
        {"heater_fan", "P_fan_nom", &ParameterSet::P_fan_nom, true, 0.0, kNoClamp},
        {"heater_fan", "omega_fan_ref", &ParameterSet::omega_fan_ref, true, 1.0, kNoClamp},
        {"heater_fan", "eta_fan", &ParameterSet::eta_fan, true, 1e-3, 0.999},
        {"heater_fan", "alpha_ram", &ParameterSet::alpha_ram, true, 0.0, kNoClamp},
        {"heater_fan", "alpha_fan", &ParameterSet::alpha_fan, true, 0.0, kNoClamp},
        {"heater_fan", "P_bl_nom", &ParameterSet::P_bl_nom, true, 0.0, kNoClamp},
        {"heater_fan", "mdot_bl_ref", &ParameterSet::mdot_bl_ref, true, 1e-6, kNoClamp},
        {"compressor", "alpha_v", &ParameterSet::alpha_v, true, kNoClamp, 0.0},
        {"compressor", "beta_v", &ParameterSet::beta_v, true, 0.05, 1.5},
        {"compressor", "V_disp_comp", &ParameterSet::V_disp_comp, true, 1e-12, kNoClamp},
        {"compressor", "alpha_mf", &ParameterSet::alpha_mf, true, 1e-3, kNoClamp},
        {"compressor", "eta_isen", &ParameterSet::eta_isen, true, 1e-3, 0.999},
        {"compressor", "eta_mech", &ParameterSet::eta_mech, true, 1e-3, 0.999},
        {"compressor", "eta_elec", &ParameterSet::eta_elec, true, 1e-3, 0.999},
        {"compressor", "alpha_sh", &ParameterSet::alpha_sh, true, 1e-3, kNoClamp},
        {"refrigerant_loop", "V_ab", &ParameterSet::V_ab, true, 1e-9, kNoClamp},
        {"refrigerant_loop", "V_rj", &ParameterSet::V_rj, true, 1e-9, kNoClamp},
        {"refrigerant_loop", "phi_ab", &ParameterSet::phi_ab, true, 0.01, 0.99},
        {"refrigerant_loop", "phi_rj", &ParameterSet::phi_rj, true, 0.01, 0.99},
        {"refrigerant_loop", "M_wab", &ParameterSet::M_wab, true, 1e-6, kNoClamp},
        {"refrigerant_loop", "M_wrj", &ParameterSet::M_wrj, true, 1e-6, kNoClamp},
        {"refrigerant_loop", "C_ab", &ParameterSet::C_ab, true, 1e-6, kNoClamp},
        {"refrigerant_loop", "C_rj", &ParameterSet::C_rj, true, 1e-6, kNoClamp},
        {"cabin", "U_glass", &ParameterSet::U_glass, true, 1e-6, kNoClamp},
        {"cabin", "A_glass", &ParameterSet::A_glass, true, 1e-6, kNoClamp},
        {"cabin", "delta_glass", &ParameterSet::delta_glass, true, 1e-6, kNoClamp},
        {"cabin", "lambda_glass", &ParameterSet::lambda_glass, true, 1e-6, kNoClamp},
        {"cabin", "beta_glass", &ParameterSet::beta_glass, true, 1e-3, kNoClamp},
        {"cabin", "U_doors", &ParameterSet::U_doors, true, 1e-6, kNoClamp},
        {"cabin", "A_doors", &ParameterSet::A_doors, true, 1e-6, kNoClamp},
        {"cabin", "delta_doors", &ParameterSet::delta_doors, true, 1e-6, kNoClamp},
        {"cabin", "lambda_doors", &ParameterSet::lambda_doors, true, 1e-6, kNoClamp},
        {"cabin", "beta_doors", &ParameterSet::beta_doors, true, 1e-3, kNoClamp},
        {"cabin", "U_roof", &ParameterSet::U_roof, true, 1e-6, kNoClamp},
        {"cabin", "A_roof", &ParameterSet::A_roof, true, 1e-6, kNoClamp},
        {"cabin", "delta_roof", &ParameterSet::delta_roof, true, 1e-6, kNoClamp},
        {"cabin", "lambda_roof", &ParameterSet::lambda_roof, true, 1e-6, kNoClamp},
        {"cabin", "beta_roof", &ParameterSet::beta_roof, true, 1e-3, kNoClamp},
        {"cabin", "M_int", &ParameterSet::M_int, true, 1e-6, kNoClamp},
        {"cabin", "cp_int", &ParameterSet::cp_int, true, 1e-6, kNoClamp},
        {"cabin", "alpha_int", &ParameterSet::alpha_int, true, 1e-6, kNoClamp},
        {"cabin", "alpha_R_int", &ParameterSet::alpha_R_int, true, 1e-6, kNoClamp},
        {"cabin", "C_air", &ParameterSet::C_air, true, 1.0, kNoClamp},
        {"cabin", "Q_human", &ParameterSet::Q_human, true, 0.0, kNoClamp},
        {"cabin", "r_rec", &ParameterSet::r_rec, true, 0.0, 1.0},
        {"battery", "C_nom", &ParameterSet::C_nom, false, 1.0, kNoClamp},
        {"model", "superheat_K", &ParameterSet::superheat_K, false, 0.0, 30.0},
        {"model", "subcool_K", &ParameterSet::subcool_K, false, 0.0, 30.0},
        {"qgen", "qgen_mot_a", &ParameterSet::qgen_mot_a, false, 0.0, kNoClamp},
        {"qgen", "qgen_mot_b", &ParameterSet::qgen_mot_b, false, 0.0, kNoClamp},
        {"qgen", "qgen_inv_a", &ParameterSet::qgen_inv_a, false, 0.0, kNoClamp},
        {"qgen", "qgen_inv_b", &ParameterSet::qgen_inv_b, false, 0.0, kNoClamp},
        {"qgen", "qgen_dcdc_a", &ParameterSet::qgen_dcdc_a, false, 0.0, kNoClamp},
        {"qgen", "qgen_dcdc_b", &ParameterSet::qgen_dcdc_b, false, 0.0, kNoClamp},
    };
    return f;
}

} // namespace

ParameterSet ParameterSet::load(const std::string& path)
{
    const config::File cfg = config::File::parse(path);
    ParameterSet p; // defaults for any omitted key
    for (const auto& f : fields())
        if (cfg.has(f.section, f.key)) p.*(f.ptr) = cfg.get_num(f.section, f.key);
    if (cfg.has("battery", "psi")) {
        const auto v = cfg.get_list("battery", "psi");
        if (v.size() != 9) throw ConfigError("params: battery.psi needs 9 entries");
        std::copy(v.begin(), v.end(), p.psi.begin());
    }
    p.validate();
    return p;
}

void ParameterSet::save(const std::string& path) const
{
    config::File cfg;
    for (const auto& f : fields()) cfg.set_num(f.section, f.key, this->*(f.ptr));
    cfg.set_list("battery", "psi", std::vector<double>(psi.begin(), psi.end()));
    cfg.write(path);
}

ParameterSet ParameterSet::perturbed(std::uint64_t seed, double magnitude) const
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0 - magnitude, 1.0 + magnitude);
    ParameterSet p = *this;
    for (const auto& f : fields()) {
        if (!f.perturbable) continue;
        double v = (p.*(f.ptr)) * u(rng);
        if (f.clamp_lo != kNoClamp) v = std::max(v, f.clamp_lo);
        if (f.clamp_hi != kNoClamp) v = std::min(v, f.clamp_hi);
        p.*(f.ptr) = v;
    }
    for (auto& c : p.psi) c *= u(rng);
    p.validate();
    return p;
}

void ParameterSet::validate() const
{
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw ConfigError(std::string("params: ") + what + " must be positive");
    };
    positive(m_mot, "m_mot");
    positive(m_inv, "m_inv");
    positive(m_dcdc, "m_dcdc");
    positive(m_b, "m_b");
    positive(cp_mot, "cp_mot");
    positive(cp_inv, "cp_inv");
    positive(cp_dcdc, "cp_dcdc");
    positive(cp_b, "cp_b");
    positive(C_nom, "C_nom");
    positive(C_air, "C_air");
    positive(V_ab, "V_ab");
    positive(V_rj, "V_rj");
    auto efficiency = [](double v, const char* what) {
        if (!(v > 0.0 && v <= 1.0))
            throw ConfigError(std::string("params: ") + what + " must be in (0, 1]");
    };
    efficiency(eta_vol, "eta_vol");
    efficiency(eta_p, "eta_p");
    efficiency(eta_ht, "eta_ht");
    efficiency(eta_fan, "eta_fan");
    efficiency(eta_isen, "eta_isen");
    efficiency(eta_mech, "eta_mech");
    efficiency(eta_elec, "eta_elec");
    if (phi_ab < 0.0 || phi_ab > 1.0 || phi_rj < 0.0 || phi_rj > 1.0)
        throw ConfigError("params: void fractions must be in [0, 1]");
    if (r_rec < 0.0 || r_rec > 1.0) throw ConfigError("params: r_rec must be in [0, 1]");
}

} // namespace tem
