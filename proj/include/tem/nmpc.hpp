#pragma once

#include "tem/ident.hpp"
#include "tem/model.hpp"
#include "tem/nlp.hpp"
#include "tem/ocp.hpp"
#include "tem/supervisor.hpp"
#include "tem/terminal.hpp"

#include <optional>
#include <span>
#include <vector>

namespace tem::nmpc {

struct NmpcConfig {
    int horizon = 30;
    double dt = 1.0;
    nlp::SolverOptions solver;
    terminal::TerminalConfig terminal;
    bool preview_hold = false;       // hold d_t over the horizon (robustness test)
    int coldstart_probe_interval = 0; // >0: also solve every n-th instance cold (diagnostics)
    bool parallel_stages = true;
};

// Eq. 35 schedule lookup.
GammaVector schedule_gamma(double T_amb, const StateVector& x, double I_b,
                           const ident::GammaMap& map);

struct StepDiagnostics {
    nlp::SolveStatus status = nlp::SolveStatus::Diverged;
    bool fallback = false;
    bool xhat_clamped = false;
    bool terminal_reused = false;
    bool terminal_skipped = false;
    int iterations = 0;
    double solve_ms = 0;
    double terminal_ms = 0;
    double kkt_error = 0;
    int active_slacks = 0;
    ocp::CostBreakdown breakdown;
    double objective = 0;
    double gamma_d = 1.0;
    double spectral_radius = 0;
    int cold_iterations = -1; // -1 when no probe ran
    ModeFlags modes;
    GammaVector gamma;
    std::vector<StateVector> predicted; // x_0..x_N of the accepted solution
};

struct ControllerState {
    ControlInput u_prev{};
    std::optional<nlp::Solution> prev_solution;
    std::optional<terminal::TerminalData> terminal;
    ModeFlags modes{};
    long step_count = 0;
    // z-change reference for the terminal skip rule
    double last_T_amb = 0, last_I_b = 0, last_v_veh = 0;
    StateVector last_x{};
    bool have_last_z = false;
};

// Receding-horizon NMPC (Algorithm 1). Every failure path resolves to the
// saturated LQR fallback; the controller never fails to output.
class Controller {
public:
    Controller(const Model& com, Supervisor supervisor, ident::GammaMap gamma_map,
               ocp::Bounds bounds, ocp::OcpWeights weights, NmpcConfig cfg);

    ControlInput control_step(const StateVector& x_hat_in,
                              std::span<const DisturbanceFrame> preview, ControllerState& cs,
                              StepDiagnostics* diag = nullptr) const;

    const NmpcConfig& config() const { return cfg_; }
    const ocp::Bounds& bounds() const { return bounds_; }
    const ocp::OcpWeights& weights() const { return weights_; }
    const Model& model() const { return *com_; }
    const ident::GammaMap& gamma_map() const { return gamma_map_; }

    ControlInput initial_input() const; // mid-safe defaults for u_{-1}

private:
    StateVector clamp_state(const StateVector& x, bool* clamped) const;

    const Model* com_;
    Supervisor supervisor_;
    ident::GammaMap gamma_map_;
    ocp::Bounds bounds_;
    ocp::OcpWeights weights_;
    NmpcConfig cfg_;
};

} // namespace tem::nmpc
