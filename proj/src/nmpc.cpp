#include "tem/nmpc.hpp"

#include <chrono>
#include <cmath>

namespace tem::nmpc {

GammaVector schedule_gamma(double T_amb, const StateVector& x, double I_b,
                           const ident::GammaMap& map)
{
    return map.query(T_amb, x, I_b);
}

Controller::Controller(const Model& com, Supervisor supervisor, ident::GammaMap gamma_map,
                       ocp::Bounds bounds, ocp::OcpWeights weights, NmpcConfig cfg)
    : com_(&com), supervisor_(std::move(supervisor)), gamma_map_(std::move(gamma_map)),
      bounds_(bounds), weights_(weights), cfg_(cfg)
{
    bounds_.validate();
    if (gamma_map_.anchors.empty()) throw EmptyMapError("nmpc: gamma map has no anchors");
}

ControlInput Controller::initial_input() const
{
    ControlInput u{};
    for (int j = 0; j < kNu; ++j) u[j] = bounds_.u_min[j];
    return u;
}

StateVector Controller::clamp_state(const StateVector& x, bool* clamped) const
{
    StateVector c = x;
    bool any = false;
    for (int i = 0; i < kNx; ++i) {
        const double v = std::clamp(c[i], bounds_.x_min[i], bounds_.x_max[i]);
        if (v != c[i]) any = true;
        c[i] = v;
    }
    // keep the pressure ordering the property evaluation requires
    if (!(c.p_out() > c.p_in())) {
        c.p_out() = c.p_in() * 1.000001;
        any = true;
    }
    if (clamped != nullptr) *clamped = any;
    return c;
}

ControlInput Controller::control_step(const StateVector& x_hat_in,
                                      std::span<const DisturbanceFrame> preview,
                                      ControllerState& cs, StepDiagnostics* diag) const
{
    const int N = cfg_.horizon;
    if (static_cast<int>(preview.size()) < N)
        throw DimensionMismatchError("control_step: preview shorter than horizon");

    StepDiagnostics local;
    StepDiagnostics& dg = diag != nullptr ? *diag : local;
    dg = StepDiagnostics{};

    // Lines 3-5: state intake, modes, scheduled parameters, properties.
    const StateVector x_hat = clamp_state(x_hat_in, &dg.xhat_clamped);
    const DisturbanceFrame& d0 = preview[0];
    const ModeFlags modes = supervisor_.select_modes(d0.T_amb, x_hat, cs.modes);
    const GammaVector gamma = schedule_gamma(d0.T_amb, x_hat, d0.I_b, gamma_map_);
    const fluid::FluidState theta = com_->tables().refrigerant.eval_fluid_state(
        x_hat.p_in(), x_hat.p_out(), com_->params().superheat_K, com_->params().subcool_K);
    dg.modes = modes;
    dg.gamma = gamma;

    // Line 6: stage parameter sequence (modes/gamma/theta held fixed).
    std::vector<StageParams> stages(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        stages[static_cast<std::size_t>(k)].d =
            cfg_.preview_hold ? d0 : preview[static_cast<std::size_t>(k)];
        stages[static_cast<std::size_t>(k)].v = modes;
        stages[static_cast<std::size_t>(k)].gamma = gamma;
        stages[static_cast<std::size_t>(k)].theta = theta;
    }

    // Line 7-8: terminal target and DARE, with a cheap skip when the
    // operating condition barely moved and modes are unchanged.
    const auto t_term0 = std::chrono::steady_clock::now();
    bool recompute_terminal = !cs.terminal.has_value();
    if (!recompute_terminal) {
        double dz = 0.0;
        if (cs.have_last_z) {
            dz = std::abs(d0.T_amb - cs.last_T_amb) / 10.0 +
                 std::abs(d0.I_b - cs.last_I_b) / 50.0 +
                 std::abs(d0.v_veh - cs.last_v_veh) / 10.0;
            const ocp::Scaling scal = ocp::Scaling::make(bounds_);
            for (int i = 0; i < kNx; ++i)
                dz += std::abs(x_hat[i] - cs.last_x[i]) / scal.x_scale[i] / kNx;
        } else {
            dz = std::numeric_limits<double>::infinity();
        }
        const bool modes_changed =
            modes.hpm != cs.modes.hpm || modes.series != cs.modes.series ||
            modes.rb != cs.modes.rb || modes.ev != cs.modes.ev || modes.ch != cs.modes.ch;
        recompute_terminal = modes_changed || dz > cfg_.terminal.skip_threshold;
        dg.terminal_skipped = !recompute_terminal;
    }
    if (recompute_terminal) {
        try {
            const StateVector xg = cs.terminal.has_value() ? cs.terminal->x_st : x_hat;
            const ControlInput ug = cs.terminal.has_value() ? cs.terminal->u_st : cs.u_prev;
            cs.terminal = terminal::compute(*com_, stages.back(), bounds_, weights_,
                                            cfg_.terminal, xg, ug, cfg_.dt);
        } catch (const std::exception&) {
            // Reuse the previous terminal data; if none exists yet, fall
            // back to a conservative anchor at the current state.
            dg.terminal_reused = true;
            if (!cs.terminal.has_value()) {
                terminal::TerminalData td;
                td.scaling = ocp::Scaling::make(bounds_);
                td.x_st = x_hat;
                td.u_st = cs.u_prev;
                td.residual = StateVector{};
                td.A.setZero();
                td.B.setZero();
                td.P.setIdentity();
                td.K.setZero();
                td.gamma_d = 1.0;
                cs.terminal = td;
            }
        }
    }
    dg.terminal_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_term0)
                         .count();
    dg.gamma_d = cs.terminal->gamma_d;
    dg.spectral_radius = terminal::closed_loop_spectral_radius(*cs.terminal);

    // Build the OCP instance around the terminal anchor.
    ocp::TerminalAnchor anchor;
    anchor.x_st_scaled = cs.terminal->scaling.scale_state(cs.terminal->x_st);
    anchor.u_st = cs.terminal->u_st;
    anchor.P = cs.terminal->P;
    ocp::OcpInstance inst(*com_, N, x_hat, cs.u_prev, stages, bounds_, weights_, anchor,
                          Guards::Smooth, cfg_.parallel_stages);

    // Line 9: warm start by shifting the previous solution.
    nlp::Guess guess;
    bool warm = false;
    if (cs.prev_solution.has_value() &&
        cs.prev_solution->w.size() == inst.num_vars()) {
        guess = nlp::shift_warm_start(*cs.prev_solution, inst.shift_layout());
        warm = true;
    } else {
        guess.w = inst.cold_start_primal();
    }

    // Line 10: warm-started interior-point solve.
    nlp::SolverOptions sopts = cfg_.solver;
    sopts.warm_start = warm;
    nlp::Solver solver(sopts);
    ocp::OcpSolution sol = ocp::solve_ocp(inst, solver, guess);

    dg.status = sol.status;
    dg.iterations = sol.iterations;
    dg.solve_ms = sol.wall_ms;
    dg.kkt_error = sol.raw.kkt_error;
    dg.active_slacks = sol.active_slack_count;
    dg.breakdown = sol.breakdown;
    dg.objective = sol.objective;

    // Optional cold-start probe of the same instance (diagnostics only).
    if (cfg_.coldstart_probe_interval > 0 &&
        cs.step_count % cfg_.coldstart_probe_interval == 0) {
        nlp::SolverOptions copts = cfg_.solver;
        copts.warm_start = false;
        nlp::Solver cold(copts);
        nlp::Guess cg;
        cg.w = inst.cold_start_primal();
        const nlp::Solution csol = cold.solve(inst, cg);
        dg.cold_iterations = csol.iterations;
    }

    // Lines 11-15: apply u0* on convergence, else the saturated LQR law.
    ControlInput u_apply;
    if (sol.status == nlp::SolveStatus::Converged) {
        u_apply = sol.u.front();
        for (int j = 0; j < kNu; ++j)
            u_apply[j] = std::clamp(u_apply[j], bounds_.u_min[j], bounds_.u_max[j]);
        dg.predicted = sol.x;
    } else {
        u_apply = terminal::lqr_fallback(x_hat, *cs.terminal, bounds_);
        dg.fallback = true;
    }

    // Retain the solution for the next warm start when it is usable.
    if (sol.status == nlp::SolveStatus::Converged || sol.status == nlp::SolveStatus::MaxIter)
        cs.prev_solution = sol.raw;

    cs.u_prev = u_apply;
    cs.modes = modes;
    cs.step_count += 1;
    cs.last_T_amb = d0.T_amb;
    cs.last_I_b = d0.I_b;
    cs.last_v_veh = d0.v_veh;
    cs.last_x = x_hat;
    cs.have_last_z = true;
    return u_apply;
}

} // namespace tem::nmpc
