#pragma once

#include "tem/discretize.hpp"
#include "tem/model.hpp"
#include "tem/nlp.hpp"
#include "tem/ocp.hpp"

#include <Eigen/Dense>

namespace tem::terminal {

struct TerminalConfig {
    double gamma_init = 1.0;      // 1.0 = discount only as fallback
    double dare_tol_rel = 1e-10;
    int dare_max_iters = 10000;
    double skip_threshold = 0.0;  // scaled z-change below which recompute is skipped
};

// Quasi-steady pair, linearization, and DARE solution. P and K live in the
// scaled state/input space recorded alongside.
struct TerminalData {
    StateVector x_st;
    ControlInput u_st;
    StateVector residual;              // s = x_st - Phi(x_st, u_st)
    Eigen::Matrix<double, kNx, kNx> A; // scaled-space linearization
    Eigen::Matrix<double, kNx, kNu> B;
    Eigen::Matrix<double, kNx, kNx> P;
    Eigen::Matrix<double, kNu, kNx> K;
    double gamma_d = 1.0;
    double dare_residual = 0.0;
    ocp::Scaling scaling;
};

struct DareResult {
    Eigen::MatrixXd P;
    Eigen::MatrixXd K;
    double gamma_used = 1.0;
    double residual = 0.0;
    int iterations = 0;
};

// Fixed-point Riccati iteration from P0 = Q with a discounting fallback
// (A <- sqrt(gamma) A, gamma stepping 0.98, 0.95, 0.90, 0.85, ... down to
// 0.5). Throws UnstabilizableError when no discount level converges.
DareResult solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                      double gamma_init = 1.0, double tol_rel = 1e-10, int max_iters = 10000);

struct TargetResult {
    StateVector x_st;
    ControlInput u_st;
    StateVector residual;
    nlp::SolveStatus status;
    int iterations;
};

// Quasi-steady terminal pair from the small NLP (Eq. 43): minimize the
// cabin tracking error plus steady-state residual and input effort inside
// the hard boxes.
TargetResult solve_target(const Model& m, const StageParams& z_N, const ocp::Bounds& bounds,
                          const ocp::OcpWeights& weights, const StateVector& x_guess,
                          const ControlInput& u_guess, double dt = 1.0);

// Full terminal update: target, linearization, DARE.
TerminalData compute(const Model& m, const StageParams& z_N, const ocp::Bounds& bounds,
                     const ocp::OcpWeights& weights, const TerminalConfig& cfg,
                     const StateVector& x_guess, const ControlInput& u_guess, double dt = 1.0);

// Eq. 44 quadratic penalty evaluated on the scaled deviation.
double terminal_penalty(const StateVector& x_N, const TerminalData& td);

// Alg. 1 line 14: saturated LQR fallback input.
ControlInput lqr_fallback(const StateVector& x_hat, const TerminalData& td,
                          const ocp::Bounds& bounds);

// Spectral radius of the discounted closed loop sqrt(g)*(A - B K).
double closed_loop_spectral_radius(const TerminalData& td);

} // namespace tem::terminal
