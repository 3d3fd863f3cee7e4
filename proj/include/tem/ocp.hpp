#pragma once

#include "tem/discretize.hpp"
#include "tem/model.hpp"
#include "tem/nlp.hpp"

#include <memory>
#include <vector>

namespace tem::ocp {

// Decision-variable scaling: temperatures offset by 273.15 and divided by
// 50, pressures by 1e5, inputs by their bound ranges.
struct Scaling {
    StateVector x_scale, x_offset;
    ControlInput u_scale, u_offset;

    Eigen::Matrix<double, kNx, 1> sx() const
    {
        Eigen::Matrix<double, kNx, 1> s;
        for (int i = 0; i < kNx; ++i) s[i] = x_scale[i];
        return s;
    }

    double to_scaled_x(int i, double v) const { return (v - x_offset[i]) / x_scale[i]; }
    double to_phys_x(int i, double v) const { return v * x_scale[i] + x_offset[i]; }
    double to_scaled_u(int j, double v) const { return (v - u_offset[j]) / u_scale[j]; }
    double to_phys_u(int j, double v) const { return v * u_scale[j] + u_offset[j]; }

    Eigen::VectorXd scale_state(const StateVector& x) const;
    StateVector unscale_state(const Eigen::VectorXd& xs) const;

    static Scaling make(const struct Bounds& b);
};

struct Bounds {
    StateVector x_min, x_max;       // hard state box
    StateVector x_pref_lo, x_pref_hi; // soft preference box
    ControlInput u_min, u_max;      // actuator box
    ControlInput du_max;            // rate bound per input per step

    static Bounds defaults();
    void validate() const; // InfeasibleBoxesError on an empty box
};

struct OcpWeights {
    StateVector w_state{};    // diagonal W_st, physical units
    StateVector x_ref{};      // reference (only tracked entries matter)
    double w_pwr = 1e-3;      // energy weight per W
    ControlInput r_input{};   // diagonal R
    ControlInput r_rate{};    // diagonal R_du
    StateVector w_slack_pref{};  // pref-box slack weights (scaled-unit quadratic)
    double w_slack_alg = 1e3;
    ControlInput w_slack_rate{}; // rate slack weights (scaled-unit quadratic)
    double beta_tie = 0.1;
    ControlInput r_tie{};     // tie-break weight diag (physical)
    // terminal-target NLP weights
    double lambda_T = 1.0;
    double rho_2 = 1e3;
    double rho_u = 1e-3;
    // algebraic constraint parameters (rows of g in 41h)
    double pressure_ratio_max = 9.0;
    double tsat_gap_min_K = 4.0;

    static OcpWeights defaults();
};

struct CostBreakdown {
    double tracking = 0, power = 0, input_quad = 0, rate = 0;
    double slack_pref = 0, slack_alg = 0, slack_rate = 0;
    double terminal = 0, tiebreak = 0;
    double total() const
    {
        return tracking + power + input_quad + rate + slack_pref + slack_alg + slack_rate +
               terminal + tiebreak;
    }
};

// Eq. 42 stage cost (exactly the four-term sum).
double stage_cost(const StateVector& x, const ControlInput& u, const ControlInput& u_prev,
                  const Model& m, const fluid::FluidState& theta, const OcpWeights& w);

struct TerminalAnchor {
    Eigen::VectorXd x_st_scaled; // dimension kNx
    ControlInput u_st;
    Eigen::Matrix<double, kNx, kNx> P; // scaled-space terminal penalty
};

// Sparse NLP encoding of the finite-horizon OCP (41a)-(41j) plus the
// terminal penalty (44) and tie-break (46). Immutable once built; evaluation
// methods are const and may run concurrently.
class OcpInstance : public nlp::Problem {
public:
    OcpInstance(const Model& model, int N, const StateVector& x_hat, const ControlInput& u_prev,
                std::vector<StageParams> stages, const Bounds& bounds, const OcpWeights& weights,
                const TerminalAnchor& terminal, Guards guards = Guards::Smooth,
                bool parallel = true);

    // nlp::Problem interface
    int num_vars() const override { return n_; }
    int num_eq() const override { return kNx * N_; }
    int num_ineq() const override { return m_ineq_; }
    const Eigen::VectorXd& lb() const override { return lb_; }
    const Eigen::VectorXd& ub() const override { return ub_; }
    double objective(const Eigen::VectorXd& w) const override;
    void gradient(const Eigen::VectorXd& w, Eigen::VectorXd& g) const override;
    void eval_eq(const Eigen::VectorXd& w, Eigen::VectorXd& c) const override;
    void eval_ineq(const Eigen::VectorXd& w, Eigen::VectorXd& c) const override;
    void jac_eq(const Eigen::VectorXd& w, std::vector<nlp::SpTriplet>& out) const override;
    void jac_ineq(const Eigen::VectorXd& w, std::vector<nlp::SpTriplet>& out) const override;
    void hess(const Eigen::VectorXd& w, std::vector<nlp::SpTriplet>& out) const override;
    const std::vector<nlp::QnGroup>& qn_groups() const override { return qn_groups_; }

    // layout
    int horizon() const { return N_; }
    int x_index(int k, int i) const { return (k - 1) * kNx + i; } // k = 1..N
    int u_index(int k, int j) const { return kNx * N_ + k * kNu + j; }
    int s_pref_lo_index(int k, int i) const { return off_s_xl_ + (k - 1) * kNx + i; }
    int s_pref_hi_index(int k, int i) const { return off_s_xu_ + (k - 1) * kNx + i; }
    int s_alg_index(int k, int r) const { return off_s_y_ + k * kNg + r; }
    int s_rate_index(int k, int j) const { return off_s_du_ + k * kNu + j; }
    static constexpr int kNg = 2; // algebraic rows per stage

    const Scaling& scaling() const { return scal_; }
    const Bounds& bounds() const { return bounds_; }
    const OcpWeights& weights() const { return weights_; }
    const StateVector& x_hat() const { return x_hat_; }
    const ControlInput& u_prev() const { return u_prev_; }
    const std::vector<StageParams>& stages() const { return stages_; }

    nlp::ShiftLayout shift_layout() const;

    // Initial guesses
    Eigen::VectorXd cold_start_primal() const;

    // Decode a primal vector into physical trajectories and cost terms.
    void decode(const Eigen::VectorXd& w, std::vector<StateVector>& xs,
                std::vector<ControlInput>& us) const;
    CostBreakdown cost_breakdown(const Eigen::VectorXd& w) const;

private:
    void power_gradient_stage(int k, const Eigen::VectorXd& w, Eigen::VectorXd& grad) const;
    void build_quadratic_hessian();

    const Model* model_;
    int N_;
    StateVector x_hat_;
    ControlInput u_prev_;
    std::vector<StageParams> stages_;
    Bounds bounds_;
    OcpWeights weights_;
    TerminalAnchor terminal_;
    Guards guards_;
    bool parallel_;
    Scaling scal_;

    int n_ = 0, m_ineq_ = 0;
    int off_u_ = 0, off_s_xl_ = 0, off_s_xu_ = 0, off_s_y_ = 0, off_s_du_ = 0;
    Eigen::VectorXd lb_, ub_;
    std::vector<nlp::SpTriplet> hess_const_; // constant quadratic Hessian
    std::vector<nlp::QnGroup> qn_groups_;
    // frozen Tsat linearization for the algebraic gap row
    double tsat_lp0_ = 0, tsat_hp0_ = 0, dtsat_lp0_ = 0, dtsat_hp0_ = 0, p_in0_ = 0, p_out0_ = 0;
};

// Result of one NMPC solve in physical units.
struct OcpSolution {
    std::vector<StateVector> x; // x_0 .. x_N (x_0 = x_hat)
    std::vector<ControlInput> u; // u_0 .. u_{N-1}
    nlp::Solution raw;
    CostBreakdown breakdown;
    nlp::SolveStatus status = nlp::SolveStatus::Diverged;
    int iterations = 0;
    double wall_ms = 0;
    double objective = 0;
    int active_slack_count = 0;
};

OcpSolution solve_ocp(const OcpInstance& inst, nlp::Solver& solver, const nlp::Guess& guess);

} // namespace tem::ocp
