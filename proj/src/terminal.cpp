#include "tem/terminal.hpp"

#include <cmath>

namespace tem::terminal {

namespace {

// Bound-constrained least-squares target problem over 15 scaled variables.
class TargetProblem : public nlp::Problem {
public:
    TargetProblem(const Model& m, const StageParams& z, const ocp::Bounds& b,
                  const ocp::OcpWeights& w, double dt)
        : m_(&m), z_(z), w_(w), dt_(dt), scal_(ocp::Scaling::make(b))
    {
        lb_.resize(kNx + kNu);
        ub_.resize(kNx + kNu);
        for (int i = 0; i < kNx; ++i) {
            lb_[i] = scal_.to_scaled_x(i, b.x_min[i]);
            ub_[i] = scal_.to_scaled_x(i, b.x_max[i]);
        }
        for (int j = 0; j < kNu; ++j) {
            lb_[kNx + j] = 0.0;
            ub_[kNx + j] = 1.0;
        }
    }

    int num_vars() const override { return kNx + kNu; }
    int num_eq() const override { return 0; }
    int num_ineq() const override { return 0; }
    const Eigen::VectorXd& lb() const override { return lb_; }
    const Eigen::VectorXd& ub() const override { return ub_; }

    void unpack(const Eigen::VectorXd& v, StateVector& x, ControlInput& u) const
    {
        for (int i = 0; i < kNx; ++i) x[i] = scal_.to_phys_x(i, v[i]);
        for (int j = 0; j < kNu; ++j) u[j] = scal_.to_phys_u(j, v[kNx + j]);
    }

    // Scaled steady-state residual s = (x - Phi(x, u)) / x_scale.
    Eigen::VectorXd residual(const Eigen::VectorXd& v) const
    {
        StateVector x;
        ControlInput u;
        unpack(v, x, u);
        const StateVector xn = rk4_step(*m_, x, u, z_, dt_, Guards::Smooth);
        Eigen::VectorXd s(kNx);
        for (int i = 0; i < kNx; ++i) s[i] = (x[i] - xn[i]) / scal_.x_scale[i];
        return s;
    }

    double objective(const Eigen::VectorXd& v) const override
    {
        StateVector x;
        ControlInput u;
        unpack(v, x, u);
        const Eigen::VectorXd s = residual(v);
        const double e = x.T_cair() - w_.x_ref.T_cair();
        double c = w_.lambda_T * e * e + w_.rho_2 * s.squaredNorm();
        for (int j = 0; j < kNu; ++j) c += w_.rho_u * v[kNx + j] * v[kNx + j];
        return c;
    }

    // J = d s / d(scaled vars); refreshed at every gradient/Hessian call.
    Eigen::MatrixXd residual_jacobian(const Eigen::VectorXd& v) const
    {
        StateVector x;
        ControlInput u;
        unpack(v, x, u);
        const DiscreteJacobians dj = discrete_jacobians(*m_, x, u, z_, dt_, Guards::Smooth);
        Eigen::MatrixXd J(kNx, kNx + kNu);
        for (int i = 0; i < kNx; ++i) {
            for (int j = 0; j < kNx; ++j) {
                const double val = ((i == j ? 1.0 : 0.0) - dj.A(i, j)) * scal_.x_scale[j] /
                                   scal_.x_scale[i];
                J(i, j) = val;
            }
            for (int j = 0; j < kNu; ++j)
                J(i, kNx + j) = -dj.B(i, j) * scal_.u_scale[j] / scal_.x_scale[i];
        }
        return J;
    }

    void gradient(const Eigen::VectorXd& v, Eigen::VectorXd& g) const override
    {
        const Eigen::VectorXd s = residual(v);
        const Eigen::MatrixXd J = residual_jacobian(v);
        g = 2.0 * w_.rho_2 * (J.transpose() * s);
        StateVector x;
        ControlInput u;
        unpack(v, x, u);
        g[kTcair] += 2.0 * w_.lambda_T * (x.T_cair() - w_.x_ref.T_cair()) * scal_.x_scale[kTcair];
        for (int j = 0; j < kNu; ++j) g[kNx + j] += 2.0 * w_.rho_u * v[kNx + j];
    }

    void eval_eq(const Eigen::VectorXd&, Eigen::VectorXd&) const override {}
    void eval_ineq(const Eigen::VectorXd&, Eigen::VectorXd&) const override {}
    void jac_eq(const Eigen::VectorXd&, std::vector<nlp::SpTriplet>&) const override {}
    void jac_ineq(const Eigen::VectorXd&, std::vector<nlp::SpTriplet>&) const override {}

    void hess(const Eigen::VectorXd& v, std::vector<nlp::SpTriplet>& out) const override
    {
        // Gauss-Newton model of the least-squares structure.
        const Eigen::MatrixXd J = residual_jacobian(v);
        Eigen::MatrixXd H = 2.0 * w_.rho_2 * (J.transpose() * J);
        H(kTcair, kTcair) += 2.0 * w_.lambda_T * scal_.x_scale[kTcair] * scal_.x_scale[kTcair];
        for (int j = 0; j < kNu; ++j) H(kNx + j, kNx + j) += 2.0 * w_.rho_u;
        for (int i = 0; i < kNx + kNu; ++i)
            for (int j = 0; j <= i; ++j)
                if (H(i, j) != 0.0) out.emplace_back(i, j, H(i, j));
    }

    const ocp::Scaling& scaling() const { return scal_; }

private:
    const Model* m_;
    StageParams z_;
    ocp::OcpWeights w_;
    double dt_;
    ocp::Scaling scal_;
    Eigen::VectorXd lb_, ub_;
};

} // namespace

DareResult solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, double gamma_init,
                      double tol_rel, int max_iters)
{
    const Eigen::Index n = A.rows();
    std::vector<double> schedule;
    schedule.push_back(gamma_init);
    if (gamma_init > 0.98) schedule.push_back(0.98);
    if (gamma_init > 0.95) schedule.push_back(0.95);
    for (double gd = 0.90; gd >= 0.499; gd -= 0.05)
        if (gamma_init > gd) schedule.push_back(gd);

    for (double gd : schedule) {
        const Eigen::MatrixXd Ad = std::sqrt(gd) * A;
        Eigen::MatrixXd P = Q;
        bool ok = false;
        int it = 0;
        for (; it < max_iters; ++it) {
            const Eigen::MatrixXd BtP = B.transpose() * P;
            const Eigen::MatrixXd S = BtP * B + R;
            const Eigen::MatrixXd K = S.ldlt().solve(BtP * Ad);
            Eigen::MatrixXd Pn =
                Q + Ad.transpose() * P * Ad - Ad.transpose() * P * B * K;
            Pn = 0.5 * (Pn + Pn.transpose()); // keep symmetric under roundoff
            const double dP = (Pn - P).norm();
            const double scale = std::max(1.0, P.norm());
            P = Pn;
            if (!P.allFinite()) break;
            if (dP <= tol_rel * scale) {
                ok = true;
                break;
            }
        }
        if (!ok) continue;
        // positive definiteness and residual check
        Eigen::LLT<Eigen::MatrixXd> llt(P);
        if (llt.info() != Eigen::Success) continue;
        const Eigen::MatrixXd BtP = B.transpose() * P;
        const Eigen::MatrixXd S = BtP * B + R;
        const Eigen::MatrixXd K = S.ldlt().solve(BtP * Ad);
        const Eigen::MatrixXd res =
            Q + Ad.transpose() * P * Ad - Ad.transpose() * P * B * K - P;
        const double rel_res = res.norm() / std::max(1e-300, P.norm());
        if (rel_res > 1e-8) continue;

        DareResult out;
        out.P = P;
        out.K = K;
        out.gamma_used = gd;
        out.residual = rel_res;
        out.iterations = it + 1;
        return out;
    }
    throw UnstabilizableError("solve_dare: no discount level in [0.5, " +
                              std::to_string(gamma_init) + "] converged for n=" +
                              std::to_string(n));
}

TargetResult solve_target(const Model& m, const StageParams& z_N, const ocp::Bounds& bounds,
                          const ocp::OcpWeights& weights, const StateVector& x_guess,
                          const ControlInput& u_guess, double dt)
{
    TargetProblem prob(m, z_N, bounds, weights, dt);
    nlp::SolverOptions opts;
    opts.max_iterations = 60;
    opts.tol = 1e-7;
    nlp::Solver solver(opts);
    nlp::Guess g;
    g.w.resize(kNx + kNu);
    for (int i = 0; i < kNx; ++i) g.w[i] = prob.scaling().to_scaled_x(i, x_guess[i]);
    for (int j = 0; j < kNu; ++j) g.w[kNx + j] = prob.scaling().to_scaled_u(j, u_guess[j]);
    const nlp::Solution sol = solver.solve(prob, g);

    TargetResult r;
    r.status = sol.status;
    r.iterations = sol.iterations;
    prob.unpack(sol.w, r.x_st, r.u_st);
    const Eigen::VectorXd s = prob.residual(sol.w);
    for (int i = 0; i < kNx; ++i) r.residual[i] = s[i] * prob.scaling().x_scale[i];
    return r;
}

TerminalData compute(const Model& m, const StageParams& z_N, const ocp::Bounds& bounds,
                     const ocp::OcpWeights& weights, const TerminalConfig& cfg,
                     const StateVector& x_guess, const ControlInput& u_guess, double dt)
{
    const TargetResult tr = solve_target(m, z_N, bounds, weights, x_guess, u_guess, dt);
    if (tr.status == nlp::SolveStatus::Diverged)
        throw NonFiniteError("terminal: target NLP diverged");

    TerminalData td;
    td.scaling = ocp::Scaling::make(bounds);
    td.x_st = tr.x_st;
    td.u_st = tr.u_st;
    td.residual = tr.residual;

    const DiscreteJacobians dj = discrete_jacobians(m, tr.x_st, tr.u_st, z_N, dt, Guards::Smooth);
    for (int i = 0; i < kNx; ++i) {
        for (int j = 0; j < kNx; ++j)
            td.A(i, j) = dj.A(i, j) * td.scaling.x_scale[j] / td.scaling.x_scale[i];
        for (int j = 0; j < kNu; ++j)
            td.B(i, j) = dj.B(i, j) * td.scaling.u_scale[j] / td.scaling.x_scale[i];
    }

    // Q_P from the tracking weights in scaled space plus a small ridge;
    // R_P from the input weights likewise.
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(kNx, kNx);
    for (int i = 0; i < kNx; ++i)
        Q(i, i) = weights.w_state[i] * td.scaling.x_scale[i] * td.scaling.x_scale[i] + 1e-6;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(kNu, kNu);
    for (int j = 0; j < kNu; ++j)
        R(j, j) = weights.r_input[j] * td.scaling.u_scale[j] * td.scaling.u_scale[j] + 1e-6;

    const DareResult dr =
        solve_dare(td.A, td.B, Q, R, cfg.gamma_init, cfg.dare_tol_rel, cfg.dare_max_iters);
    td.P = dr.P;
    td.K = dr.K;
    td.gamma_d = dr.gamma_used;
    td.dare_residual = dr.residual;
    return td;
}

double terminal_penalty(const StateVector& x_N, const TerminalData& td)
{
    Eigen::Matrix<double, kNx, 1> v;
    for (int i = 0; i < kNx; ++i)
        v[i] = (x_N[i] - td.x_st[i]) / td.scaling.x_scale[i];
    return v.dot(td.P * v);
}

ControlInput lqr_fallback(const StateVector& x_hat, const TerminalData& td,
                          const ocp::Bounds& bounds)
{
    Eigen::Matrix<double, kNx, 1> dx;
    for (int i = 0; i < kNx; ++i)
        dx[i] = (td.x_st[i] - x_hat[i]) / td.scaling.x_scale[i];
    const Eigen::Matrix<double, kNu, 1> du = td.K * dx;
    ControlInput u;
    for (int j = 0; j < kNu; ++j) {
        const double val = td.u_st[j] + du[j] * td.scaling.u_scale[j];
        u[j] = std::clamp(val, bounds.u_min[j], bounds.u_max[j]);
    }
    return u;
}

double closed_loop_spectral_radius(const TerminalData& td)
{
    // K solves the DARE of the discounted pair (sqrt(g) A, B), so the
    // discounted closed loop is sqrt(g) A - B K.
    const Eigen::MatrixXd Ac = std::sqrt(td.gamma_d) * td.A - td.B * td.K;
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(Ac, false).eigenvalues();
    double rho = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev[i]));
    return rho;
}

} // namespace tem::terminal
