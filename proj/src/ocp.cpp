#include "tem/ocp.hpp"

#include "tem/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace tem::ocp {

namespace {

// Power depends on x only through these four entries (pump coolant density
// and the compressor pressure ratio).
constexpr std::array<int, 4> kPowerStates{kTmot, kTb, kPin, kPout};

fluid::FluidState theta_at(const fluid::FluidState& theta, const StateVector& x)
{
    fluid::FluidState th = theta;
    th.p_in = x.p_in();
    th.p_out = x.p_out();
    return th;
}

} // namespace

Eigen::VectorXd Scaling::scale_state(const StateVector& x) const
{
    Eigen::VectorXd out(kNx);
    for (int i = 0; i < kNx; ++i) out[i] = to_scaled_x(i, x[i]);
    return out;
}

StateVector Scaling::unscale_state(const Eigen::VectorXd& xs) const
{
    StateVector x;
    for (int i = 0; i < kNx; ++i) x[i] = to_phys_x(i, xs[i]);
    return x;
}

Scaling Scaling::make(const Bounds& b)
{
    Scaling s;
    const double Toff = 273.15;
    s.x_scale = {{50, 50, 50, 1, 50, 1e5, 1e5, 50, 50}};
    s.x_offset = {{Toff, Toff, Toff, 0, Toff, 0, 0, Toff, Toff}};
    for (int j = 0; j < kNu; ++j) {
        s.u_scale[j] = b.u_max[j] - b.u_min[j];
        s.u_offset[j] = b.u_min[j];
    }
    return s;
}

Bounds Bounds::defaults()
{
    Bounds b;
    b.x_min = {{233.15, 233.15, 233.15, 0.02, 233.15, 1.1e5, 1.2e5, 223.15, 223.15}};
    b.x_max = {{413.15, 398.15, 398.15, 1.00, 328.15, 5.0e5, 2.8e6, 343.15, 333.15}};
    b.x_pref_lo = {{233.15, 233.15, 233.15, 0.05, 273.15, 1.15e5, 1.2e5, 223.15, 291.15}};
    b.x_pref_hi = {{393.15, 378.15, 378.15, 1.00, 313.15, 4.5e5, 2.3e6, 343.15, 297.15}};
    b.u_min = {{0.0, 0.01, 200.0, 200.0, 0.0, 0.0}};
    b.u_max = {{8000.0, 0.25, 6000.0, 6000.0, 5000.0, 3000.0}};
    b.du_max = {{500.0, 0.03, 500.0, 500.0, 1000.0, 500.0}};
    return b;
}

void Bounds::validate() const
{
    for (int i = 0; i < kNx; ++i) {
        if (!(x_min[i] <= x_pref_lo[i] && x_pref_lo[i] <= x_pref_hi[i] &&
              x_pref_hi[i] <= x_max[i]))
            throw InfeasibleBoxesError("bounds: state box ordering violated at index " +
                                       std::to_string(i));
    }
    for (int j = 0; j < kNu; ++j) {
        if (!(u_min[j] < u_max[j]))
            throw InfeasibleBoxesError("bounds: empty input box at index " + std::to_string(j));
        if (!(du_max[j] > 0.0))
            throw InfeasibleBoxesError("bounds: nonpositive rate bound at index " +
                                       std::to_string(j));
    }
}

OcpWeights OcpWeights::defaults()
{
    OcpWeights w;
    w.w_state = {{0, 0, 0, 0, 0, 0, 0, 0, 4.0}};
    w.x_ref = {{0, 0, 0, 0, 0, 0, 0, 0, 294.15}};
    w.w_pwr = 1e-3;
    w.r_input = {{1e-9, 0.1, 1e-9, 1e-9, 1e-8, 1e-9}};
    w.r_rate = {{1e-7, 1.0, 1e-7, 1e-7, 1e-7, 1e-7}};
    w.w_slack_pref = {{50, 50, 50, 1e3, 50, 1e3, 1e3, 50, 200}};
    w.w_slack_alg = 1e3;
    w.w_slack_rate = {{1e3, 1e3, 1e3, 1e3, 1e3, 1e3}};
    w.beta_tie = 0.1;
    w.r_tie = {{0, 0, 0, 0, 0, 0}}; // filled relative to ranges below
    return w;
}

double stage_cost(const StateVector& x, const ControlInput& u, const ControlInput& u_prev,
                  const Model& m, const fluid::FluidState& theta, const OcpWeights& w)
{
    double c = 0.0;
    for (int i = 0; i < kNx; ++i) {
        const double e = x[i] - w.x_ref[i];
        c += w.w_state[i] * e * e;
    }
    c += w.w_pwr * m.total_power(x, u, theta_at(theta, x), Guards::Smooth);
    for (int j = 0; j < kNu; ++j) {
        c += w.r_input[j] * u[j] * u[j];
        const double du = u[j] - u_prev[j];
        c += w.r_rate[j] * du * du;
    }
    return c;
}

OcpInstance::OcpInstance(const Model& model, int N, const StateVector& x_hat,
                         const ControlInput& u_prev, std::vector<StageParams> stages,
                         const Bounds& bounds, const OcpWeights& weights,
                         const TerminalAnchor& terminal, Guards guards, bool parallel)
    : model_(&model), N_(N), x_hat_(x_hat), u_prev_(u_prev), stages_(std::move(stages)),
      bounds_(bounds), weights_(weights), terminal_(terminal), guards_(guards),
      parallel_(parallel)
{
    if (N_ < 2) throw ConfigError("ocp: horizon must be >= 2");
    if (static_cast<int>(stages_.size()) != N_)
        throw DimensionMismatchError("ocp: need one StageParams per stage");
    bounds_.validate();
    scal_ = Scaling::make(bounds_);
    if (weights_.r_tie[0] == 0.0 && weights_.r_tie[kNu - 1] == 0.0) {
        for (int j = 0; j < kNu; ++j)
            weights_.r_tie[j] = 1.0 / (scal_.u_scale[j] * scal_.u_scale[j]);
    }

    off_u_ = kNx * N_;
    off_s_xl_ = off_u_ + kNu * N_;
    off_s_xu_ = off_s_xl_ + kNx * N_;
    off_s_y_ = off_s_xu_ + kNx * N_;
    off_s_du_ = off_s_y_ + kNg * N_;
    n_ = off_s_du_ + kNu * N_;
    m_ineq_ = (2 * kNx + kNg + 2 * kNu) * N_;

    lb_.resize(n_);
    ub_.resize(n_);
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) {
            lb_[x_index(k, i)] = scal_.to_scaled_x(i, bounds_.x_min[i]);
            ub_[x_index(k, i)] = scal_.to_scaled_x(i, bounds_.x_max[i]);
        }
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            lb_[u_index(k, j)] = 0.0;
            ub_[u_index(k, j)] = 1.0;
        }
    for (int i = off_s_xl_; i < n_; ++i) {
        lb_[i] = 0.0;
        ub_[i] = std::numeric_limits<double>::infinity();
    }

    const auto& th0 = stages_.front().theta;
    tsat_lp0_ = th0.lp.T_sat;
    tsat_hp0_ = th0.hp.T_sat;
    dtsat_lp0_ = th0.lp.dTsat_dp;
    dtsat_hp0_ = th0.hp.dTsat_dp;
    p_in0_ = th0.p_in;
    p_out0_ = th0.p_out;

    build_quadratic_hessian();

    // Quasi-Newton groups: one per stage for the power term.
    qn_groups_.reserve(static_cast<std::size_t>(N_));
    for (int k = 0; k < N_; ++k) {
        nlp::QnGroup grp;
        if (k >= 1)
            for (int i : kPowerStates) grp.idx.push_back(x_index(k, i));
        for (int j = 0; j < kNu; ++j) grp.idx.push_back(u_index(k, j));
        grp.gradient = [this, k](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
            power_gradient_stage(k, w, grad);
        };
        qn_groups_.push_back(std::move(grp));
    }
}

void OcpInstance::decode(const Eigen::VectorXd& w, std::vector<StateVector>& xs,
                         std::vector<ControlInput>& us) const
{
    xs.assign(static_cast<std::size_t>(N_) + 1, StateVector{});
    us.assign(static_cast<std::size_t>(N_), ControlInput{});
    xs[0] = x_hat_;
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i)
            xs[static_cast<std::size_t>(k)][i] = scal_.to_phys_x(i, w[x_index(k, i)]);
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j)
            us[static_cast<std::size_t>(k)][j] = scal_.to_phys_u(j, w[u_index(k, j)]);
}

double OcpInstance::objective(const Eigen::VectorXd& w) const
{
    return cost_breakdown(w).total();
}

CostBreakdown OcpInstance::cost_breakdown(const Eigen::VectorXd& w) const
{
    CostBreakdown cb;
    std::vector<StateVector> xs;
    std::vector<ControlInput> us;
    decode(w, xs, us);

    for (int k = 0; k < N_; ++k) {
        const StateVector& x = xs[static_cast<std::size_t>(k)];
        const ControlInput& u = us[static_cast<std::size_t>(k)];
        const ControlInput& up = k == 0 ? u_prev_ : us[static_cast<std::size_t>(k - 1)];
        for (int i = 0; i < kNx; ++i) {
            const double e = x[i] - weights_.x_ref[i];
            cb.tracking += weights_.w_state[i] * e * e;
        }
        cb.power += weights_.w_pwr * model_->total_power(
                        x, u, theta_at(stages_[static_cast<std::size_t>(k)].theta, x),
                        guards_);
        for (int j = 0; j < kNu; ++j) {
            cb.input_quad += weights_.r_input[j] * u[j] * u[j];
            const double du = u[j] - up[j];
            cb.rate += weights_.r_rate[j] * du * du;
        }
    }
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) {
            const double sl = w[s_pref_lo_index(k, i)];
            const double su = w[s_pref_hi_index(k, i)];
            cb.slack_pref += weights_.w_slack_pref[i] * (sl * sl + su * su);
        }
    for (int k = 0; k < N_; ++k) {
        for (int r = 0; r < kNg; ++r) {
            const double s = w[s_alg_index(k, r)];
            cb.slack_alg += weights_.w_slack_alg * s * s;
        }
        for (int j = 0; j < kNu; ++j) {
            const double s = w[s_rate_index(k, j)];
            cb.slack_rate += weights_.w_slack_rate[j] * s * s;
        }
    }
    Eigen::VectorXd v(kNx);
    for (int i = 0; i < kNx; ++i) v[i] = w[x_index(N_, i)] - terminal_.x_st_scaled[i];
    cb.terminal = v.dot(terminal_.P * v);
    for (int j = 0; j < kNu; ++j) {
        const double du = us[static_cast<std::size_t>(N_ - 1)][j] - terminal_.u_st[j];
        cb.tiebreak += weights_.beta_tie * weights_.r_tie[j] * du * du;
    }
    return cb;
}

void OcpInstance::power_gradient_stage(int k, const Eigen::VectorXd& w,
                                       Eigen::VectorXd& grad) const
{
    using D = Dual<10>;
    std::vector<StateVector> xs;
    std::vector<ControlInput> us;
    // Only the k-th stage matters; decode locally to avoid a full pass.
    StateVector x = x_hat_;
    if (k >= 1)
        for (int i = 0; i < kNx; ++i) x[i] = scal_.to_phys_x(i, w[x_index(k, i)]);
    ControlInput u;
    for (int j = 0; j < kNu; ++j) u[j] = scal_.to_phys_u(j, w[u_index(k, j)]);

    StateT<D> xd;
    for (int i = 0; i < kNx; ++i) xd[i] = D(x[i]);
    if (k >= 1)
        for (int s = 0; s < 4; ++s) xd[kPowerStates[static_cast<std::size_t>(s)]] =
            D(x[kPowerStates[static_cast<std::size_t>(s)]], s);
    InputT<D> ud;
    for (int j = 0; j < kNu; ++j) ud[j] = D(u[j], 4 + j);

    fluid::FluidStateT<D> th =
        detail::promote_fluid<D>(stages_[static_cast<std::size_t>(k)].theta);
    th.p_in = xd.p_in();
    th.p_out = xd.p_out();
    const D p = model_->total_power(xd, ud, th, guards_);

    const int gsz = (k >= 1) ? 10 : kNu;
    grad.resize(gsz);
    if (k >= 1) {
        for (int s = 0; s < 4; ++s)
            grad[s] = weights_.w_pwr * p.d[static_cast<std::size_t>(s)] *
                      scal_.x_scale[kPowerStates[static_cast<std::size_t>(s)]];
        for (int j = 0; j < kNu; ++j)
            grad[4 + j] =
                weights_.w_pwr * p.d[static_cast<std::size_t>(4 + j)] * scal_.u_scale[j];
    } else {
        for (int j = 0; j < kNu; ++j)
            grad[j] = weights_.w_pwr * p.d[static_cast<std::size_t>(4 + j)] * scal_.u_scale[j];
    }
}

void OcpInstance::gradient(const Eigen::VectorXd& w, Eigen::VectorXd& g) const
{
    g.setZero(n_);
    std::vector<StateVector> xs;
    std::vector<ControlInput> us;
    decode(w, xs, us);

    for (int k = 0; k < N_; ++k) {
        const ControlInput& u = us[static_cast<std::size_t>(k)];
        const ControlInput& up = k == 0 ? u_prev_ : us[static_cast<std::size_t>(k - 1)];
        if (k >= 1) {
            const StateVector& x = xs[static_cast<std::size_t>(k)];
            for (int i = 0; i < kNx; ++i)
                g[x_index(k, i)] += 2.0 * weights_.w_state[i] * (x[i] - weights_.x_ref[i]) *
                                    scal_.x_scale[i];
        }
        for (int j = 0; j < kNu; ++j) {
            g[u_index(k, j)] += 2.0 * weights_.r_input[j] * u[j] * scal_.u_scale[j];
            const double du = u[j] - up[j];
            g[u_index(k, j)] += 2.0 * weights_.r_rate[j] * du * scal_.u_scale[j];
            if (k >= 1) g[u_index(k - 1, j)] -= 2.0 * weights_.r_rate[j] * du * scal_.u_scale[j];
        }
        // power term
        Eigen::VectorXd pg;
        power_gradient_stage(k, w, pg);
        const auto& grp = qn_groups_[static_cast<std::size_t>(k)];
        for (std::size_t a = 0; a < grp.idx.size(); ++a)
            g[grp.idx[a]] += pg[static_cast<Eigen::Index>(a)];
    }
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) {
            g[s_pref_lo_index(k, i)] += 2.0 * weights_.w_slack_pref[i] * w[s_pref_lo_index(k, i)];
            g[s_pref_hi_index(k, i)] += 2.0 * weights_.w_slack_pref[i] * w[s_pref_hi_index(k, i)];
        }
    for (int k = 0; k < N_; ++k) {
        for (int r = 0; r < kNg; ++r)
            g[s_alg_index(k, r)] += 2.0 * weights_.w_slack_alg * w[s_alg_index(k, r)];
        for (int j = 0; j < kNu; ++j)
            g[s_rate_index(k, j)] += 2.0 * weights_.w_slack_rate[j] * w[s_rate_index(k, j)];
    }
    // terminal + tie-break
    Eigen::VectorXd v(kNx);
    for (int i = 0; i < kNx; ++i) v[i] = w[x_index(N_, i)] - terminal_.x_st_scaled[i];
    const Eigen::VectorXd Pv = 2.0 * (terminal_.P * v);
    for (int i = 0; i < kNx; ++i) g[x_index(N_, i)] += Pv[i];
    for (int j = 0; j < kNu; ++j) {
        const double du = us[static_cast<std::size_t>(N_ - 1)][j] - terminal_.u_st[j];
        g[u_index(N_ - 1, j)] += 2.0 * weights_.beta_tie * weights_.r_tie[j] * du *
                                 scal_.u_scale[j];
    }
}

void OcpInstance::eval_eq(const Eigen::VectorXd& w, Eigen::VectorXd& c) const
{
    std::vector<StateVector> xs;
    std::vector<ControlInput> us;
    decode(w, xs, us);
    c.resize(kNx * N_);
    for (int k = 0; k < N_; ++k) {
        const StateVector xn = rk4_step(*model_, xs[static_cast<std::size_t>(k)],
                                        us[static_cast<std::size_t>(k)],
                                        stages_[static_cast<std::size_t>(k)], 1.0, guards_);
        for (int i = 0; i < kNx; ++i)
            c[k * kNx + i] = w[x_index(k + 1, i)] - scal_.to_scaled_x(i, xn[i]);
    }
}

void OcpInstance::jac_eq(const Eigen::VectorXd& w, std::vector<nlp::SpTriplet>& out) const
{
    std::vector<StateVector> xs;
    std::vector<ControlInput> us;
    decode(w, xs, us);

    std::vector<DiscreteJacobians> J(static_cast<std::size_t>(N_));
    linearize_stages(*model_, std::span<const StateVector>(xs.data(), static_cast<std::size_t>(N_)),
                     us, stages_, 1.0, guards_, J, parallel_);

    for (int k = 0; k < N_; ++k) {
        const auto& Jk = J[static_cast<std::size_t>(k)];
        for (int i = 0; i < kNx; ++i) {
            out.emplace_back(k * kNx + i, x_index(k + 1, i), 1.0);
            if (k >= 1)
                for (int j = 0; j < kNx; ++j)
                    out.emplace_back(k * kNx + i, x_index(k, j),
                                     -Jk.A(i, j) * scal_.x_scale[j] / scal_.x_scale[i]);
            for (int j = 0; j < kNu; ++j)
                out.emplace_back(k * kNx + i, u_index(k, j),
                                 -Jk.B(i, j) * scal_.u_scale[j] / scal_.x_scale[i]);
        }
    }
}

void OcpInstance::eval_ineq(const Eigen::VectorXd& w, Eigen::VectorXd& c) const
{
    c.resize(m_ineq_);
    int row = 0;
    // pref-lo / pref-hi
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i)
            c[row++] = w[x_index(k, i)] - scal_.to_scaled_x(i, bounds_.x_pref_lo[i]) +
                       w[s_pref_lo_index(k, i)];
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i)
            c[row++] = scal_.to_scaled_x(i, bounds_.x_pref_hi[i]) - w[x_index(k, i)] +
                       w[s_pref_hi_index(k, i)];
    // algebraic rows
    for (int k = 0; k < N_; ++k) {
        const double p_in =
            k == 0 ? x_hat_.p_in() : scal_.to_phys_x(kPin, w[x_index(k, kPin)]);
        const double p_out =
            k == 0 ? x_hat_.p_out() : scal_.to_phys_x(kPout, w[x_index(k, kPout)]);
        c[row++] = (weights_.pressure_ratio_max * p_in - p_out) / 1e5 + w[s_alg_index(k, 0)];
        const double gap = (tsat_hp0_ + dtsat_hp0_ * (p_out - p_out0_)) -
                           (tsat_lp0_ + dtsat_lp0_ * (p_in - p_in0_));
        c[row++] = (gap - weights_.tsat_gap_min_K) / 10.0 + w[s_alg_index(k, 1)];
    }
    // rate rows
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            const double u_prev_s =
                k == 0 ? scal_.to_scaled_u(j, u_prev_[j]) : w[u_index(k - 1, j)];
            const double du = w[u_index(k, j)] - u_prev_s;
            const double du_lim = bounds_.du_max[j] / scal_.u_scale[j];
            c[row++] = du + du_lim + w[s_rate_index(k, j)];
        }
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            const double u_prev_s =
                k == 0 ? scal_.to_scaled_u(j, u_prev_[j]) : w[u_index(k - 1, j)];
            const double du = w[u_index(k, j)] - u_prev_s;
            const double du_lim = bounds_.du_max[j] / scal_.u_scale[j];
            c[row++] = du_lim + w[s_rate_index(k, j)] - du;
        }
}

void OcpInstance::jac_ineq(const Eigen::VectorXd&, std::vector<nlp::SpTriplet>& out) const
{
    int row = 0;
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) {
            out.emplace_back(row, x_index(k, i), 1.0);
            out.emplace_back(row, s_pref_lo_index(k, i), 1.0);
            ++row;
        }
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) {
            out.emplace_back(row, x_index(k, i), -1.0);
            out.emplace_back(row, s_pref_hi_index(k, i), 1.0);
            ++row;
        }
    for (int k = 0; k < N_; ++k) {
        if (k >= 1) {
            out.emplace_back(row, x_index(k, kPin),
                             weights_.pressure_ratio_max * scal_.x_scale[kPin] / 1e5);
            out.emplace_back(row, x_index(k, kPout), -scal_.x_scale[kPout] / 1e5);
        }
        out.emplace_back(row, s_alg_index(k, 0), 1.0);
        ++row;
        if (k >= 1) {
            out.emplace_back(row, x_index(k, kPout), dtsat_hp0_ * scal_.x_scale[kPout] / 10.0);
            out.emplace_back(row, x_index(k, kPin), -dtsat_lp0_ * scal_.x_scale[kPin] / 10.0);
        }
        out.emplace_back(row, s_alg_index(k, 1), 1.0);
        ++row;
    }
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            out.emplace_back(row, u_index(k, j), 1.0);
            if (k >= 1) out.emplace_back(row, u_index(k - 1, j), -1.0);
            out.emplace_back(row, s_rate_index(k, j), 1.0);
            ++row;
        }
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            out.emplace_back(row, u_index(k, j), -1.0);
            if (k >= 1) out.emplace_back(row, u_index(k - 1, j), 1.0);
            out.emplace_back(row, s_rate_index(k, j), 1.0);
            ++row;
        }
}

void OcpInstance::build_quadratic_hessian()
{
    auto add = [&](int r, int c, double v) {
        if (v == 0.0) return;
        if (r >= c)
            hess_const_.emplace_back(r, c, v);
        else
            hess_const_.emplace_back(c, r, v);
    };
    // tracking (stages 1..N-1)
    for (int k = 1; k < N_; ++k)
        for (int i = 0; i < kNx; ++i)
            add(x_index(k, i), x_index(k, i),
                2.0 * weights_.w_state[i] * scal_.x_scale[i] * scal_.x_scale[i]);
    // input quadratic and rate coupling
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            const double su2 = scal_.u_scale[j] * scal_.u_scale[j];
            double diag = 2.0 * weights_.r_input[j] * su2 + 2.0 * weights_.r_rate[j] * su2;
            if (k + 1 < N_) diag += 2.0 * weights_.r_rate[j] * su2;
            add(u_index(k, j), u_index(k, j), diag);
            if (k >= 1) add(u_index(k, j), u_index(k - 1, j), -2.0 * weights_.r_rate[j] * su2);
        }
    // slacks
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) {
            add(s_pref_lo_index(k, i), s_pref_lo_index(k, i), 2.0 * weights_.w_slack_pref[i]);
            add(s_pref_hi_index(k, i), s_pref_hi_index(k, i), 2.0 * weights_.w_slack_pref[i]);
        }
    for (int k = 0; k < N_; ++k) {
        for (int r = 0; r < kNg; ++r)
            add(s_alg_index(k, r), s_alg_index(k, r), 2.0 * weights_.w_slack_alg);
        for (int j = 0; j < kNu; ++j)
            add(s_rate_index(k, j), s_rate_index(k, j), 2.0 * weights_.w_slack_rate[j]);
    }
    // terminal block
    for (int i = 0; i < kNx; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = 2.0 * terminal_.P(i, j);
            if (v != 0.0) add(x_index(N_, i), x_index(N_, j), v);
        }
    // tie-break
    for (int j = 0; j < kNu; ++j)
        add(u_index(N_ - 1, j), u_index(N_ - 1, j),
            2.0 * weights_.beta_tie * weights_.r_tie[j] * scal_.u_scale[j] * scal_.u_scale[j]);
}

void OcpInstance::hess(const Eigen::VectorXd&, std::vector<nlp::SpTriplet>& out) const
{
    out.insert(out.end(), hess_const_.begin(), hess_const_.end());
}

nlp::ShiftLayout OcpInstance::shift_layout() const
{
    nlp::ShiftLayout L;
    L.primal_blocks.push_back({0, kNx, N_});
    L.primal_blocks.push_back({off_u_, kNu, N_});
    L.primal_blocks.push_back({off_s_xl_, kNx, N_});
    L.primal_blocks.push_back({off_s_xu_, kNx, N_});
    L.primal_blocks.push_back({off_s_y_, kNg, N_});
    L.primal_blocks.push_back({off_s_du_, kNu, N_});
    L.eq_blocks.push_back({0, kNx, N_});
    L.ineq_blocks.push_back({0, kNx, N_});
    L.ineq_blocks.push_back({kNx * N_, kNx, N_});
    L.ineq_blocks.push_back({2 * kNx * N_, kNg, N_});
    L.ineq_blocks.push_back({(2 * kNx + kNg) * N_, kNu, N_});
    L.ineq_blocks.push_back({(2 * kNx + kNg + kNu) * N_, kNu, N_});
    return L;
}

Eigen::VectorXd OcpInstance::cold_start_primal() const
{
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_);
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) w[x_index(k, i)] = scal_.to_scaled_x(i, x_hat_[i]);
    for (int k = 0; k < N_; ++k)
        for (int j = 0; j < kNu; ++j) {
            const double uc = std::clamp(u_prev_[j], bounds_.u_min[j], bounds_.u_max[j]);
            w[u_index(k, j)] = scal_.to_scaled_u(j, uc);
        }
    // Seed slacks with the violations of the constant guess.
    Eigen::VectorXd ci;
    eval_ineq(w, ci);
    int row = 0;
    auto seed = [&](int idx) {
        if (ci[row] < 0.0) w[idx] = -ci[row] + 1e-3;
        ++row;
    };
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) seed(s_pref_lo_index(k, i));
    for (int k = 1; k <= N_; ++k)
        for (int i = 0; i < kNx; ++i) seed(s_pref_hi_index(k, i));
    for (int k = 0; k < N_; ++k)
        for (int r = 0; r < kNg; ++r) seed(s_alg_index(k, r));
    // rate rows: constant guess has zero rate except k = 0
    return w;
}

OcpSolution solve_ocp(const OcpInstance& inst, nlp::Solver& solver, const nlp::Guess& guess)
{
    OcpSolution sol;
    sol.raw = solver.solve(inst, guess);
    sol.status = sol.raw.status;
    sol.iterations = sol.raw.iterations;
    sol.wall_ms = sol.raw.wall_ms;
    sol.objective = sol.raw.objective;
    inst.decode(sol.raw.w, sol.x, sol.u);
    sol.breakdown = inst.cost_breakdown(sol.raw.w);
    int active = 0;
    for (int idx = inst.num_vars() - 1; idx >= 0; --idx) {
        // slack variables occupy the tail of the vector
        if (idx < kNx * inst.horizon() + kNu * inst.horizon()) break;
        if (sol.raw.w[idx] > 1e-6) ++active;
    }
    sol.active_slack_count = active;
    return sol;
}

} // namespace tem::ocp
