#pragma once

#include "tem/dual.hpp"
#include "tem/fluid.hpp"
#include "tem/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace tem {

// The z_k bundle: everything the discrete map needs besides (x, u). Modes
// and gamma are held fixed over a horizon; theta is frozen at the operating
// point when used inside the optimizer.
struct StageParams {
    DisturbanceFrame d;
    ModeFlags v;
    GammaVector gamma;
    fluid::FluidState theta;
};

// Classical RK4 over a generic field (scalar or state vector with +,*).
template <class X, class F>
X rk4_step_generic(const F& f, const X& x, double dt)
{
    const X k1 = f(x);
    const X k2 = f(x + (0.5 * dt) * k1);
    const X k3 = f(x + (0.5 * dt) * k2);
    const X k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

template <class T>
StateT<T> axpy(const StateT<T>& x, double a, const StateT<T>& k)
{
    StateT<T> r;
    for (int i = 0; i < kNx; ++i) r[i] = x[i] + a * k[i];
    return r;
}

template <class T>
fluid::FluidStateT<T> promote_fluid(const fluid::FluidState& f)
{
    fluid::FluidStateT<T> o;
    auto sat = [](const fluid::SatPointT<double>& s) {
        fluid::SatPointT<T> q;
        q.T_sat = T(s.T_sat);
        q.h_l = T(s.h_l);
        q.h_g = T(s.h_g);
        q.rho_l = T(s.rho_l);
        q.rho_g = T(s.rho_g);
        q.s_l = T(s.s_l);
        q.s_g = T(s.s_g);
        q.d_rholhl_dp = T(s.d_rholhl_dp);
        q.d_rhoghg_dp = T(s.d_rhoghg_dp);
        q.dTsat_dp = T(s.dTsat_dp);
        return q;
    };
    o.p_in = T(f.p_in);
    o.p_out = T(f.p_out);
    o.lp = sat(f.lp);
    o.hp = sat(f.hp);
    o.v_in = T(f.v_in);
    o.h1 = T(f.h1);
    o.h2s = T(f.h2s);
    o.h3 = T(f.h3);
    o.h4 = T(f.h4);
    o.cp_ref_vh = T(f.cp_ref_vh);
    o.superheat_K = f.superheat_K;
    o.subcool_K = f.subcool_K;
    return o;
}

// Frozen-theta pressure coupling: the volumetric efficiency still sees the
// predicted pressures, so theta's own pressure fields track the state.
template <class T>
void retarget_pressures(fluid::FluidStateT<T>& th, const StateT<T>& x)
{
    th.p_in = x.p_in();
    th.p_out = x.p_out();
}

} // namespace detail

// One RK4 step of the control-oriented model (Eq. 36). Never clamps; the
// plant twin applies the physical box after its substeps.
template <class T>
StateT<T> rk4_step(const Model& m, const StateT<T>& x, const InputT<T>& u, const StageParams& z,
                   double dt, Guards g = Guards::Smooth)
{
    fluid::FluidStateT<T> th = detail::promote_fluid<T>(z.theta);
    auto f = [&](const StateT<T>& xs) {
        fluid::FluidStateT<T> th_s = th;
        detail::retarget_pressures(th_s, xs);
        StateT<T> dx = m.rhs(xs, u, z.d, z.v, z.gamma, th_s, g);
        for (int i = 0; i < kNx; ++i)
            if (!is_finite(dx[i])) throw NonFiniteError("rk4_step: non-finite stage derivative");
        return dx;
    };
    const StateT<T> k1 = f(x);
    const StateT<T> k2 = f(detail::axpy(x, 0.5 * dt, k1));
    const StateT<T> k3 = f(detail::axpy(x, 0.5 * dt, k2));
    const StateT<T> k4 = f(detail::axpy(x, dt, k3));
    StateT<T> out;
    for (int i = 0; i < kNx; ++i)
        out[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// Same step with live property evaluation at every stage (simulation and
// identification semantics; differentiates through the tables).
template <class T, class G>
StateT<T> rk4_step_live(const Model& m, const StateT<T>& x, const InputT<T>& u,
                        const DisturbanceFrame& d, const ModeFlags& v, const G& gam,
                        double dt, Guards g = Guards::Hard)
{
    auto f = [&](const StateT<T>& xs) {
        const fluid::FluidStateT<T> th = m.eval_theta(xs);
        StateT<T> dx = m.rhs(xs, u, d, v, gam, th, g);
        for (int i = 0; i < kNx; ++i)
            if (!is_finite(dx[i]))
                throw NonFiniteError("rk4_step_live: non-finite stage derivative");
        return dx;
    };
    const StateT<T> k1 = f(x);
    const StateT<T> k2 = f(detail::axpy(x, 0.5 * dt, k1));
    const StateT<T> k3 = f(detail::axpy(x, 0.5 * dt, k2));
    const StateT<T> k4 = f(detail::axpy(x, dt, k3));
    StateT<T> out;
    for (int i = 0; i < kNx; ++i)
        out[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

using StateMatrix = Eigen::Matrix<double, kNx, kNx>;
using InputMatrix = Eigen::Matrix<double, kNx, kNu>;

struct DiscreteJacobians {
    StateMatrix A;
    InputMatrix B;
    StateVector x_next;
};

// Exact Jacobians of the discrete map via forward-mode tangents through all
// four RK4 stages (15 seed directions: 9 states + 6 inputs).
DiscreteJacobians discrete_jacobians(const Model& m, const StateVector& x, const ControlInput& u,
                                     const StageParams& z, double dt,
                                     Guards g = Guards::Smooth);

// Stage-parallel kernel: dynamics defects and Jacobians for a whole horizon.
// Every stage writes only its own slot, so the OpenMP path is bit-identical
// to the serial reference for any thread count.
void linearize_stages(const Model& m, std::span<const StateVector> xs,
                      std::span<const ControlInput> us, std::span<const StageParams> zs,
                      double dt, Guards g, std::span<DiscreteJacobians> out, bool parallel);

} // namespace tem
