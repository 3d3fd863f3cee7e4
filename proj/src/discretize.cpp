#include "tem/discretize.hpp"

#include "tem/parallel.hpp"

namespace tem {

DiscreteJacobians discrete_jacobians(const Model& m, const StateVector& x, const ControlInput& u,
                                     const StageParams& z, double dt, Guards g)
{
    using D = Dual<kNx + kNu>;
    StateT<D> xd;
    for (int i = 0; i < kNx; ++i) xd[i] = D(x[i], i);
    InputT<D> ud;
    for (int j = 0; j < kNu; ++j) ud[j] = D(u[j], kNx + j);

    const StateT<D> xn = rk4_step(m, xd, ud, z, dt, g);

    DiscreteJacobians J;
    for (int i = 0; i < kNx; ++i) {
        J.x_next[i] = xn[i].v;
        for (int j = 0; j < kNx; ++j) J.A(i, j) = xn[i].d[static_cast<std::size_t>(j)];
        for (int j = 0; j < kNu; ++j)
            J.B(i, j) = xn[i].d[static_cast<std::size_t>(kNx + j)];
    }
    return J;
}

void linearize_stages(const Model& m, std::span<const StateVector> xs,
                      std::span<const ControlInput> us, std::span<const StageParams> zs,
                      double dt, Guards g, std::span<DiscreteJacobians> out, bool parallel)
{
    const int n = static_cast<int>(xs.size());
    if (parallel && tem::parallel::enabled()) {
#pragma omp parallel for schedule(static) num_threads(tem::parallel::max_threads())
        for (int k = 0; k < n; ++k)
            out[static_cast<std::size_t>(k)] =
                discrete_jacobians(m, xs[static_cast<std::size_t>(k)],
                                   us[static_cast<std::size_t>(k)],
                                   zs[static_cast<std::size_t>(k)], dt, g);
    } else {
        // Serial reference path.
        for (int k = 0; k < n; ++k)
            out[static_cast<std::size_t>(k)] =
                discrete_jacobians(m, xs[static_cast<std::size_t>(k)],
                                   us[static_cast<std::size_t>(k)],
                                   zs[static_cast<std::size_t>(k)], dt, g);
    }
}

} // namespace tem
