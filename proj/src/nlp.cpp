#include "tem/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace tem::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKappaEps = 10.0;   // barrier-phase tolerance factor
constexpr double kKappaSigma = 1e10; // bound-dual cap factor
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-5;
constexpr double kEtaArmijo = 1e-4;
constexpr double kDeltaSwitch = 1.0;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;

struct FilterEntry {
    double theta, phi;
};

// Damped BFGS block for one quasi-Newton group.
struct QnState {
    Eigen::MatrixXd B;
    Eigen::VectorXd grad; // gradient at the current accepted point
    bool has_grad = false;
};

} // namespace

Solution Solver::solve(const Problem& prob, const Guess& init)
{
    const auto t_start = std::chrono::steady_clock::now();

    const int n = prob.num_vars();
    const int mE = prob.num_eq();
    const int mI = prob.num_ineq();
    const int N = n + mI; // combined primal (w, t)
    const int M = mE + mI;

    Solution sol;
    sol.status = SolveStatus::Diverged;

    // Combined bounds: w keeps its box, slacks t >= 0.
    Eigen::VectorXd lbW(N), ubW(N);
    lbW.head(n) = prob.lb();
    ubW.head(n) = prob.ub();
    if (mI > 0) {
        lbW.tail(mI).setZero();
        ubW.tail(mI).setConstant(kInf);
    }

    std::vector<int> lo_idx, hi_idx;
    for (int i = 0; i < N; ++i) {
        if (std::isfinite(lbW[i])) lo_idx.push_back(i);
        if (std::isfinite(ubW[i])) hi_idx.push_back(i);
    }
    const bool barrier_active = !lo_idx.empty() || !hi_idx.empty();

    // ---- initialization ----
    const double push = opts_.warm_start ? 1e-9 : 1e-2;
    Eigen::VectorXd W(N);
    if (init.w.size() != n) throw DimensionMismatchError("nlp: guess w has wrong size");
    W.head(n) = init.w;

    Eigen::VectorXd cI0(mI);
    if (mI > 0) {
        prob.eval_ineq(init.w, cI0);
        if (init.t.size() == mI)
            W.tail(mI) = init.t;
        else
            W.tail(mI) = cI0;
    }
    for (int i : lo_idx) {
        const double pad = std::isfinite(ubW[i])
                               ? std::min(push * std::max(1.0, std::abs(lbW[i])),
                                          0.25 * (ubW[i] - lbW[i]))
                               : push * std::max(1.0, std::abs(lbW[i]));
        W[i] = std::max(W[i], lbW[i] + pad);
    }
    for (int i : hi_idx) {
        const double pad = std::isfinite(lbW[i])
                               ? std::min(push * std::max(1.0, std::abs(ubW[i])),
                                          0.25 * (ubW[i] - lbW[i]))
                               : push * std::max(1.0, std::abs(ubW[i]));
        W[i] = std::min(W[i], ubW[i] - pad);
    }

    double mu = opts_.warm_start ? opts_.mu_init_warm : opts_.mu_init;
    const double mu_min = opts_.tol / 10.0;
    mu = std::max(mu, mu_min);

    Eigen::VectorXd y(M);
    y.setZero();
    if (init.y_eq.size() == mE && mE > 0) y.head(mE) = init.y_eq;
    if (init.y_ineq.size() == mI && mI > 0) y.tail(mI) = init.y_ineq;

    Eigen::VectorXd zL = Eigen::VectorXd::Zero(N), zU = Eigen::VectorXd::Zero(N);
    for (int i : lo_idx) zL[i] = mu / (W[i] - lbW[i]);
    for (int i : hi_idx) zU[i] = mu / (ubW[i] - W[i]);
    if (opts_.warm_start) {
        if (init.z_lb.size() == n)
            for (int i : lo_idx)
                if (i < n && init.z_lb[i] > 0) zL[i] = init.z_lb[i];
        if (init.z_ub.size() == n)
            for (int i : hi_idx)
                if (i < n && init.z_ub[i] > 0) zU[i] = init.z_ub[i];
    }

    // ---- workspace ----
    Eigen::VectorXd g_w(n), cE(std::max(mE, 1)), cI(std::max(mI, 1));
    std::vector<SpTriplet> trip_je, trip_ji, trip_h;
    Eigen::SparseMatrix<double> K(N + M, N + M);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool pattern_ready = false;

    const auto& groups = prob.qn_groups();
    std::vector<QnState> qn(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const int gsz = static_cast<int>(groups[i].idx.size());
        qn[i].B = 1e-8 * Eigen::MatrixXd::Identity(gsz, gsz);
        qn[i].grad.resize(gsz);
    }

    auto eval_fg = [&](const Eigen::VectorXd& Wv, double& f, Eigen::VectorXd& cEv,
                       Eigen::VectorXd& cIv) {
        f = prob.objective(Wv.head(n));
        if (mE > 0) prob.eval_eq(Wv.head(n), cEv);
        if (mI > 0) prob.eval_ineq(Wv.head(n), cIv);
    };

    auto theta_of = [&](const Eigen::VectorXd& cEv, const Eigen::VectorXd& cIv,
                        const Eigen::VectorXd& Wv) {
        double th = 0.0;
        for (int i = 0; i < mE; ++i) th += std::abs(cEv[i]);
        for (int i = 0; i < mI; ++i) th += std::abs(cIv[i] - Wv[n + i]);
        return th;
    };

    auto phi_of = [&](double f, const Eigen::VectorXd& Wv) {
        double phi = f;
        for (int i : lo_idx) phi -= mu * std::log(Wv[i] - lbW[i]);
        for (int i : hi_idx) phi -= mu * std::log(ubW[i] - Wv[i]);
        return phi;
    };

    double f_cur;
    eval_fg(W, f_cur, cE, cI);
    double theta_cur = theta_of(cE, cI, W);
    double phi_cur = phi_of(f_cur, W);

    const double theta0 = std::max(1.0, theta_cur);
    const double theta_min = 1e-4 * theta0;
    const double theta_max = 1e4 * theta0;

    std::vector<FilterEntry> filter;
    filter.push_back({theta_max, -kInf});

    double delta_w_last = 0.0;
    int iter = 0;
    sol.mu_trace.push_back(mu);

    auto finish = [&](SolveStatus st, double kkt) {
        sol.status = st;
        sol.iterations = iter;
        sol.kkt_error = kkt;
        sol.w = W.head(n);
        sol.t = mI > 0 ? Eigen::VectorXd(W.tail(mI)) : Eigen::VectorXd();
        sol.y_eq = mE > 0 ? Eigen::VectorXd(y.head(mE)) : Eigen::VectorXd();
        sol.y_ineq = mI > 0 ? Eigen::VectorXd(y.tail(mI)) : Eigen::VectorXd();
        sol.z_lb = zL.head(n);
        sol.z_ub = zU.head(n);
        sol.objective = prob.objective(W.head(n));
        sol.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
        if (!opts_.diag_csv_path.empty()) {
            std::ofstream out(opts_.diag_csv_path);
            out << "iter,mu,theta,phi,kkt,alpha,reg,ls_steps,objective\n";
            for (const auto& r : sol.iterates)
                out << r.iter << ',' << r.mu << ',' << r.theta << ',' << r.phi << ',' << r.kkt
                    << ',' << r.alpha << ',' << r.reg << ',' << r.ls_steps << ',' << r.objective
                    << '\n';
        }
        return sol;
    };

    for (;;) {
        // ---- derivatives at the current point ----
        prob.gradient(W.head(n), g_w);
        trip_je.clear();
        trip_ji.clear();
        trip_h.clear();
        if (mE > 0) prob.jac_eq(W.head(n), trip_je);
        if (mI > 0) prob.jac_ineq(W.head(n), trip_ji);
        prob.hess(W.head(n), trip_h);

        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            groups[gi].gradient(W.head(n), qn[gi].grad);
            qn[gi].has_grad = true;
        }

        // Dual infeasibility: grad f - J^T y - zL + zU over (w, t).
        Eigen::VectorXd rd = Eigen::VectorXd::Zero(N);
        rd.head(n) = g_w;
        for (const auto& tr : trip_je) rd[tr.col()] -= tr.value() * y[tr.row()];
        for (const auto& tr : trip_ji) rd[tr.col()] -= tr.value() * y[mE + tr.row()];
        for (int i = 0; i < mI; ++i) rd[n + i] += y[mE + i]; // d(cI - t)/dt = -I
        rd -= zL;
        rd += zU;

        // Constraint residual C = [cE; cI - t].
        Eigen::VectorXd C(M);
        if (mE > 0) C.head(mE) = cE;
        for (int i = 0; i < mI; ++i) C[mE + i] = cI[i] - W[n + i];

        // Scaled KKT errors.
        double z_sum = 0.0;
        int z_cnt = 0;
        for (int i : lo_idx) {
            z_sum += std::abs(zL[i]);
            ++z_cnt;
        }
        for (int i : hi_idx) {
            z_sum += std::abs(zU[i]);
            ++z_cnt;
        }
        const double smax = 100.0;
        const double sd =
            std::max(smax, (y.lpNorm<1>() + z_sum) / std::max(1, M + z_cnt)) / smax;
        const double sc = z_cnt > 0 ? std::max(smax, z_sum / z_cnt) / smax : 1.0;

        auto kkt_error = [&](double mu_ref) {
            double e = rd.lpNorm<Eigen::Infinity>() / sd;
            if (M > 0) e = std::max(e, C.lpNorm<Eigen::Infinity>());
            for (int i : lo_idx)
                e = std::max(e, std::abs((W[i] - lbW[i]) * zL[i] - mu_ref) / sc);
            for (int i : hi_idx)
                e = std::max(e, std::abs((ubW[i] - W[i]) * zU[i] - mu_ref) / sc);
            return e;
        };

        const double E0 = kkt_error(0.0);
        if (E0 <= opts_.tol) return finish(SolveStatus::Converged, E0);
        if (iter >= opts_.max_iterations) return finish(SolveStatus::MaxIter, E0);

        // Monotone Fiacco-McCormick update; filter resets with the barrier.
        while (barrier_active && mu > mu_min && kkt_error(mu) <= kKappaEps * mu) {
            mu = std::max(mu_min, mu / 5.0);
            sol.mu_trace.push_back(mu);
            filter.clear();
            filter.push_back({theta_max, -kInf});
            phi_cur = phi_of(f_cur, W);
        }

        // ---- assemble and factor the KKT system, correcting inertia ----
        Eigen::VectorXd sigma = Eigen::VectorXd::Zero(N);
        for (int i : lo_idx) sigma[i] += zL[i] / (W[i] - lbW[i]);
        for (int i : hi_idx) sigma[i] += zU[i] / (ubW[i] - W[i]);

        // Barrier-gradient right-hand side.
        Eigen::VectorXd rd_mu = Eigen::VectorXd::Zero(N);
        rd_mu.head(n) = g_w;
        for (const auto& tr : trip_je) rd_mu[tr.col()] -= tr.value() * y[tr.row()];
        for (const auto& tr : trip_ji) rd_mu[tr.col()] -= tr.value() * y[mE + tr.row()];
        for (int i = 0; i < mI; ++i) rd_mu[n + i] += y[mE + i];
        for (int i : lo_idx) rd_mu[i] -= mu / (W[i] - lbW[i]);
        for (int i : hi_idx) rd_mu[i] += mu / (ubW[i] - W[i]);

        const double delta_c = 1e-8;
        double delta_w = delta_w_last > 0.0 ? std::max(opts_.reg_floor, delta_w_last / 3.0) : 0.0;
        bool first_attempt_zero = (delta_w_last == 0.0);

        Eigen::VectorXd step(N + M);
        bool factored = false;
        for (int attempt = 0; attempt < 40 && !factored; ++attempt) {
            std::vector<SpTriplet> trip;
            trip.reserve(trip_h.size() * 2 + trip_je.size() * 2 + trip_ji.size() * 2 + 2 * N +
                         2 * M + mI * 2);
            for (const auto& tr : trip_h) {
                trip.emplace_back(tr.row(), tr.col(), tr.value());
                if (tr.row() != tr.col()) trip.emplace_back(tr.col(), tr.row(), tr.value());
            }
            for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                const auto& idx = groups[gi].idx;
                const auto& B = qn[gi].B;
                for (std::size_t a = 0; a < idx.size(); ++a)
                    for (std::size_t b = 0; b < idx.size(); ++b)
                        if (B(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) != 0.0)
                            trip.emplace_back(idx[a], idx[b],
                                              B(static_cast<Eigen::Index>(a),
                                                static_cast<Eigen::Index>(b)));
            }
            for (int i = 0; i < N; ++i) trip.emplace_back(i, i, sigma[i] + delta_w);
            for (const auto& tr : trip_je) {
                trip.emplace_back(tr.row() + N, tr.col(), tr.value());
                trip.emplace_back(tr.col(), tr.row() + N, tr.value());
            }
            for (const auto& tr : trip_ji) {
                trip.emplace_back(N + mE + tr.row(), tr.col(), tr.value());
                trip.emplace_back(tr.col(), N + mE + tr.row(), tr.value());
            }
            for (int i = 0; i < mI; ++i) {
                trip.emplace_back(N + mE + i, n + i, -1.0);
                trip.emplace_back(n + i, N + mE + i, -1.0);
            }
            for (int i = 0; i < M; ++i) trip.emplace_back(N + i, N + i, -delta_c);

            K.setFromTriplets(trip.begin(), trip.end());
            if (!pattern_ready) {
                ldlt.analyzePattern(K);
                pattern_ready = true;
            }
            ldlt.factorize(K);

            bool ok = (ldlt.info() == Eigen::Success);
            if (ok) {
                const auto& D = ldlt.vectorD();
                int pos = 0, neg = 0, zero = 0;
                for (Eigen::Index i = 0; i < D.size(); ++i) {
                    if (D[i] > 0)
                        ++pos;
                    else if (D[i] < 0)
                        ++neg;
                    else
                        ++zero;
                }
                ok = (pos == N && neg == M && zero == 0);
            }
            if (ok) {
                Eigen::VectorXd rhs(N + M);
                rhs.head(N) = -rd_mu;
                rhs.tail(M) = -C;
                step = ldlt.solve(rhs);
                ok = step.allFinite();
            }
            if (ok) {
                factored = true;
                delta_w_last = delta_w;
            } else {
                if (first_attempt_zero && delta_w == 0.0) {
                    delta_w = opts_.reg_floor;
                    first_attempt_zero = false;
                } else {
                    delta_w = std::max(opts_.reg_floor, delta_w * opts_.reg_escalation);
                }
            }
        }
        if (!factored) return finish(SolveStatus::Diverged, E0);

        Eigen::VectorXd dW = step.head(N);
        Eigen::VectorXd dy = -step.tail(M);

        // Bound-dual steps from linearized complementarity.
        Eigen::VectorXd dzL = Eigen::VectorXd::Zero(N), dzU = Eigen::VectorXd::Zero(N);
        for (int i : lo_idx) dzL[i] = (mu - zL[i] * dW[i]) / (W[i] - lbW[i]) - zL[i];
        for (int i : hi_idx) dzU[i] = (mu + zU[i] * dW[i]) / (ubW[i] - W[i]) - zU[i];

        // Fraction-to-boundary step limits.
        const double tau = std::max(0.99, 1.0 - mu);
        double a_pr = 1.0, a_du = 1.0;
        for (int i : lo_idx) {
            if (dW[i] < 0.0) a_pr = std::min(a_pr, -tau * (W[i] - lbW[i]) / dW[i]);
            if (dzL[i] < 0.0) a_du = std::min(a_du, -tau * zL[i] / dzL[i]);
        }
        for (int i : hi_idx) {
            if (dW[i] > 0.0) a_pr = std::min(a_pr, tau * (ubW[i] - W[i]) / dW[i]);
            if (dzU[i] < 0.0) a_du = std::min(a_du, -tau * zU[i] / dzU[i]);
        }

        // Directional derivative of the barrier objective.
        double dphi = g_w.dot(dW.head(n));
        for (int i : lo_idx) dphi -= mu * dW[i] / (W[i] - lbW[i]);
        for (int i : hi_idx) dphi += mu * dW[i] / (ubW[i] - W[i]);

        // ---- filter backtracking ----
        double alpha = a_pr;
        int ls_steps = 0;
        bool accepted = false;
        Eigen::VectorXd W_trial(N), cE_t(std::max(mE, 1)), cI_t(std::max(mI, 1));
        double f_t = 0.0, theta_t = 0.0, phi_t = 0.0;
        while (alpha >= 1e-12) {
            ++ls_steps;
            W_trial = W + alpha * dW;
            bool finite = true;
            double f_try = 0.0;
            try {
                eval_fg(W_trial, f_try, cE_t, cI_t);
                finite = std::isfinite(f_try) && (mE == 0 || cE_t.allFinite()) &&
                         (mI == 0 || cI_t.allFinite());
            } catch (const std::exception&) {
                finite = false;
            }
            if (finite) {
                theta_t = theta_of(cE_t, cI_t, W_trial);
                phi_t = phi_of(f_try, W_trial);
                bool filter_ok = theta_t < theta_max;
                for (const auto& fe : filter) {
                    if (!(theta_t <= (1.0 - kGammaTheta) * fe.theta ||
                          phi_t <= fe.phi - kGammaPhi * fe.theta)) {
                        filter_ok = false;
                        break;
                    }
                }
                if (filter_ok) {
                    const bool switching =
                        dphi < 0.0 && alpha * std::pow(-dphi, kSPhi) >
                                          kDeltaSwitch * std::pow(theta_cur, kSTheta);
                    if (theta_cur <= theta_min && switching) {
                        if (phi_t <= phi_cur + kEtaArmijo * alpha * dphi) {
                            accepted = true;
                            f_t = f_try;
                        }
                    } else if (theta_t <= (1.0 - kGammaTheta) * theta_cur ||
                               phi_t <= phi_cur - kGammaPhi * theta_cur) {
                        accepted = true;
                        f_t = f_try;
                        // h-type step: augment the filter
                        filter.push_back({(1.0 - kGammaTheta) * theta_cur,
                                          phi_cur - kGammaPhi * theta_cur});
                    }
                }
            }
            if (accepted) break;
            alpha *= 0.5;
        }
        if (!accepted) {
            // One escalated-regularization retry; if the model is that poor,
            // report divergence and let the caller engage its fallback.
            if (delta_w_last < 1e6) {
                delta_w_last = std::max(opts_.reg_floor, delta_w_last * 100.0);
                ++iter;
                if (iter >= opts_.max_iterations) return finish(SolveStatus::MaxIter, E0);
                continue;
            }
            return finish(SolveStatus::Diverged, E0);
        }

        // ---- accept ----
        W = W_trial;
        f_cur = f_t;
        cE = cE_t;
        cI = cI_t;
        theta_cur = theta_t;
        phi_cur = phi_t;
        y += alpha * dy;
        zL += a_du * dzL;
        zU += a_du * dzU;
        // Keep bound duals within a kappa_sigma neighborhood of mu/(gap).
        for (int i : lo_idx) {
            const double ref = mu / (W[i] - lbW[i]);
            zL[i] = std::clamp(zL[i], ref / kKappaSigma, ref * kKappaSigma);
        }
        for (int i : hi_idx) {
            const double ref = mu / (ubW[i] - W[i]);
            zU[i] = std::clamp(zU[i], ref / kKappaSigma, ref * kKappaSigma);
        }

        // Damped BFGS update of the quasi-Newton groups.
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& idx = groups[gi].idx;
            const int gsz = static_cast<int>(idx.size());
            Eigen::VectorXd s(gsz);
            for (int a = 0; a < gsz; ++a) s[a] = alpha * dW[idx[static_cast<std::size_t>(a)]];
            if (s.lpNorm<Eigen::Infinity>() < 1e-14) continue;
            Eigen::VectorXd grad_new(gsz);
            groups[gi].gradient(W.head(n), grad_new);
            Eigen::VectorXd yv = grad_new - qn[gi].grad;
            Eigen::MatrixXd& B = qn[gi].B;
            const Eigen::VectorXd Bs = B * s;
            const double sBs = s.dot(Bs);
            double sy = s.dot(yv);
            if (sy < 0.2 * sBs) {
                const double th = 0.8 * sBs / (sBs - sy);
                yv = th * yv + (1.0 - th) * Bs;
                sy = s.dot(yv);
            }
            if (sy > 1e-12 && sBs > 1e-16)
                B += (yv * yv.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
            qn[gi].grad = grad_new;
        }

        ++iter;
        if (opts_.record_iterates || opts_.verbosity > 0 || !opts_.diag_csv_path.empty()) {
            IterRecord r{iter, mu, theta_cur, phi_cur, E0, alpha, delta_w_last, ls_steps, f_cur};
            sol.iterates.push_back(r);
            if (opts_.verbosity > 1)
                std::fprintf(stderr, "[nlp] it=%d mu=%.2e theta=%.2e phi=%.6e kkt=%.2e a=%.2e\n",
                             iter, mu, theta_cur, phi_cur, E0, alpha);
        }
    }
}

Guess shift_warm_start(const Solution& prev, const ShiftLayout& layout)
{
    auto shift_vec = [](Eigen::VectorXd& v, const ShiftLayout::Block& b, const char* what) {
        if (b.offset + b.size * b.stages > v.size())
            throw DimensionMismatchError(std::string("shift_warm_start: ") + what +
                                         " block exceeds vector size");
        for (int k = 0; k + 1 < b.stages; ++k)
            v.segment(b.offset + k * b.size, b.size) =
                v.segment(b.offset + (k + 1) * b.size, b.size);
        // tail policy "hold": final stage keeps the previous last stage
    };

    Guess g;
    g.w = prev.w;
    g.t = prev.t;
    g.y_eq = prev.y_eq;
    g.y_ineq = prev.y_ineq;
    g.z_lb = prev.z_lb;
    g.z_ub = prev.z_ub;
    for (const auto& b : layout.primal_blocks) {
        shift_vec(g.w, b, "primal");
        if (g.z_lb.size() == g.w.size()) shift_vec(g.z_lb, b, "z_lb");
        if (g.z_ub.size() == g.w.size()) shift_vec(g.z_ub, b, "z_ub");
    }
    for (const auto& b : layout.eq_blocks) shift_vec(g.y_eq, b, "eq dual");
    for (const auto& b : layout.ineq_blocks) {
        shift_vec(g.y_ineq, b, "ineq dual");
        if (g.t.size() == g.y_ineq.size()) shift_vec(g.t, b, "slack");
    }
    return g;
}

} // namespace tem::nlp
