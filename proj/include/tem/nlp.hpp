#pragma once

#include "tem/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <string>
#include <vector>

namespace tem::nlp {

using SpTriplet = Eigen::Triplet<double>;

struct SolverOptions {
    int max_iterations = 100;
    double tol = 1e-6;       // KKT tolerance on scaled residuals
    double mu_init = 0.1;    // initial barrier parameter (cold start)
    double mu_init_warm = 1e-3;
    double reg_floor = 1e-8; // inertia-correction regularization floor
    double reg_escalation = 10.0;
    bool warm_start = false;
    bool record_iterates = false;
    int verbosity = 0;
    std::string diag_csv_path; // per-iteration residual stream when non-empty
};

enum class SolveStatus { Converged, MaxIter, Diverged };

// A scalar objective term whose curvature is not captured by the constant
// Hessian model; the solver maintains a damped BFGS block over its variables.
struct QnGroup {
    std::vector<int> idx;
    std::function<void(const Eigen::VectorXd& w, Eigen::VectorXd& grad)> gradient;
};

// General sparse NLP:
//   min f(w)  s.t.  c_E(w) = 0,  c_I(w) >= 0,  lb <= w <= ub.
// Jacobians and the Hessian model are returned as triplet lists with a
// fixed sparsity pattern across evaluations.
class Problem {
public:
    virtual ~Problem() = default;
    virtual int num_vars() const = 0;
    virtual int num_eq() const = 0;
    virtual int num_ineq() const = 0;
    virtual const Eigen::VectorXd& lb() const = 0;
    virtual const Eigen::VectorXd& ub() const = 0;

    virtual double objective(const Eigen::VectorXd& w) const = 0;
    virtual void gradient(const Eigen::VectorXd& w, Eigen::VectorXd& g) const = 0;
    virtual void eval_eq(const Eigen::VectorXd& w, Eigen::VectorXd& c) const = 0;
    virtual void eval_ineq(const Eigen::VectorXd& w, Eigen::VectorXd& c) const = 0;
    virtual void jac_eq(const Eigen::VectorXd& w, std::vector<SpTriplet>& out) const = 0;
    virtual void jac_ineq(const Eigen::VectorXd& w, std::vector<SpTriplet>& out) const = 0;
    // Hessian model of the objective (Gauss-Newton convention: constraint
    // curvature omitted); lower triangle only.
    virtual void hess(const Eigen::VectorXd& w, std::vector<SpTriplet>& out) const = 0;
    virtual const std::vector<QnGroup>& qn_groups() const
    {
        static const std::vector<QnGroup> none;
        return none;
    }
};

struct IterRecord {
    int iter;
    double mu, theta, phi, kkt, alpha, reg;
    int ls_steps;
    double objective;
};

struct Solution {
    Eigen::VectorXd w;       // primal variables
    Eigen::VectorXd t;       // internal slacks of the general inequalities
    Eigen::VectorXd y_eq;    // equality duals
    Eigen::VectorXd y_ineq;  // inequality duals
    Eigen::VectorXd z_lb, z_ub; // bound duals
    double objective = 0.0;
    double kkt_error = 0.0;
    SolveStatus status = SolveStatus::Diverged;
    int iterations = 0;
    double wall_ms = 0.0;
    std::vector<IterRecord> iterates;
    std::vector<double> mu_trace;
};

// Primal/dual initial guess; empty vectors select the default initialization.
struct Guess {
    Eigen::VectorXd w;
    Eigen::VectorXd t;
    Eigen::VectorXd y_eq, y_ineq, z_lb, z_ub;
};

// Primal-dual interior-point method with filter line search, monotone
// Fiacco-McCormick barrier updates, and inertia-corrected sparse symmetric
// indefinite KKT factorizations. A solver instance owns its workspace and is
// single-threaded; distinct instances may run concurrently.
class Solver {
public:
    explicit Solver(SolverOptions opts = {}) : opts_(opts) {}

    Solution solve(const Problem& problem, const Guess& init);

    const SolverOptions& options() const { return opts_; }
    SolverOptions& options() { return opts_; }

private:
    SolverOptions opts_;
};

// Stage-block description used to time-shift a previous solution into a warm
// start (tail policy: duplicate the last stage).
struct ShiftLayout {
    struct Block {
        int offset; // first element of stage 0
        int size;   // elements per stage
        int stages; // number of stages
    };
    std::vector<Block> primal_blocks;
    std::vector<Block> eq_blocks;
    std::vector<Block> ineq_blocks;
};

// Shift every stage-indexed block of `prev` one stage forward. Throws
// DimensionMismatchError when the layout does not match the solution.
Guess shift_warm_start(const Solution& prev, const ShiftLayout& layout);

} // namespace tem::nlp
