#pragma once

#include "tem/csv.hpp"
#include "tem/model.hpp"

#include <string>
#include <vector>

namespace tem::ident {

// One identification window over a reference trajectory (Eq. 34).
struct IdentWindow {
    double t_begin = 0, t_end = 0;
    std::vector<double> t;
    std::vector<StateVector> x_ref;
    std::vector<ControlInput> u;
    std::vector<DisturbanceFrame> d;
    std::vector<ModeFlags> v;
    StateVector g_weights{}; // diagonal G

    void validate() const;
    double mean_T_amb() const;
    double mean_I_b() const;
    StateVector mean_state() const;
};

struct GammaAnchor {
    double T_amb = 0;
    StateVector x_mean{};
    double I_b = 0;
    GammaVector gamma;
    int window_id = -1;
    double residual = 0;
};

// Scheduled parameter map (Eq. 35): anchors at representative operating
// conditions, queried by inverse-distance interpolation.
struct GammaMap {
    std::vector<GammaAnchor> anchors;

    // Inverse-distance-weighted interpolation over the anchors; exact at an
    // anchor, the arithmetic mean between two equidistant anchors. Throws
    // EmptyMapError when no anchors exist.
    GammaVector query(double T_amb, const StateVector& x, double I_b) const;

    void save(const std::string& path) const;
    static GammaMap load(const std::string& path);
    static GammaMap identity(); // single gamma = 1 anchor
};

struct FitResult {
    GammaVector gamma;
    double residual = 0;       // weighted squared prediction error integral
    double residual_init = 0;  // same at the initial guess
    int iterations = 0;
};

// Windowed bound-constrained nonlinear least squares via single shooting
// with forward tangent sensitivities (Eqs. 34a-34c). Deterministic; the fit
// never returns a residual above the initial guess's.
FitResult fit_window(const Model& com, const IdentWindow& w, const GammaVector& gamma_init,
                     double lo = GammaVector::kLower, double hi = GammaVector::kUpper);

GammaMap build_map(const std::vector<IdentWindow>& windows, const std::vector<FitResult>& fits);

// Default G: inverse squared physical scales (temperatures 1/50^2, pressures
// 1/1e5^2, SOC 1).
StateVector default_g_weights();

// Slice a recorded timeseries into overlapping windows.
std::vector<IdentWindow> extract_windows(const csv::Table& timeseries, double window_s = 300.0,
                                         double overlap_s = 150.0);

// Fit all windows (parallel across windows, merged by index) and build the map.
GammaMap identify(const Model& com, const std::vector<IdentWindow>& windows,
                  const GammaVector& gamma_init, std::vector<FitResult>* fits_out = nullptr);

// Open-loop rollout of the COM over a recorded trajectory with scheduled
// gamma; returns predicted states at the recorded sample times.
std::vector<StateVector> open_loop_rollout(const Model& com, const csv::Table& timeseries,
                                           const GammaMap& map);

struct ErrorStats {
    double rmse[kNx];
    double mae[kNx];
};

ErrorStats prediction_errors(const csv::Table& timeseries,
                             const std::vector<StateVector>& predicted);

// Shared timeseries column handling (also used by the harness writer).
std::vector<std::string> timeseries_state_columns();
StateVector read_state_row(const csv::Table& t, std::size_t row);
ControlInput read_input_row(const csv::Table& t, std::size_t row);
DisturbanceFrame read_disturbance_row(const csv::Table& t, std::size_t row);
ModeFlags read_modes_row(const csv::Table& t, std::size_t row);

} // namespace tem::ident
