#pragma once

#include "linsa/ensembles.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace linsa {

/// State norm guard: a trajectory whose sup-norm exceeds this is reported as
/// diverged. Kept below the double overflow point so the offending step index
/// is identifiable before infinities appear.
inline constexpr double kDivergenceGuard = 1e300;

/// Gain sequence a(s). PowerLaw with sign +1 satisfies the non-negative
/// summability conditions (sum a = inf, sum a^2 < inf, needs gamma > 1/2);
/// sign -1 is the non-positive mirror.
struct GainSchedule {
    enum class Kind { PowerLaw, Harmonic, Custom };

    Kind kind = Kind::Harmonic;
    int sign = +1;       // PowerLaw only
    double alpha = 1.0;  // PowerLaw: a(s) = sign * alpha / (s + beta)^gamma
    double beta = 1.0;
    double gamma = 1.0;
    std::vector<double> values; // Custom

    static GainSchedule power_law(int sign, double alpha, double beta, double gamma);
    static GainSchedule harmonic(); // a(s) = 1/(s+1); a(0) = 1 replaces the state
    static GainSchedule custom(std::vector<double> values);

    double at(long s) const;
    bool non_negative() const;
    void validate() const;
};

/// Thinned record of x(0..S): states at `steps` (always includes 0 and the
/// final step reached). If the divergence guard tripped, `diverged_at` holds
/// the first offending step and recording stops there.
struct Trajectory {
    std::vector<long> steps;
    std::vector<Eigen::VectorXd> states;
    std::optional<long> diverged_at;
};

struct MatrixTrajectory {
    std::vector<long> steps;
    std::vector<Eigen::MatrixXd> states;
    std::optional<long> diverged_at;
};

/// One update x -> (1-a) x + a (P_s x + u_s), exactly in that form.
Eigen::VectorXd step(const Eigen::VectorXd& x, double a, const Eigen::MatrixXd& P_s,
                     const Eigen::VectorXd& u_s);

/// Run the recursion for S steps, recording every `record_every` steps plus
/// the final state. Deterministic given (ensemble.seed, trial).
Trajectory run(const Eigen::VectorXd& x0, const GainSchedule& schedule,
               const MatrixEnsemble& ensemble, long S, long record_every = 1,
               long trial = 0);

/// Per-step draw for a matrix-state system: fills A (n x n), C (m x m) and
/// U (n x m) for the update X -> (1-a) X + a (A X C^T + U).
using MatrixDrawFn =
    std::function<void(long step, long trial, Eigen::MatrixXd& A, Eigen::MatrixXd& C,
                       Eigen::MatrixXd& U)>;

MatrixTrajectory run_matrix_with(const Eigen::MatrixXd& X0, const GainSchedule& schedule,
                                 const MatrixDrawFn& draw_step, long S,
                                 long record_every = 1, long trial = 0);

/// Matrix-state recursion X(s+1) = (1-a) X(s) + a [P(s) X(s) C(s)^T + U(s)]
/// with independent i.i.d. entrywise ensembles for P, C and U sharing `seed`.
MatrixTrajectory run_matrix(const Eigen::MatrixXd& X0, const GainSchedule& schedule,
                            const MatrixSequence& P_seq, const MatrixSequence& C_seq,
                            const MatrixSequence& U_seq, std::uint64_t seed, long S,
                            long record_every = 1, long trial = 0);

} // namespace linsa
