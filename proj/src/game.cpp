#include "mergegame/game.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace mergegame {

namespace {

constexpr double kEquilibriumTol = 1e-9;   // max tolerated unilateral gain
constexpr double kResidualTol = 1e-9;      // linear-system residual gate
constexpr double kTieTol = 1e-12;          // equilibrium-selection comparisons

using Support = std::vector<int>;

// Nonempty subsets of {0..n-1} as sorted index lists in lexicographic order,
// so the selection tie-break "first found" means "smallest support".
std::vector<Support> lex_supports(int n) {
    std::vector<Support> out;
    for (int mask = 1; mask < (1 << n); ++mask) {
        Support s;
        for (int i = 0; i < n; ++i) {
            if (mask & (1 << i)) s.push_back(i);
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct Candidate {
    MixedProfile profile;
    double row_value = 0.0;
    double col_value = 0.0;
    double violation = 0.0;  // best unilateral deviation gain
};

double row_payoff(const PayoffMatrix& g, const MaDistribution& x, const LagDistribution& y) {
    double v = 0.0;
    for (int i = 0; i < kNumMaActions; ++i)
        for (int j = 0; j < kNumLagActions; ++j) v += x[i] * g.p[i][j] * y[j];
    return v;
}

double col_payoff(const PayoffMatrix& g, const MaDistribution& x, const LagDistribution& y) {
    double v = 0.0;
    for (int i = 0; i < kNumMaActions; ++i)
        for (int j = 0; j < kNumLagActions; ++j) v += x[i] * g.q[i][j] * y[j];
    return v;
}

// Largest payoff either player can gain by a unilateral pure deviation.
double deviation_gain(const PayoffMatrix& g, const MaDistribution& x, const LagDistribution& y) {
    const double vr = row_payoff(g, x, y);
    const double vc = col_payoff(g, x, y);
    double gain = 0.0;
    for (int i = 0; i < kNumMaActions; ++i) {
        double u = 0.0;
        for (int j = 0; j < kNumLagActions; ++j) u += g.p[i][j] * y[j];
        gain = std::max(gain, u - vr);
    }
    for (int j = 0; j < kNumLagActions; ++j) {
        double u = 0.0;
        for (int i = 0; i < kNumMaActions; ++i) u += g.q[i][j] * x[i];
        gain = std::max(gain, u - vc);
    }
    return gain;
}

// The common degenerate shape: lag payoffs independent of the merger's row
// and merger payoffs independent of the lag's column. Equilibrium reduces to
// independent argmaxes; first index wins ties (smallest support).
bool own_action_separable(const PayoffMatrix& g) {
    for (int j = 0; j < kNumLagActions; ++j) {
        if (g.q[0][j] != g.q[1][j]) return false;
    }
    for (int i = 0; i < kNumMaActions; ++i) {
        for (int j = 1; j < kNumLagActions; ++j) {
            if (g.p[i][j] != g.p[i][0]) return false;
        }
    }
    return true;
}

MixedProfile pure_profile(int row, int col) {
    MixedProfile p;
    p.row_mix[row] = 1.0;
    p.col_mix[col] = 1.0;
    return p;
}

// Indifference system for one support pair. Unknowns are the supported row
// probabilities, supported column probabilities, and the two equilibrium
// values. Returns nullopt for singular or inconsistent systems.
std::optional<Candidate> solve_support(const PayoffMatrix& g, const Support& rows,
                                       const Support& cols) {
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(cols.size());
    const int dim = m + n + 2;
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

    // Supported rows indifferent at value vr: sum_j p(i,j) y_j - vr = 0.
    for (int r = 0; r < m; ++r) {
        for (int cidx = 0; cidx < n; ++cidx) mat(r, m + cidx) = g.p[rows[r]][cols[cidx]];
        mat(r, m + n) = -1.0;
    }
    // Supported columns indifferent at value vc: sum_i q(i,j) x_i - vc = 0.
    for (int cidx = 0; cidx < n; ++cidx) {
        for (int r = 0; r < m; ++r) mat(m + cidx, r) = g.q[rows[r]][cols[cidx]];
        mat(m + cidx, m + n + 1) = -1.0;
    }
    for (int r = 0; r < m; ++r) mat(m + n, r) = 1.0;
    rhs(m + n) = 1.0;
    for (int cidx = 0; cidx < n; ++cidx) mat(m + n + 1, m + cidx) = 1.0;
    rhs(m + n + 1) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd z = lu.solve(rhs);
    if ((mat * z - rhs).lpNorm<Eigen::Infinity>() > kResidualTol) return std::nullopt;

    Candidate cand;
    for (int r = 0; r < m; ++r) {
        if (z(r) < -kEquilibriumTol) return std::nullopt;
        cand.profile.row_mix[rows[r]] = std::max(z(r), 0.0);
    }
    for (int cidx = 0; cidx < n; ++cidx) {
        if (z(m + cidx) < -kEquilibriumTol) return std::nullopt;
        cand.profile.col_mix[cols[cidx]] = std::max(z(m + cidx), 0.0);
    }
    auto renormalize = [](auto& mix) {
        double sum = 0.0;
        for (double p : mix) sum += p;
        for (double& p : mix) p /= sum;
    };
    renormalize(cand.profile.row_mix);
    renormalize(cand.profile.col_mix);

    cand.row_value = row_payoff(g, cand.profile.row_mix, cand.profile.col_mix);
    cand.col_value = col_payoff(g, cand.profile.row_mix, cand.profile.col_mix);
    cand.violation = deviation_gain(g, cand.profile.row_mix, cand.profile.col_mix);
    return cand;
}

}  // namespace

MixedProfile nash_mixed(const PayoffMatrix& game) {
    if (own_action_separable(game)) {
        int best_row = 0;
        for (int i = 1; i < kNumMaActions; ++i) {
            if (game.p[i][0] > game.p[best_row][0]) best_row = i;
        }
        int best_col = 0;
        for (int j = 1; j < kNumLagActions; ++j) {
            if (game.q[0][j] > game.q[0][best_col]) best_col = j;
        }
        return pure_profile(best_row, best_col);
    }

    static const std::vector<Support> row_supports = lex_supports(kNumMaActions);
    static const std::vector<Support> col_supports = lex_supports(kNumLagActions);

    std::optional<Candidate> best;          // best valid equilibrium
    std::optional<Candidate> best_approx;   // smallest violation seen overall
    for (const Support& rows : row_supports) {
        for (const Support& cols : col_supports) {
            const auto cand = solve_support(game, rows, cols);
            if (!cand) continue;
            if (!best_approx || cand->violation < best_approx->violation) best_approx = cand;
            if (cand->violation > kEquilibriumTol) continue;
            if (!best || cand->col_value > best->col_value + kTieTol ||
                (std::abs(cand->col_value - best->col_value) <= kTieTol &&
                 cand->row_value > best->row_value + kTieTol)) {
                best = cand;
            }
        }
    }
    if (best) return best->profile;
    if (best_approx) return best_approx->profile;

    // Unreachable in practice (pure supports always solve), kept as the
    // documented fallback: independent argmax profile.
    int best_row = game.p[0][0] >= game.p[1][0] ? 0 : 1;
    int best_col = 0;
    for (int j = 1; j < kNumLagActions; ++j) {
        if (game.q[best_row][j] > game.q[best_row][best_col]) best_col = j;
    }
    return pure_profile(best_row, best_col);
}

LagDistribution expected_lag_payoffs(const PayoffMatrix& game, const MaDistribution& row_mix) {
    LagDistribution out{};
    for (int j = 0; j < kNumLagActions; ++j) {
        double e = 0.0;
        for (int i = 0; i < kNumMaActions; ++i) e += row_mix[i] * game.q[i][j];
        out[j] = e;
    }
    return out;
}

LagDistribution qre_update(const LagDistribution& expected, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const double top = *std::max_element(expected.begin(), expected.end());
    LagDistribution out{};
    double sum = 0.0;
    for (int j = 0; j < kNumLagActions; ++j) {
        out[j] = std::exp((expected[j] - top) / beta);
        sum += out[j];
    }
    for (double& p : out) p /= sum;
    return out;
}

double decision_window(const ModelParams& params, RandomStream& rng) {
    if (params.sigma == 0.0) return params.t_window;
    return std::max(0.0, params.t_window + normal_sample(rng, 0.0, params.sigma));
}

Decision decide(const WorldState& world, const ModelParams& params,
                const std::optional<Decision>& prev, RandomStream& rng, ConditioningMode mode) {
    if (prev && world.t < prev->hold_until) return *prev;

    const PayoffMatrix game = payoff_matrix(world, params, mode);
    const MixedProfile eq = nash_mixed(game);
    const LagDistribution expected = expected_lag_payoffs(game, eq.row_mix);
    const LagDistribution probs = qre_update(expected, params.beta);

    Decision d;
    d.lag_probs = probs;
    d.lag_action = static_cast<LagAction>(sample_index(rng, probs));
    d.ma_action = static_cast<MaAction>(sample_index(rng, eq.row_mix));
    d.hold_until = world.t + decision_window(params, rng);
    return d;
}

}  // namespace mergegame
