#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mvpshap/dataset.hpp"

namespace mvpshap {

/// Synthetic league with planted player skills. The first signal_stats stats
/// drive outcomes; the rest are pure noise, which gives the subset search a
/// known answer. The first count_stats stats are rounded to non-negative
/// integers after noise.
struct LeagueConfig {
    int teams = 4;
    int players_per_team = 2;
    int stats = 3;
    int games = 600;
    double skill_scale = 1.0;
    double noise_scale = 1.0;
    std::uint64_t seed = 1;
    int signal_stats = 2;
    int count_stats = 0;
};

struct LatentSkill {
    std::string player_id;
    std::vector<double> skill;
    double true_value = 0.0;  // sum of the signal-stat skills
};

struct League {
    std::vector<GameRecord> games;
    std::vector<LatentSkill> skills;
    StatSchema schema;
};

/// Per game: observed stats are skill plus Gaussian noise; the outcome is a
/// latent noisy comparison of team skill totals, so noise_scale = 0 makes
/// outcomes a deterministic function of the rosters and noise_scale = 1
/// recovers Bernoulli(logistic(skill margin)).
League generate_league(const LeagueConfig& config);

void write_box_score_csv(std::ostream& out, const std::vector<GameRecord>& games,
                         const StatSchema& schema);
void write_skills_csv(std::ostream& out, const std::vector<LatentSkill>& skills);

/// Deviation bound for T bounded draws: M * sqrt(2 ln(2/delta) / T).
double hoeffding_epsilon(double M, int T, double delta);

/// Games needed to separate two players whose expected contributions differ
/// by gap, with failure probability delta: ceil(8 M^2 ln(4/delta) / gap^2).
long long required_games(double M, double gap, double delta);

/// A bounded draw with a known mean, for Monte-Carlo checks of the bound.
struct BoundedSampler {
    std::function<double(std::mt19937_64&)> draw;
    double mean = 0.0;
};

/// Fraction of trials where the empirical mean of T draws misses the true
/// mean by more than hoeffding_epsilon. Must stay at or below delta.
double concentration_trial(const BoundedSampler& sampler, double M, int T, double delta, int trials,
                           std::uint64_t seed);

}  // namespace mvpshap
