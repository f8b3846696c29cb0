#pragma once

#include <vector>

#include "ggame/graphon.hpp"
#include "ggame/model.hpp"

namespace fixtures {

using namespace ggame;

struct BlockCase {
    GameModel model;
    Graphon graphon;
    std::vector<std::vector<double>> p0;
    double horizon;
};

inline PlayerParams sir_player(double beta, double gamma, double rho, double lambda_s,
                               double lambda_i) {
    PlayerParams p;
    p.beta = beta;
    p.gamma = gamma;
    p.rho = rho;
    p.c_infected = 1.0;
    p.c_dead = 1.0;
    p.c_lambda = 10.0;
    p.recommended = {{"S", PiecewiseConstant::constant(lambda_s)},
                     {"I", PiecewiseConstant::constant(lambda_i)},
                     {"R", PiecewiseConstant::constant(1.0)}};
    return p;
}

/// Four age groups (0-20, 20-45, 45-65, 65+) under policies 1..4.
inline BlockCase age_groups(int policy) {
    const double beta[] = {0.4, 0.3, 0.3, 0.3};
    const double gamma[] = {0.1, 0.1, 0.05, 0.05};
    const double rho[] = {1.0, 1.0, 0.9, 0.75};
    const double s0[] = {0.95, 0.97, 0.97, 0.97};
    const double ls[4][4] = {{1, 1, 1, 1}, {1, 1, 1, 1}, {0.5, 1, 1, 0.5}, {0.5, 0.5, 0.5, 0.5}};
    const double li[4] = {1.0, 0.5, 0.5, 0.5};
    std::vector<PlayerParams> groups;
    std::vector<std::vector<double>> p0;
    for (int i = 0; i < 4; ++i) {
        groups.push_back(sir_player(beta[i], gamma[i], rho[i], ls[policy - 1][i], li[policy - 1]));
        p0.push_back({s0[i], 1.0 - s0[i], 0.0, 0.0});
    }
    const std::vector<double> masses{0.27, 0.33, 0.27, 0.13};
    const auto w = SquareMatrix::from_rows(
        {{1.0, 0.9, 0.8, 0.7}, {0.9, 0.9, 0.8, 0.8}, {0.8, 0.8, 0.9, 0.8}, {0.7, 0.8, 0.8, 0.8}});
    return {GameModel::sir(groups, masses), Graphon::block(w, masses), p0, 200.0};
}

/// Three cities; `locked` is 0 for no lockdown or the city (1..3) in lockdown.
inline BlockCase cities(int locked) {
    static const double weights[4][3][3] = {
        {{1, 0.9, 0.8}, {0.9, 1, 0.7}, {0.8, 0.7, 1}},
        {{0.3, 0.3, 0.3}, {0.3, 1, 0.7}, {0.3, 0.7, 1}},
        {{1, 0.3, 0.8}, {0.3, 0.3, 0.3}, {0.8, 0.3, 1}},
        {{1, 0.9, 0.3}, {0.9, 1, 0.3}, {0.3, 0.3, 0.3}},
    };
    const double beta[] = {0.4, 0.4, 0.3};
    std::vector<PlayerParams> groups;
    std::vector<std::vector<double>> p0;
    SquareMatrix w(3);
    for (std::size_t i = 0; i < 3; ++i) {
        groups.push_back(sir_player(beta[i], 0.1, 1.0, 1.0, 0.9));
        p0.push_back({0.95, 0.05, 0.0, 0.0});
        for (std::size_t j = 0; j < 3; ++j) w(i, j) = weights[locked][i][j];
    }
    const std::vector<double> masses{0.4, 0.2, 0.4};
    return {GameModel::sir(groups, masses), Graphon::block(w, masses), p0, 40.0};
}

}  // namespace fixtures
