#pragma once

#include <cmath>

#include "dnes/game.hpp"

namespace fixtures {

using dnes::Matrixd;
using dnes::Vectord;

inline Matrixd mat2(double a, double b, double c, double d) {
  Matrixd m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vectord vec(std::initializer_list<double> v) {
  Vectord out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Bertrand duopoly, demand 100, preference 0.2, marginal costs 30; costs are negative profits.
inline dnes::QuadraticGamed duopoly() {
  return {{mat2(10, -5, -5, 0), mat2(0, -5, -5, 10)}, {vec({-250, 150}), vec({150, -150})}, {3000, 0}};
}

// Parallel reaction-curve normals for player 1.
inline dnes::QuadraticGamed translation_game() {
  return {{mat2(3, 1, 1, 1.0 / 3), mat2(1, 2, 2, 4)}, {vec({7, 4.0 / 3}), vec({3, 6})}, {0, 0}};
}

inline dnes::QuadraticGamed immune_game() {
  return {{mat2(3, 1, 1, 1.0 / 3), mat2(1, 2, 2, 4)}, {vec({7, 7.0 / 3}), vec({3, 6})}, {0, 0}};
}

inline dnes::QuadraticGamed rotation_game() {
  return {{mat2(3, 1, 1, 5), mat2(7, 2, 2, 4)}, {vec({4, 2}), vec({1, 6})}, {0, 0}};
}

inline dnes::QuadraticGamed three_player_game() {
  Matrixd Q1(3, 3), Q2(3, 3), Q3(3, 3);
  Q1 << 0.7, 0.25, -0.1, 0.25, 0.6, 0.05, -0.1, 0.05, 0.9;
  Q2 << 0.7, -0.15, 0.05, -0.15, 0.8, -0.1, 0.05, -0.1, 0.2;
  Q3 << -0.15, 0, 0.125, 0, 0.1, 0.05, 0.125, 0.05, 0.35;
  return {{Q1, Q2, Q3}, {vec({2, 2, -3}), vec({-1, -3, 3}), vec({2, 7, -3})}, {0, 0, 0}};
}

// c1 = x^4 + x^2, c2 = e^x + x^2, alpha_12 = 2, alpha_21 = 1.1
inline dnes::AggregativeGamed aggregative_pair() {
  std::vector<dnes::ConvexCost<double>> own{
      {[](double x) { return x * x * x * x + x * x; }, [](double x) { return 4 * x * x * x + 2 * x; },
       [](double x) { return 12 * x * x + 2; }},
      {[](double x) { return std::exp(x) + x * x; }, [](double x) { return std::exp(x) + 2 * x; },
       [](double x) { return std::exp(x) + 2; }}};
  return {own, vec({2, 2}), mat2(0, 2, 1.1, 0)};
}

}  // namespace fixtures

#include <random>

namespace fixtures {

// Random game whose pseudogradient matrix is diagonally dominant with positive diagonal.
inline dnes::QuadraticGamed random_game(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Matrixd> Q;
  std::vector<Vectord> b;
  std::vector<double> p;
  for (int i = 0; i < n; ++i) {
    Matrixd A = Matrixd::NullaryExpr(n, n, [&] { return u(rng); });
    Matrixd S = 0.5 * (A + A.transpose());
    S(i, i) = double(n) + 1.0 + std::abs(u(rng));
    Q.push_back(S);
    b.push_back(Vectord::NullaryExpr(n, [&] { return 3 * u(rng); }));
    p.push_back(u(rng));
  }
  return {Q, b, p};
}

}  // namespace fixtures
