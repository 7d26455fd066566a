#pragma once

#include <cmath>
#include <random>

#include "dcl/lie.hpp"

namespace dcl::test {

inline Vec3 random_vec3(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

inline Vec9 random_vec9(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec9 v;
  for (int i = 0; i < 9; ++i) v(i) = n(rng);
  return v;
}

inline Vec3 random_direction(std::mt19937_64& rng) { return random_vec3(rng).normalized(); }

inline GroupElement random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, M_PI - 0.1);
  GroupElement x;
  x.rotation = so3_exp(random_direction(rng) * angle(rng));
  x.velocity = random_vec3(rng, 2.0);
  x.position = random_vec3(rng, 5.0);
  return x;
}

inline Mat9 random_spd(std::mt19937_64& rng, double floor = 0.1) {
  Mat9 a;
  for (int i = 0; i < 9; ++i) a.col(i) = random_vec9(rng);
  return 0.1 * a * a.transpose() + floor * Mat9::Identity();
}

inline Mat3 rot_x(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}

inline Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

}  // namespace dcl::test
