#pragma once

// Random datasets for property tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "exactmatch/data.hpp"

namespace gen {

/// Two studies with p covariates of mixed kinds. Study 1 is shifted by
/// `shift` standard deviations on continuous columns and tilted on the
/// discrete ones, so small shifts keep the hulls overlapping.
inline exactmatch::CovariateTable mixed_table(std::mt19937_64& rng, std::size_t n0, std::size_t n1, std::size_t p,
                                              double shift) {
  using namespace exactmatch;
  std::vector<Covariate> covs;
  std::uniform_int_distribution<int> kind(0, 2), levels(2, 5);
  for (std::size_t j = 0; j < p; ++j) {
    const int k = j == 0 ? 0 : kind(rng);
    Covariate c;
    c.name = "v" + std::to_string(j);
    if (k == 0) {
      c.kind = CovariateKind::Continuous;
    } else if (k == 1) {
      c.kind = CovariateKind::Binary;
    } else {
      c.kind = CovariateKind::Categorical;
      const int L = levels(rng);
      for (int l = 0; l < L; ++l) c.levels.push_back(std::string(1, static_cast<char>('a' + l)));
    }
    covs.push_back(c);
  }
  CovariateSchema schema(covs);
  const std::size_t n = n0 + n1;
  Matrix values(n, p);
  std::vector<int> study(n);
  Vector y(n);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scale(p);
  for (auto& s : scale) s = std::exp(2.0 * z(rng));
  for (std::size_t i = 0; i < n; ++i) {
    const int s = i < n0 ? 0 : 1;
    study[i] = s;
    const double t = s == 1 ? shift : 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const auto& c = covs[j];
      switch (c.kind) {
        case CovariateKind::Continuous:
          values(i, j) = scale[j] * (z(rng) + t);
          break;
        case CovariateKind::Binary:
          values(i, j) = u(rng) < 0.5 + 0.15 * t ? 1.0 : 0.0;
          break;
        case CovariateKind::Categorical: {
          const double L = static_cast<double>(c.levels.size());
          double v = std::floor(u(rng) * L + t);
          values(i, j) = std::clamp(v, 0.0, L - 1.0);
          break;
        }
      }
    }
    y[i] = z(rng) + 0.5 * values(i, 0) / scale[0];
  }
  return CovariateTable(schema, study, values, y);
}

/// All-categorical table in which every cell of the full grid holds at least
/// one patient from each study.
inline exactmatch::CovariateTable saturated_table(std::mt19937_64& rng, std::size_t covariates) {
  using namespace exactmatch;
  std::uniform_int_distribution<int> levels(2, 3), extra(0, 4);
  std::vector<Covariate> covs;
  std::size_t cells = 1;
  for (std::size_t j = 0; j < covariates; ++j) {
    Covariate c{"f" + std::to_string(j), CovariateKind::Categorical, {}};
    const int L = levels(rng);
    for (int l = 0; l < L; ++l) c.levels.push_back("L" + std::to_string(l));
    cells *= static_cast<std::size_t>(L);
    covs.push_back(c);
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> study;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::vector<double> lv;
    std::size_t rest = cell;
    for (const auto& c : covs) {
      lv.push_back(static_cast<double>(rest % c.levels.size()));
      rest /= c.levels.size();
    }
    for (int s = 0; s < 2; ++s) {
      const int count = 1 + extra(rng) + (s == 1 ? static_cast<int>(cell % 3) : 0);
      for (int k = 0; k < count; ++k) {
        rows.push_back(lv);
        study.push_back(s);
      }
    }
  }
  Matrix values(rows.size(), covariates);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < covariates; ++j) values(i, j) = rows[i][j];
  return CovariateTable(CovariateSchema(covs), study, values, std::nullopt);
}

}  // namespace gen
