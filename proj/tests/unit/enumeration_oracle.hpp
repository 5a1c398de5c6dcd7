#pragma once

// Exhaustive law of Z_n for a table model: every row choice of every particle
// in every generation, with exact probabilities. Test-only oracle.

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "brw/models.hpp"

namespace brw::oracle {

using cd = std::complex<double>;

struct Outcome {
  cd z;
  double prob;
};

inline std::vector<Outcome> enumerate_z(const std::vector<TableRow>& rows, cd lambda, int n) {
  cd m = 0.0;
  for (const auto& r : rows)
    for (double x : r.displacements) m += r.prob * std::exp(-lambda * x);

  struct State {
    std::vector<double> pos;
    double prob;
  };
  std::vector<State> states = {{{0.0}, 1.0}};
  for (int g = 0; g < n; ++g) {
    std::vector<State> next;
    for (const auto& s : states) {
      // Odometer over row choices of each particle.
      std::vector<std::size_t> pick(s.pos.size(), 0);
      while (true) {
        State child{{}, s.prob};
        for (std::size_t i = 0; i < s.pos.size(); ++i) {
          const auto& row = rows[pick[i]];
          child.prob *= row.prob;
          for (double x : row.displacements) child.pos.push_back(s.pos[i] + x);
        }
        if (child.prob > 0.0) next.push_back(std::move(child));
        std::size_t k = 0;
        while (k < pick.size() && ++pick[k] == rows.size()) pick[k++] = 0;
        if (k == pick.size()) break;
      }
    }
    states = std::move(next);
  }
  std::vector<Outcome> law;
  for (const auto& s : states) {
    cd z = 0.0;
    for (double x : s.pos) z += std::exp(-lambda * x) / std::pow(m, n);
    bool merged = false;
    for (auto& o : law)
      if (std::abs(o.z - z) < 1e-9) {
        o.prob += s.prob;
        merged = true;
        break;
      }
    if (!merged) law.push_back({z, s.prob});
  }
  return law;
}

}  // namespace brw::oracle
