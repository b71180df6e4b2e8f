#pragma once
// Classical Ising chain H = J sum Z_i Z_{i+1} + h sum Z_i with open ends,
// summed site by site over spins s = +-1.
#include <cmath>
#include <set>
#include <vector>

namespace oracle {

struct IsingChain {
  int n;
  double j;
  double h;
  double beta;

  // Sum over configurations of e^{-beta H} prod_{i in inserted} s_i.
  double weighted_sum(const std::set<int>& inserted) const {
    double v[2];
    for (int s = 0; s < 2; ++s) {
      const double spin = s == 0 ? 1.0 : -1.0;
      v[s] = std::exp(-beta * h * spin) * (inserted.count(0) ? spin : 1.0);
    }
    for (int site = 1; site < n; ++site) {
      double next[2];
      for (int t = 0; t < 2; ++t) {
        const double st = t == 0 ? 1.0 : -1.0;
        next[t] = 0.0;
        for (int s = 0; s < 2; ++s) {
          const double ss = s == 0 ? 1.0 : -1.0;
          next[t] += v[s] * std::exp(-beta * j * ss * st);
        }
        next[t] *= std::exp(-beta * h * st) * (inserted.count(site) ? st : 1.0);
      }
      v[0] = next[0];
      v[1] = next[1];
    }
    return v[0] + v[1];
  }

  double log_z() const { return std::log(weighted_sum({})); }

  double magnetization(int i) const { return weighted_sum({i}) / weighted_sum({}); }

  double connected_zz(int a, int b) const {
    return weighted_sum({a, b}) / weighted_sum({}) - magnetization(a) * magnetization(b);
  }
};

// Correlation length of the zero-field infinite chain.
inline double ising_correlation_length(double j, double beta) { return -1.0 / std::log(std::tanh(beta * std::abs(j))); }

}  // namespace oracle
