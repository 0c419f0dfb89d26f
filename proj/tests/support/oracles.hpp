#pragma once

// Reference implementations in long double, written from the definitions and
// sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sat::testkit {

inline std::vector<long double> oracle_softmax(const std::vector<double>& z, double T) {
  long double m = z[0];
  for (double v : z) m = std::max<long double>(m, v);
  std::vector<long double> out;
  long double s = 0;
  for (double v : z) s += std::exp((v - m) / T);
  for (double v : z) out.push_back(std::exp((v - m) / T) / s);
  return out;
}

inline long double oracle_dist(const std::vector<double>& s, const std::vector<double>& t, double T) {
  const auto ps = oracle_softmax(s, T);
  const auto pt = oracle_softmax(t, T);
  long double acc = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) acc -= pt[i] * std::log(ps[i]);
  return acc;
}

inline long double oracle_cos(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return 1 - dot / std::sqrt(na * nb);
}

// Repeats counted by scanning earlier positions; stopwords are free.
inline long oracle_repeats(const std::vector<std::string>& toks, const std::vector<std::string>& stop) {
  long n = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (std::find(stop.begin(), stop.end(), toks[i]) != stop.end()) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (toks[j] == toks[i]) {
        ++n;
        break;
      }
    }
  }
  return n;
}

inline std::vector<double> randv(std::mt19937_64& rng, std::size_t n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace sat::testkit
