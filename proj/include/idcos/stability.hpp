#pragma once

// Linear stability of IDC splitting schemes on u' = lambda u with the
// equal split lambda/2 + lambda/2 and one macro step of length 1.

#include <complex>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "idcos/idc.hpp"

namespace idcos {

struct StabilitySpec {
  Scheme scheme = Scheme::LieTrotter;
  int corrections = 0;
  int M = 3;
  ResidualMode residual_mode = ResidualMode::Oversampled;
  int oversample_nodes = 13;
};

/// u(1) for u(0) = 1. Throws PoleError when an implicit factor is singular.
inline std::complex<double> amplification(std::complex<double> lambda, const StabilitySpec& spec) {
  using C = std::complex<double>;
  SplitIVP<C> p({linear_operator(lambda / 2.0), linear_operator(lambda / 2.0)}, {C(1.0)}, 1.0);
  auto cfg = IDCConfig<C>::make(spec.scheme, spec.M, spec.corrections);
  cfg.residual_mode = spec.residual_mode;
  cfg.oversample_nodes = spec.oversample_nodes;
  cfg.warn = [](const std::string&) {};
  return idc_solve(p, 1, cfg).back()[0];
}

struct StabilityScan {
  double re_lo = -20, re_hi = 4, im_lo = -12, im_hi = 12;
  int n_re = 601, n_im = 601;
  StabilitySpec spec;
  std::vector<double> amp;  // |amplification|, row-major over im then re; inf at poles

  double re(int i) const { return re_lo + (re_hi - re_lo) * i / (n_re - 1); }
  double im(int j) const { return im_lo + (im_hi - im_lo) * j / (n_im - 1); }
  double at(int i, int j) const { return amp[static_cast<std::size_t>(j) * n_re + i]; }
};

inline void scan_region(StabilityScan& scan) {
  if (scan.n_re < 2 || scan.n_im < 2) throw UsageError("stability scan needs at least 2x2 points");
  if (!(scan.re_hi > scan.re_lo) || !(scan.im_hi > scan.im_lo))
    throw UsageError("stability scan window is empty");
  scan.amp.assign(static_cast<std::size_t>(scan.n_re) * scan.n_im, 0.0);
  for (int j = 0; j < scan.n_im; ++j)
    for (int i = 0; i < scan.n_re; ++i) {
      double a;
      try {
        a = std::abs(amplification({scan.re(i), scan.im(j)}, scan.spec));
        if (!std::isfinite(a)) a = HUGE_VAL;
      } catch (const PoleError&) {
        a = HUGE_VAL;
      } catch (const NumericalError&) {
        a = HUGE_VAL;
      } catch (const LinearSolveError&) {
        a = HUGE_VAL;
      }
      scan.amp[static_cast<std::size_t>(j) * scan.n_re + i] = a;
    }
}

/// Polylines of the |amp| = level set, by marching squares with linear
/// interpolation along cell edges.
inline std::vector<std::vector<std::complex<double>>> level_contour(const StabilityScan& scan,
                                                                    double level = 1.0) {
  using Pt = std::complex<double>;
  const int nx = scan.n_re, ny = scan.n_im;
  auto val = [&](int i, int j) {
    double a = scan.at(i, j);
    return std::isfinite(a) ? a - level : 1e300;
  };
  // Edge keys: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1.
  auto hkey = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i); };
  auto vkey = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i) + 1; };
  auto crossing = [&](long key) {
    long cell = key / 2;
    int i = static_cast<int>(cell % nx), j = static_cast<int>(cell / nx);
    int i2 = (key % 2 == 0) ? i + 1 : i, j2 = (key % 2 == 0) ? j : j + 1;
    double a = val(i, j), b = val(i2, j2);
    double s = (a == b) ? 0.5 : a / (a - b);
    s = std::min(1.0, std::max(0.0, s));
    return Pt(scan.re(i) + s * (scan.re(i2) - scan.re(i)), scan.im(j) + s * (scan.im(j2) - scan.im(j)));
  };

  std::map<long, std::vector<long>> adj;
  auto link = [&](long a, long b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      double v[4] = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
      int code = 0;
      for (int k = 0; k < 4; ++k)
        if (v[k] > 0) code |= 1 << k;
      if (code == 0 || code == 15) continue;
      // edges: 0 bottom, 1 right, 2 top, 3 left
      long e[4] = {hkey(i, j), vkey(i + 1, j), hkey(i, j + 1), vkey(i, j)};
      switch (code) {
        case 1: case 14: link(e[3], e[0]); break;
        case 2: case 13: link(e[0], e[1]); break;
        case 3: case 12: link(e[3], e[1]); break;
        case 4: case 11: link(e[1], e[2]); break;
        case 6: case 9: link(e[0], e[2]); break;
        case 7: case 8: link(e[3], e[2]); break;
        case 5: case 10: {
          double centre = (v[0] + v[1] + v[2] + v[3]) / 4;
          bool centre_high = centre > 0;
          if ((code == 5) == centre_high) {
            link(e[0], e[1]);
            link(e[2], e[3]);
          } else {
            link(e[3], e[0]);
            link(e[1], e[2]);
          }
          break;
        }
      }
    }

  std::vector<std::vector<Pt>> lines;
  std::map<long, bool> used;
  auto walk = [&](long start) {
    std::vector<Pt> line{crossing(start)};
    used[start] = true;
    long cur = start;
    for (;;) {
      long next = -1;
      for (long n : adj[cur])
        if (!used[n]) {
          next = n;
          break;
        }
      if (next < 0) {
        // close loops back to their start
        for (long n : adj[cur])
          if (n == start && line.size() > 2) line.push_back(line.front());
        break;
      }
      used[next] = true;
      line.push_back(crossing(next));
      cur = next;
    }
    lines.push_back(std::move(line));
  };
  // open chains first (endpoints have a single neighbour), then loops
  for (auto& [k, nb] : adj)
    if (nb.size() == 1 && !used[k]) walk(k);
  for (auto& [k, nb] : adj)
    if (!used[k]) walk(k);
  return lines;
}

/// Bisection for the first real lambda* < 0 with |amp(lambda*)| > 1, searched
/// outward from zero on a geometric grid up to -lambda_max. Returns nothing
/// when the sampled negative axis is stable.
inline std::optional<double> real_instability_threshold(const StabilitySpec& spec,
                                                        double lambda_max = 1e4,
                                                        double ratio = 1.02, double lambda_min = 1e-2) {
  auto unstable = [&](double lam) {
    try {
      return std::abs(amplification({lam, 0.0}, spec)) > 1.0;
    } catch (const PoleError&) {
      return true;
    }
  };
  double prev = 0.0;
  for (double r = lambda_min; r <= lambda_max; r *= ratio) {
    if (unstable(-r)) {
      double lo = prev, hi = r;  // stable at -lo, unstable at -hi
      for (int it = 0; it < 100 && hi - lo > 1e-10 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (unstable(-mid))
          hi = mid;
        else
          lo = mid;
      }
      return -hi;
    }
    prev = r;
  }
  return std::nullopt;
}

inline void write_field_csv(std::ostream& os, const StabilityScan& scan) {
  char buf[96];
  os << "re,im,abs_amp\n";
  for (int j = 0; j < scan.n_im; ++j)
    for (int i = 0; i < scan.n_re; ++i) {
      double a = scan.at(i, j);
      if (std::isfinite(a))
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", scan.re(i), scan.im(j), a);
      else
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,inf\n", scan.re(i), scan.im(j));
      os << buf;
    }
}

inline void write_contour_csv(std::ostream& os,
                              const std::vector<std::vector<std::complex<double>>>& lines) {
  char buf[96];
  os << "re,im,segment_id\n";
  for (std::size_t s = 0; s < lines.size(); ++s)
    for (const auto& p : lines[s]) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", p.real(), p.imag(), s);
      os << buf;
    }
}

}  // namespace idcos
