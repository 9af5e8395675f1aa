#pragma once

// Banded line systems: LU with partial pivoting and a cyclic variant for
// periodic lines (banded core plus a Woodbury correction for the wrapped
// corner entries).

#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <vector>

#include "idcos/core.hpp"
#include "idcos/dense.hpp"

namespace idcos::pde {

class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), w_(kl + ku + 1) {
    if (n < 1 || kl < 0 || ku < 0) throw UsageError("BandedMatrix: bad dimensions");
    data_.assign(static_cast<std::size_t>(n) * w_, 0.0);
  }

  int size() const { return n_; }
  int kl() const { return kl_; }
  int ku() const { return ku_; }

  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  double& at(int i, int j) {
    if (!in_band(i, j)) throw UsageError("BandedMatrix: entry outside the band");
    return data_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)];
  }
  double get(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j)) return 0.0;
    return data_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)];
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n_; ++i) {
      double acc = 0;
      int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
      const double* row = &data_[static_cast<std::size_t>(i) * w_ + (j0 - i + kl_)];
      for (int j = j0; j <= j1; ++j) acc += *row++ * x[j];
      y[i] = acc;
    }
  }

 private:
  int n_ = 0, kl_ = 0, ku_ = 0, w_ = 1;
  std::vector<double> data_;
};

/// Gaussian elimination with row pivoting; the upper factor widens to kl+ku.
class BandedLU {
 public:
  BandedLU() = default;
  explicit BandedLU(const BandedMatrix& A) : n_(A.size()), kl_(A.kl()), ku_(A.kl() + A.ku()) {
    w_ = kl_ + ku_ + 1;
    lu_.assign(static_cast<std::size_t>(n_) * w_, 0.0);
    piv_.resize(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = std::max(0, i - A.kl()); j <= std::min(n_ - 1, i + A.ku()); ++j)
        at(i, j) = A.get(i, j);
    double scale = 0;
    for (double v : lu_) scale = std::max(scale, std::abs(v));
    for (int k = 0; k < n_; ++k) {
      int p = k;
      double best = std::abs(at(k, k));
      for (int i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i)
        if (std::abs(at(i, k)) > best) {
          best = std::abs(at(i, k));
          p = i;
        }
      piv_[k] = p;
      if (!(best > 1e-300) || !(best > 1e-15 * scale)) {
        std::ostringstream os;
        os << "banded LU: singular pivot at row " << k;
        throw LinearSolveError(os.str());
      }
      int jmax = std::min(n_ - 1, k + ku_);
      if (p != k)
        for (int j = k; j <= jmax; ++j) std::swap(at(k, j), at(p, j));
      const double inv = 1.0 / at(k, k);
      for (int i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i) {
        double l = at(i, k) * inv;
        at(i, k) = l;
        if (l == 0.0) continue;
        for (int j = k + 1; j <= jmax; ++j) at(i, j) -= l * at(k, j);
      }
    }
  }

  int size() const { return n_; }

  void solve_in_place(std::span<double> b) const {
    for (int k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      const double bk = b[k];
      if (bk == 0.0) continue;
      for (int i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i) b[i] -= at(i, k) * bk;
    }
    for (int k = n_ - 1; k >= 0; --k) {
      double acc = b[k];
      for (int j = k + 1; j <= std::min(n_ - 1, k + ku_); ++j) acc -= at(k, j) * b[j];
      b[k] = acc / at(k, k);
    }
  }

 private:
  // Row i stores columns i-kl .. i+ku. Entries below the diagonal hold the
  // multipliers; because rows are swapped only within the window, the L part
  // never leaves the original lower band.
  double& at(int i, int j) { return lu_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)]; }
  double at(int i, int j) const { return lu_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)]; }

  int n_ = 0, kl_ = 0, ku_ = 0, w_ = 1;
  std::vector<double> lu_;
  std::vector<int> piv_;
};

/// Matrix with entries A(i, (i+k) mod n) for -kl <= k <= ku.
class CyclicBandedMatrix {
 public:
  CyclicBandedMatrix() = default;
  CyclicBandedMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku) {
    if (n < kl + ku + 1) throw UsageError("cyclic band wider than the line");
    diag_.assign(static_cast<std::size_t>(n) * (kl + ku + 1), 0.0);
  }
  int size() const { return n_; }
  int kl() const { return kl_; }
  int ku() const { return ku_; }
  /// Entry in row i at offset k (column (i+k) mod n).
  double& at_offset(int i, int k) { return diag_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + (k + kl_)]; }
  double offset(int i, int k) const { return diag_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + (k + kl_)]; }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n_; ++i) {
      double acc = 0;
      for (int k = -kl_; k <= ku_; ++k) acc += offset(i, k) * x[((i + k) % n_ + n_) % n_];
      y[i] = acc;
    }
  }

 private:
  int n_ = 0, kl_ = 0, ku_ = 0;
  std::vector<double> diag_;
};

/// Solver for CyclicBandedMatrix: A = B + U V^T with B the non-wrapping band
/// and V selecting the kl+ku wrapped columns.
class CyclicBandedLU {
 public:
  CyclicBandedLU() = default;
  explicit CyclicBandedLU(const CyclicBandedMatrix& A) : n_(A.size()) {
    const int kl = A.kl(), ku = A.ku();
    BandedMatrix B(n_, kl, ku);
    // wrapped columns: 0..ku-1 (reached from the last rows) and n-kl..n-1 (from the first rows)
    for (int c = 0; c < ku; ++c) cols_.push_back(c);
    for (int c = n_ - kl; c < n_; ++c) cols_.push_back(c);
    const int r = static_cast<int>(cols_.size());
    std::vector<int> slot(n_, -1);
    for (int s = 0; s < r; ++s) slot[cols_[s]] = s;
    U_.assign(static_cast<std::size_t>(r) * n_, 0.0);  // column-major: U_[s*n + i]
    for (int i = 0; i < n_; ++i)
      for (int k = -kl; k <= ku; ++k) {
        double v = A.offset(i, k);
        int j = i + k;
        if (j >= 0 && j < n_) {
          B.at(i, j) += v;
        } else {
          j = (j % n_ + n_) % n_;
          U_[static_cast<std::size_t>(slot[j]) * n_ + i] += v;
        }
      }
    lu_ = BandedLU(B);
    if (r == 0) return;
    // Z = B^{-1} U, capacitance K = I + V^T Z
    Z_ = U_;
    for (int s = 0; s < r; ++s) lu_.solve_in_place(std::span<double>(&Z_[static_cast<std::size_t>(s) * n_], n_));
    std::vector<double> K(static_cast<std::size_t>(r) * r, 0.0);
    for (int a = 0; a < r; ++a)
      for (int s = 0; s < r; ++s)
        K[static_cast<std::size_t>(a) * r + s] = (a == s ? 1.0 : 0.0) + Z_[static_cast<std::size_t>(s) * n_ + cols_[a]];
    cap_ = std::make_shared<DenseLU<double>>(std::move(K), static_cast<std::size_t>(r));
  }

  int size() const { return n_; }

  void solve_in_place(std::span<double> b) const {
    lu_.solve_in_place(b);
    if (!cap_) return;
    const int r = static_cast<int>(cols_.size());
    std::vector<double> w(r);
    for (int a = 0; a < r; ++a) w[a] = b[cols_[a]];
    cap_->solve_in_place(std::span<double>(w));
    for (int s = 0; s < r; ++s) {
      const double* z = &Z_[static_cast<std::size_t>(s) * n_];
      for (int i = 0; i < n_; ++i) b[i] -= z[i] * w[s];
    }
  }

 private:
  int n_ = 0;
  std::vector<int> cols_;
  std::vector<double> U_, Z_;
  BandedLU lu_;
  std::shared_ptr<DenseLU<double>> cap_;
};

}  // namespace idcos::pde
