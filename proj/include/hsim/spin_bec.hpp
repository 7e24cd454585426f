#pragma once

// Spin-changing collisions in a spin-1 condensate, solved exactly in the
// m_l = 0 sector.
//
// With L- = sqrt2 (a1^dag a0 + a0^dag a-1), L+ = (L-)^dag and
// Lz = n-1 - n1, the Hamiltonian is H = lambda (L^2 - 2N). Starting from a
// coherent pump in m_F = 0 with empty side modes, the state stays in the
// kets |n-1 = k, n0 = N - 2k, n1 = k>. Each total-N block is tridiagonal in k
// and is diagonalized numerically; its spectrum is {l(l+1)} with l = N, N-2,
// ..., each exactly once.

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hsim/fock_core.hpp"

namespace hsim::spin {

struct SpinBlock {
  int total = 0;                 // N
  Eigen::VectorXd diagonal;      // <k|L^2|k>
  Eigen::VectorXd off_diagonal;  // <k+1|L^2|k>
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, in the k basis

  Eigen::Index size() const { return diagonal.size(); }

  Eigen::MatrixXd l2_matrix() const {
    Eigen::MatrixXd m = diagonal.asDiagonal();
    for (Eigen::Index k = 0; k + 1 < size(); ++k)
      m(k + 1, k) = m(k, k + 1) = off_diagonal(k);
    return m;
  }
};

namespace detail {

using Ket = std::array<int, 3>;  // (n-1, n0, n1)
using KetMap = std::map<Ket, double>;

struct Hop {
  double coeff;
  int create;
  int destroy;
};

// Mode indices into Ket.
inline constexpr int kMinus = 0, kZero = 1, kPlus = 2;

inline const std::array<Hop, 2>& lowering_terms() {
  static const std::array<Hop, 2> t{{{std::sqrt(2.0), kPlus, kZero},
                                     {std::sqrt(2.0), kZero, kMinus}}};
  return t;
}
inline const std::array<Hop, 2>& raising_terms() {
  static const std::array<Hop, 2> t{{{std::sqrt(2.0), kZero, kPlus},
                                     {std::sqrt(2.0), kMinus, kZero}}};
  return t;
}

inline KetMap apply(const std::array<Hop, 2>& op, const KetMap& in) {
  KetMap out;
  for (const auto& [ket, amp] : in)
    for (const auto& h : op) {
      if (ket[h.destroy] == 0) continue;
      Ket k = ket;
      double c = h.coeff * std::sqrt(double(k[h.destroy]));
      --k[h.destroy];
      c *= std::sqrt(double(k[h.create] + 1));
      ++k[h.create];
      out[k] += c * amp;
    }
  return out;
}

}  // namespace detail

/// Assembles L^2 = (L+L- + L-L+)/2 + Lz^2 on the m_l = 0 kets of N atoms and
/// diagonalizes it.
inline SpinBlock build_block(int total) {
  if (total < 0) throw DomainError("build_block: N must be >= 0");
  const int K = total / 2;
  SpinBlock b;
  b.total = total;
  Eigen::MatrixXd l2 = Eigen::MatrixXd::Zero(K + 1, K + 1);
  for (int k = 0; k <= K; ++k) {
    const detail::KetMap ket{{{k, total - 2 * k, k}, 1.0}};
    const auto pm = detail::apply(detail::raising_terms(), detail::apply(detail::lowering_terms(), ket));
    const auto mp = detail::apply(detail::lowering_terms(), detail::apply(detail::raising_terms(), ket));
    for (const auto* part : {&pm, &mp})
      for (const auto& [out, amp] : *part) {
        if (out[detail::kMinus] != out[detail::kPlus])
          throw std::logic_error("L^2 left the m_l = 0 sector");
        l2(out[detail::kMinus], k) += 0.5 * amp;
      }
    // Lz^2 vanishes on this sector.
  }
  for (int i = 0; i <= K; ++i)
    for (int j = 0; j <= K; ++j)
      if (std::abs(i - j) > 1 && l2(i, j) != 0.0)
        throw std::logic_error("L^2 block is not tridiagonal");
  b.diagonal = l2.diagonal();
  b.off_diagonal = K > 0 ? Eigen::VectorXd(l2.diagonal(-1)) : Eigen::VectorXd();
  if (K == 0) {
    b.eigenvalues = b.diagonal;
    b.eigenvectors = Eigen::MatrixXd::Identity(1, 1);
    return b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(b.diagonal, b.off_diagonal, Eigen::ComputeEigenvectors);
  b.eigenvalues = es.eigenvalues();
  b.eigenvectors = es.eigenvectors();
  return b;
}

/// Reduced-basis state: amplitudes over k for each total atom number N.
using BlockState = std::map<int, Eigen::VectorXcd>;

struct BECTrajectory {
  std::vector<double> lambda_t;
  std::vector<double> pop1;                      // <n1> = <n-1>
  std::vector<cplx> pair_corr;                   // <a1 a-1>
  std::vector<std::vector<double>> number_dist;  // P(k) with k = n1
  std::vector<double> margin;                    // |<a1 a-1>|^2 - <n1><n-1>
  std::vector<double> norm;
  std::vector<double> mean_total;                // <N>
  std::vector<double> energy;                    // <H>/lambda
  std::vector<std::vector<double>> block_mass;   // P(N), index N
};

/// Exact propagation of an arbitrary m_l = 0 state under H = lambda(L^2 - 2N).
class SpinDynamics {
 public:
  explicit SpinDynamics(const BlockState& initial) {
    for (const auto& [n, amps] : initial) {
      SpinBlock b = build_block(n);
      if (amps.size() != b.size())
        throw SpaceError("initial block " + std::to_string(n) + " has wrong size");
      Eigen::VectorXcd coeff = b.eigenvectors.transpose().cast<cplx>() * amps;
      blocks_.emplace(n, Entry{std::move(b), std::move(coeff)});
    }
  }

  const SpinBlock& block(int n) const { return blocks_.at(n).block; }

  /// State at dimensionless time lambda*t.
  BlockState state_at(double lambda_t) const {
    BlockState out;
    for (const auto& [n, e] : blocks_) {
      Eigen::VectorXcd phased = e.coeff;
      for (Eigen::Index l = 0; l < phased.size(); ++l)
        phased(l) *= std::polar(1.0, -lambda_t * (e.block.eigenvalues(l) - 2.0 * n));
      out.emplace(n, e.block.eigenvectors.cast<cplx>() * phased);
    }
    return out;
  }

  /// <H>/lambda evaluated with the assembled L^2 matrices (not the spectrum).
  double energy(const BlockState& state) const {
    double total = 0.0;
    for (const auto& [n, v] : state) {
      const Eigen::MatrixXd h = blocks_.at(n).block.l2_matrix() -
                                2.0 * n * Eigen::MatrixXd::Identity(v.size(), v.size());
      total += (v.adjoint() * h.cast<cplx>() * v)(0).real();
    }
    return total;
  }

 private:
  struct Entry {
    SpinBlock block;
    Eigen::VectorXcd coeff;  // in the eigenbasis at t = 0
  };
  std::map<int, Entry> blocks_;
};

/// <a1 a-1>: a1 a-1 |k, N-2k, k> = k |k-1, N-2k, k-1>, which is ket k-1 of
/// block N-2.
inline cplx pair_correlation(const BlockState& state) {
  cplx acc = 0.0;
  for (const auto& [n, v] : state) {
    const auto lower = state.find(n - 2);
    if (lower == state.end()) continue;
    for (Eigen::Index k = 1; k < v.size(); ++k)
      acc += std::conj(lower->second(k - 1)) * double(k) * v(k);
  }
  return acc;
}

inline double poisson_tail(double mean, int n_max) {
  // sum_{N > n_max} e^{-mean} mean^N / N!
  double tail = 0.0;
  for (int n = n_max + 1;; ++n) {
    const double term = std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
    tail += term;
    if (n > mean && term < 1e-18 * std::max(tail, 1e-300)) break;
    if (n > n_max + 10000) break;
  }
  return tail;
}

/// ceil(|alpha|^2 + 8|alpha|), raised for small pumps until the Poisson tail
/// beyond it is below 1e-10.
inline int default_n_max(cplx pump_alpha) {
  const double mean = std::norm(pump_alpha);
  int n = static_cast<int>(std::ceil(mean + 8.0 * std::sqrt(mean)));
  if (mean > 0.0)
    while (poisson_tail(mean, n) >= 1e-10) ++n;
  return n;
}

/// Pump coherent state in m_F = 0 with empty side modes, truncated to
/// N <= n_max and renormalized.
inline BlockState coherent_pump(cplx alpha, int n_max) {
  if (n_max < 0) throw DomainError("n_max must be >= 0");
  const double mean = std::norm(alpha);
  if (mean > 0.0 && poisson_tail(mean, n_max) >= 1e-10)
    throw CutoffError("N_max = " + std::to_string(n_max) +
                      " leaves a Poisson tail above 1e-10");
  BlockState s;
  cplx c = std::exp(-0.5 * mean);
  double norm2 = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n / 2 + 1);
    v(0) = c;
    norm2 += std::norm(c);
    s.emplace(n, std::move(v));
    c *= alpha / std::sqrt(n + 1.0);
  }
  for (auto& [n, v] : s) v /= std::sqrt(norm2);
  return s;
}

inline BECTrajectory trajectory(const SpinDynamics& dyn, const BlockState& initial,
                                const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("time grid must be non-empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw DomainError("time grid must be nondecreasing");
  int k_max = 0, n_top = 0;
  for (const auto& [n, v] : initial) {
    k_max = std::max(k_max, n / 2);
    n_top = std::max(n_top, n);
  }
  BECTrajectory tr;
  for (double lt : grid) {
    const BlockState st = dyn.state_at(lt);
    double pop = 0.0, norm = 0.0, mean_n = 0.0;
    std::vector<double> dist(static_cast<std::size_t>(k_max) + 1, 0.0);
    std::vector<double> mass(static_cast<std::size_t>(n_top) + 1, 0.0);
    for (const auto& [n, v] : st) {
      for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double p = std::norm(v(k));
        pop += double(k) * p;
        dist[static_cast<std::size_t>(k)] += p;
        mass[static_cast<std::size_t>(n)] += p;
      }
      norm += v.squaredNorm();
      mean_n += n * v.squaredNorm();
    }
    const cplx pc = pair_correlation(st);
    tr.lambda_t.push_back(lt);
    tr.pop1.push_back(pop);
    tr.pair_corr.push_back(pc);
    tr.number_dist.push_back(std::move(dist));
    tr.margin.push_back(std::norm(pc) - pop * pop);
    tr.norm.push_back(norm);
    tr.mean_total.push_back(mean_n);
    tr.energy.push_back(dyn.energy(st));
    tr.block_mass.push_back(std::move(mass));
  }
  return tr;
}

/// Evolves the coherent-pump initial state over the grid (values of lambda*t).
inline BECTrajectory evolve(cplx pump_alpha, const std::vector<double>& grid, int n_max) {
  if (grid.empty()) throw DomainError("time grid must be non-empty");
  const BlockState initial = coherent_pump(pump_alpha, n_max);
  const SpinDynamics dyn(initial);
  return trajectory(dyn, initial, grid);
}

/// Quadrature noise floor Delta N_ex / <n_c> for budget planning.
inline double lo_budget_check(double mean_n_c, double excess_noise) {
  if (!(mean_n_c > 0.0)) throw DomainError("lo_budget_check: LO intensity must be positive");
  if (excess_noise < 0.0) throw DomainError("lo_budget_check: excess noise must be >= 0");
  return excess_noise / mean_n_c;
}

}  // namespace hsim::spin
