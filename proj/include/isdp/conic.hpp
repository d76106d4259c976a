#pragma once

// Primal-dual interior-point engine for conic programs
//
//   min c^T z   s.t.  A z = b,   z in K,
//
// where K is a product of free, nonnegative, rotated second-order (dimension
// three) and one or more PSD blocks. Path following with Nesterov-Todd
// scaling, Mehrotra predictor-corrector, dense normal-equation factorization
// with static regularization and iterative refinement. Deterministic: fixed
// starting point, no randomized pivoting.
//
// PSD blocks travel in scaled-vector (svec) coordinates: the packed lower
// triangle with off-diagonal entries multiplied by sqrt(2), so that the
// Euclidean inner product of two svecs equals the Frobenius product.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "isdp/common.hpp"
#include "isdp/linalg.hpp"

namespace isdp {

enum class BlockKind { Free, Nonneg, Rsoc, Psd };

struct ConeBlock {
  BlockKind kind;
  int dim;  // Free/Nonneg: scalar count; Rsoc: 3; Psd: matrix dimension
  int scalar_count() const {
    return kind == BlockKind::Psd ? dim * (dim + 1) / 2 : (kind == BlockKind::Rsoc ? 3 : dim);
  }
};

inline int svec_dim(int m) { return m * (m + 1) / 2; }
inline int svec_index(int m, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * m - j * (j + 1) / 2 + i;
}
/// Coefficient for <A, X> acting on svec(X).
inline double svec_coeff(int i, int j, double a) {
  return i == j ? a : a * std::sqrt(2.0);
}

inline Eigen::VectorXd svec_of(const SymMatrix& a) {
  const int m = a.dim();
  Eigen::VectorXd v(svec_dim(m));
  const double rt2 = std::sqrt(2.0);
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i) v[svec_index(m, i, j)] = (i == j) ? a(i, j) : rt2 * a(i, j);
  return v;
}

inline SymMatrix smat_of(const Eigen::VectorXd& v, int m) {
  SymMatrix a(m);
  const double irt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i) {
      const double x = v[svec_index(m, i, j)];
      a.set(i, j, (i == j) ? x : irt2 * x);
    }
  return a;
}

struct ConicRow {
  std::vector<int> idx;
  std::vector<double> val;
  double rhs = 0.0;

  void add(int col, double v) {
    if (v == 0.0) return;
    idx.push_back(col);
    val.push_back(v);
  }
};

struct ConicProblem {
  std::vector<ConeBlock> blocks;
  std::vector<double> c;
  std::vector<ConicRow> rows;

  int total_dim() const {
    int n = 0;
    for (const auto& b : blocks) n += b.scalar_count();
    return n;
  }
  int block_offset(int k) const {
    int n = 0;
    for (int i = 0; i < k; ++i) n += blocks[i].scalar_count();
    return n;
  }
  ConicRow& add_row(double rhs) {
    rows.push_back({});
    rows.back().rhs = rhs;
    return rows.back();
  }
};

enum class ConicStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  SlowProgress,
  IterationLimit,
  Cutoff,      // dual bound crossed the caller's cutoff; iterate is dual-feasible
  TimeLimit,
};

struct ConicSolution {
  ConicStatus status = ConicStatus::SlowProgress;
  Eigen::VectorXd z;  // primal
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd s;  // dual slack
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double rp = kInf, rd = kInf, gap = kInf;  // relative residuals at the returned point
  int iterations = 0;
  // For PrimalInfeasible: y,s hold the Farkas certificate scaled to b^T y = 1.
  // For DualInfeasible: z holds the unbounded ray scaled to c^T z = -1.
};

struct IpmOptions {
  double tol = 1e-8;
  double inf_tol = 1e-9;
  int max_iters = 200;
  double cutoff = kInf;  // prune threshold on the dual objective (min sense)
  Deadline deadline = Deadline::never();
  std::function<void(int iter, double pobj, double dobj, double rp, double rd, double gap)>
      iterate_callback;
};

namespace ipm_detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// rotated <-> standard second-order cone, an orthogonal involution
inline Eigen::Matrix3d rsoc_to_soc() {
  Eigen::Matrix3d t;
  const double r = 1.0 / std::sqrt(2.0);
  t << r, r, 0, r, -r, 0, 0, 0, 1;
  return t;
}

struct BlockWork {
  BlockKind kind;
  int dim;     // as in ConeBlock
  int offset;  // first scalar index
  int count;   // scalar count

  // NT scaling state
  VectorXd w_nn;    // nonneg: sqrt(z/s)
  Eigen::Matrix3d w_soc, w_soc_inv;
  MatrixXd r, rti;  // psd: scaling factors, rti = r^{-T}
  VectorXd lambda;  // scaled point (psd: the diagonal)
};

inline double soc_residual(const VectorXd& u) {
  return u[0] * u[0] - u.tail(u.size() - 1).squaredNorm();
}

// largest step alpha with u + alpha d staying in the cone (up to boundary)
inline double soc_step_max(const VectorXd& u, const VectorXd& d) {
  const double c2 = d[0] * d[0] - d.tail(2).squaredNorm();
  const double c1 = 2.0 * (u[0] * d[0] - u.tail(2).dot(d.tail(2)));
  const double c0 = soc_residual(u);
  double alpha = kInf;
  if (std::abs(c2) < 1e-300) {
    if (c1 < 0) alpha = -c0 / c1;
  } else {
    const double disc = c1 * c1 - 4 * c2 * c0;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      const double r1 = (-c1 - sq) / (2 * c2), r2 = (-c1 + sq) / (2 * c2);
      double lo = std::min(r1, r2), hi = std::max(r1, r2);
      if (lo > 0)
        alpha = lo;
      else if (hi > 0)
        alpha = hi;
    }
  }
  if (d[0] < 0) alpha = std::min(alpha, -u[0] / d[0]);
  return alpha;
}

inline MatrixXd mat_full(const VectorXd& v, int m) {
  MatrixXd a(m, m);
  const double irt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i) {
      const double x = v[svec_index(m, i, j)];
      a(i, j) = (i == j) ? x : irt2 * x;
      a(j, i) = a(i, j);
    }
  return a;
}

inline VectorXd svec_full(const MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  VectorXd v(svec_dim(m));
  const double rt2 = std::sqrt(2.0);
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i) v[svec_index(m, i, j)] = (i == j) ? a(i, j) : rt2 * a(i, j);
  return v;
}

// Cholesky with escalating diagonal jitter
inline Eigen::LLT<MatrixXd> robust_llt(MatrixXd m) {
  Eigen::LLT<MatrixXd> llt(m);
  double jitter = 1e-14 * std::max(1.0, m.trace() / std::max<int>(1, m.rows()));
  for (int tries = 0; llt.info() != Eigen::Success && tries < 8; ++tries) {
    m.diagonal().array() += jitter;
    jitter *= 100.0;
    llt.compute(m);
  }
  return llt;
}

}  // namespace ipm_detail

class ConicSolver {
 public:
  explicit ConicSolver(const ConicProblem& p, IpmOptions opts = {}) : prob_(p), opts_(opts) {
    build();
  }

  ConicSolution solve() {
    using namespace ipm_detail;
    ConicSolution best;
    if (m_ == 0) return solve_unconstrained();

    VectorXd z(n_), s(n_), y = VectorXd::Zero(m_);
    initialize(z, s);

    double best_metric = kInf;
    int stall_count = 0;

    for (int iter = 0; iter <= opts_.max_iters; ++iter) {
      const VectorXd rp = b_ - A_ * z;
      const VectorXd rd = c_ - A_.transpose() * y - s;
      const double pobj = c_.dot(z), dobj = b_.dot(y);
      const double gap_c = cone_dot(z, s);
      const double mu = nu_ > 0 ? std::max(gap_c, 0.0) / nu_ : 0.0;

      const double rp_rel = rp.lpNorm<Eigen::Infinity>() / (1.0 + b_norm_);
      const double rd_rel = rd.lpNorm<Eigen::Infinity>() / (1.0 + c_norm_);
      const double gap_rel = std::abs(pobj - dobj) / std::max({1.0, std::abs(pobj), std::abs(dobj)});
      const double compl_rel = std::max(gap_c, 0.0) / std::max({1.0, std::abs(pobj), std::abs(dobj)});

      if (opts_.iterate_callback)
        opts_.iterate_callback(iter, unscale_obj(pobj), unscale_obj(dobj), rp_rel, rd_rel, gap_rel);

      const double metric = std::max({rp_rel, rd_rel, compl_rel});
      if (metric < 0.95 * best_metric) {
        stall_count = 0;
      }
      if (metric < best_metric) {
        best_metric = metric;
        fill_solution(best, z, y, s, pobj, dobj, rp_rel, rd_rel, gap_rel);
        best.iterations = iter;
      }

      if (rp_rel <= opts_.tol && rd_rel <= opts_.tol &&
          (gap_rel <= opts_.tol || compl_rel <= opts_.tol)) {
        fill_solution(best, z, y, s, pobj, dobj, rp_rel, rd_rel, gap_rel);
        best.status = ConicStatus::Optimal;
        best.iterations = iter;
        return best;
      }
      if (detect_primal_infeasible(best, y, s)) return best;
      if (detect_dual_infeasible(best, z)) return best;
      if (std::isfinite(opts_.cutoff) && rd_rel <= opts_.tol &&
          unscale_obj(dobj) >= opts_.cutoff) {
        fill_solution(best, z, y, s, pobj, dobj, rp_rel, rd_rel, gap_rel);
        best.status = ConicStatus::Cutoff;
        best.iterations = iter;
        return best;
      }
      if (opts_.deadline.expired()) {
        best.status = ConicStatus::TimeLimit;
        return best;
      }
      if (iter == opts_.max_iters) {
        best.status = ConicStatus::IterationLimit;
        return best;
      }
      if (++stall_count >= 15) {
        best.status = ConicStatus::SlowProgress;
        return best;
      }

      // NT scalings
      if (!compute_scalings(z, s)) {
        best.status = ConicStatus::SlowProgress;
        return best;
      }
      if (!factorize()) {
        best.status = ConicStatus::SlowProgress;
        return best;
      }

      // predictor: v = -lambda in the scaled space
      VectorXd v_aff = VectorXd::Zero(n_);
      for (auto& blk : work_) {
        switch (blk.kind) {
          case BlockKind::Free:
            break;
          case BlockKind::Nonneg:
          case BlockKind::Rsoc:
            v_aff.segment(blk.offset, blk.count) = -blk.lambda;
            break;
          case BlockKind::Psd:
            for (int i = 0; i < blk.dim; ++i)
              v_aff[blk.offset + svec_index(blk.dim, i, i)] = -blk.lambda[i];
            break;
        }
      }
      VectorXd dz_a(n_), dy_a(m_), ds_a(n_);
      if (!kkt_solve(rp, rd, v_aff, dz_a, dy_a, ds_a)) {
        best.status = ConicStatus::SlowProgress;
        return best;
      }
      const double alpha_aff = std::min({step_max(z, dz_a), step_max(s, ds_a), 1.0});
      double gap_aff = cone_dot(z + alpha_aff * dz_a, s + alpha_aff * ds_a);
      gap_aff = std::max(gap_aff, 0.0);
      double sigma = nu_ > 0 && gap_c > 0 ? std::pow(gap_aff / gap_c, 3.0) : 0.1;
      sigma = std::clamp(sigma, 1e-8, 1.0 - 1e-8);

      // corrector
      VectorXd v_comb(n_);
      build_corrector_rhs(sigma * mu, z, s, dz_a, ds_a, v_comb);
      VectorXd dz(n_), dy(m_), ds(n_);
      if (!kkt_solve(rp, rd, v_comb, dz, dy, ds)) {
        best.status = ConicStatus::SlowProgress;
        return best;
      }
      double boundary_frac = 0.99;
      if (mu < 1e-6) boundary_frac = 0.999;
      if (mu < 1e-9) boundary_frac = 0.9999;
      double alpha = boundary_frac * std::min(step_max(z, dz), step_max(s, ds));
      alpha = std::min(alpha, 1.0);
      z += alpha * dz;
      y += alpha * dy;
      s += alpha * ds;
    }
    best.status = ConicStatus::IterationLimit;
    return best;
  }

 private:
  using MatrixXd = Eigen::MatrixXd;
  using VectorXd = Eigen::VectorXd;

  const ConicProblem& prob_;
  IpmOptions opts_;

  int n_ = 0, m_ = 0, nu_ = 0;
  MatrixXd A_;
  VectorXd b_, c_;
  double b_norm_ = 0, c_norm_ = 0;
  double c_scale_ = 1.0;
  VectorXd row_scale_;
  std::vector<ipm_detail::BlockWork> work_;
  std::vector<int> free_cols_;
  std::vector<int> cone_cols_;

  // factorization state
  MatrixXd G_;       // A_c W^2 A_c^T (over conic columns)
  MatrixXd Af_;      // columns of free variables
  Eigen::LLT<MatrixXd> llt_g_;
  Eigen::LLT<MatrixXd> llt_schur_;
  bool have_free_ = false;

  void build() {
    n_ = prob_.total_dim();
    m_ = static_cast<int>(prob_.rows.size());
    if (prob_.blocks.empty()) throw std::invalid_argument("conic: at least one cone block");
    if (static_cast<int>(prob_.c.size()) != n_)
      throw std::invalid_argument("conic: objective length mismatch");

    const Eigen::Matrix3d t3 = ipm_detail::rsoc_to_soc();

    A_ = MatrixXd::Zero(m_, n_);
    b_ = VectorXd::Zero(m_);
    c_ = VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) c_[i] = prob_.c[i];
    for (int r = 0; r < m_; ++r) {
      const auto& row = prob_.rows[r];
      for (std::size_t k = 0; k < row.idx.size(); ++k) {
        const int col = row.idx[k];
        if (col < 0 || col >= n_) throw std::invalid_argument("conic: column index out of range");
        A_(r, col) += row.val[k];
      }
      b_[r] = row.rhs;
    }

    int off = 0;
    for (const auto& blk : prob_.blocks) {
      ipm_detail::BlockWork w;
      w.kind = blk.kind;
      w.dim = blk.dim;
      w.offset = off;
      w.count = blk.scalar_count();
      if (blk.kind == BlockKind::Rsoc) {
        if (blk.dim != 3) throw std::invalid_argument("conic: rsoc blocks have dimension 3");
        // map to the standard cone in place
        A_.middleCols(off, 3) = A_.middleCols(off, 3) * t3;
        c_.segment(off, 3) = t3 * c_.segment(off, 3);
      }
      switch (blk.kind) {
        case BlockKind::Free:
          for (int i = 0; i < w.count; ++i) free_cols_.push_back(off + i);
          break;
        case BlockKind::Nonneg:
          nu_ += blk.dim;
          for (int i = 0; i < w.count; ++i) cone_cols_.push_back(off + i);
          break;
        case BlockKind::Rsoc:
          nu_ += 2;
          for (int i = 0; i < w.count; ++i) cone_cols_.push_back(off + i);
          break;
        case BlockKind::Psd:
          nu_ += blk.dim;
          for (int i = 0; i < w.count; ++i) cone_cols_.push_back(off + i);
          break;
      }
      work_.push_back(std::move(w));
      off += blk.scalar_count();
    }
    have_free_ = !free_cols_.empty();

    // row equilibration and objective scaling
    row_scale_ = VectorXd::Ones(m_);
    for (int r = 0; r < m_; ++r) {
      double mx = A_.row(r).lpNorm<Eigen::Infinity>();
      if (mx > 1e-300) {
        row_scale_[r] = 1.0 / mx;
        A_.row(r) *= row_scale_[r];
        b_[r] *= row_scale_[r];
      }
    }
    c_scale_ = std::max(1.0, c_.lpNorm<Eigen::Infinity>());
    c_ /= c_scale_;
    b_norm_ = m_ ? b_.lpNorm<Eigen::Infinity>() : 0.0;
    c_norm_ = c_.lpNorm<Eigen::Infinity>();
  }

  double unscale_obj(double v) const { return v * c_scale_; }

  void initialize(VectorXd& z, VectorXd& s) const {
    z.setZero();
    s.setZero();
    const double zmag = std::max(1.0, std::sqrt(b_norm_));
    const double smag = std::max(1.0, std::sqrt(c_norm_));
    for (const auto& blk : work_) {
      switch (blk.kind) {
        case BlockKind::Free:
          break;
        case BlockKind::Nonneg:
          for (int i = 0; i < blk.count; ++i) {
            z[blk.offset + i] = zmag;
            s[blk.offset + i] = smag;
          }
          break;
        case BlockKind::Rsoc:
          z[blk.offset] = zmag;
          s[blk.offset] = smag;
          break;
        case BlockKind::Psd:
          for (int i = 0; i < blk.dim; ++i) {
            z[blk.offset + svec_index(blk.dim, i, i)] = zmag;
            s[blk.offset + svec_index(blk.dim, i, i)] = smag;
          }
          break;
      }
    }
  }

  double cone_dot(const VectorXd& z, const VectorXd& s) const {
    double g = 0;
    for (int col : cone_cols_) g += z[col] * s[col];
    return g;
  }

  double step_max(const VectorXd& u, const VectorXd& du) const {
    double alpha = kInf;
    for (const auto& blk : work_) {
      switch (blk.kind) {
        case BlockKind::Free:
          break;
        case BlockKind::Nonneg:
          for (int i = 0; i < blk.count; ++i) {
            const double d = du[blk.offset + i];
            if (d < 0) alpha = std::min(alpha, -u[blk.offset + i] / d);
          }
          break;
        case BlockKind::Rsoc:
          alpha = std::min(alpha, ipm_detail::soc_step_max(u.segment(blk.offset, 3),
                                                           du.segment(blk.offset, 3)));
          break;
        case BlockKind::Psd: {
          const MatrixXd Z = ipm_detail::mat_full(u.segment(blk.offset, blk.count), blk.dim);
          const MatrixXd D = ipm_detail::mat_full(du.segment(blk.offset, blk.count), blk.dim);
          Eigen::LLT<MatrixXd> llt = ipm_detail::robust_llt(Z);
          const MatrixXd L = llt.matrixL();
          MatrixXd T = L.triangularView<Eigen::Lower>().solve(D);
          T = L.triangularView<Eigen::Lower>().solve(T.transpose()).eval();
          Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (T + T.transpose()),
                                                     Eigen::EigenvaluesOnly);
          const double lmin = es.eigenvalues().minCoeff();
          if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
          break;
        }
      }
    }
    return alpha;
  }

  bool compute_scalings(const VectorXd& z, const VectorXd& s) {
    using namespace ipm_detail;
    for (auto& blk : work_) {
      switch (blk.kind) {
        case BlockKind::Free:
          break;
        case BlockKind::Nonneg: {
          blk.w_nn.resize(blk.count);
          blk.lambda.resize(blk.count);
          for (int i = 0; i < blk.count; ++i) {
            const double zi = std::max(z[blk.offset + i], 1e-300);
            const double si = std::max(s[blk.offset + i], 1e-300);
            blk.w_nn[i] = std::sqrt(zi / si);
            blk.lambda[i] = std::sqrt(zi * si);
          }
          break;
        }
        case BlockKind::Rsoc: {
          const VectorXd zb = z.segment(blk.offset, 3), sb = s.segment(blk.offset, 3);
          const double rz = soc_residual(zb), rs = soc_residual(sb);
          if (rz <= 0 || rs <= 0 || zb[0] <= 0 || sb[0] <= 0) return false;
          const double a = std::sqrt(rz), bnrm = std::sqrt(rs);
          Eigen::Vector3d zbar = zb / a, sbar = sb / bnrm;
          const double gamma = std::sqrt((1.0 + zbar.dot(sbar)) / 2.0);
          Eigen::Vector3d jsbar(sbar[0], -sbar[1], -sbar[2]);
          Eigen::Vector3d wbar = (zbar + jsbar) / (2.0 * gamma);
          Eigen::Matrix3d J = Eigen::Vector3d(1, -1, -1).asDiagonal();
          const double eta = std::sqrt(a / bnrm);
          // W = eta * P(wbar)^{1/2}; then W s = W^{-1} z = lambda
          const double w0 = wbar[0];
          const Eigen::Vector2d wt = wbar.tail<2>();
          Eigen::Matrix3d Wbar;
          Wbar(0, 0) = w0;
          Wbar.block<1, 2>(0, 1) = wt.transpose();
          Wbar.block<2, 1>(1, 0) = wt;
          Wbar.block<2, 2>(1, 1) =
              Eigen::Matrix2d::Identity() + wt * wt.transpose() / (1.0 + w0);
          blk.w_soc = eta * Wbar;
          blk.w_soc_inv = (1.0 / eta) * (J * Wbar * J);
          blk.lambda = blk.w_soc * sb;
          break;
        }
        case BlockKind::Psd: {
          const MatrixXd Z = mat_full(z.segment(blk.offset, blk.count), blk.dim);
          const MatrixXd S = mat_full(s.segment(blk.offset, blk.count), blk.dim);
          Eigen::LLT<MatrixXd> lz = robust_llt(Z), ls = robust_llt(S);
          if (lz.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
          const MatrixXd L1 = lz.matrixL(), L2 = ls.matrixL();
          Eigen::JacobiSVD<MatrixXd> svd(L2.transpose() * L1,
                                         Eigen::ComputeFullU | Eigen::ComputeFullV);
          VectorXd sig = svd.singularValues();
          for (int i = 0; i < sig.size(); ++i) sig[i] = std::max(sig[i], 1e-150);
          const VectorXd isq = sig.array().sqrt().inverse();
          blk.r = L1 * svd.matrixV() * isq.asDiagonal();
          blk.rti = L2 * svd.matrixU() * isq.asDiagonal();
          blk.lambda = sig;
          break;
        }
      }
    }
    return true;
  }

  // out[block range] = W * v_scaled  (psd: r mat(v) r^T)
  void scatter_scaled(const ipm_detail::BlockWork& blk, const VectorXd& v, VectorXd& out) const {
    using namespace ipm_detail;
    switch (blk.kind) {
      case BlockKind::Free:
        out.segment(blk.offset, blk.count).setZero();
        break;
      case BlockKind::Nonneg:
        out.segment(blk.offset, blk.count) = blk.w_nn.cwiseProduct(v);
        break;
      case BlockKind::Rsoc:
        out.segment(blk.offset, 3) = blk.w_soc * v;
        break;
      case BlockKind::Psd: {
        const MatrixXd V = mat_full(v, blk.dim);
        out.segment(blk.offset, blk.count) = svec_full(blk.r * V * blk.r.transpose());
        break;
      }
    }
  }

  void build_corrector_rhs(double target, const VectorXd& z, const VectorXd& s,
                           const VectorXd& dz_a, const VectorXd& ds_a, VectorXd& v) const {
    using namespace ipm_detail;
    (void)z;
    (void)s;
    for (const auto& blk : work_) {
      switch (blk.kind) {
        case BlockKind::Free:
          v.segment(blk.offset, blk.count).setZero();
          break;
        case BlockKind::Nonneg: {
          for (int i = 0; i < blk.count; ++i) {
            const double dzs = dz_a[blk.offset + i] / blk.w_nn[i];
            const double dss = ds_a[blk.offset + i] * blk.w_nn[i];
            const double lam = blk.lambda[i];
            v[blk.offset + i] = -lam + (target - dzs * dss) / lam;
          }
          break;
        }
        case BlockKind::Rsoc: {
          const Eigen::Vector3d dzs = blk.w_soc_inv * dz_a.segment(blk.offset, 3);
          const Eigen::Vector3d dss = blk.w_soc * ds_a.segment(blk.offset, 3);
          // Jordan product u o v on the second-order cone
          Eigen::Vector3d prod(dzs.dot(dss), dzs[0] * dss[1] + dss[0] * dzs[1],
                               dzs[0] * dss[2] + dss[0] * dzs[2]);
          Eigen::Vector3d rhs(target - prod[0], -prod[1], -prod[2]);
          // solve arrow(lambda) u = rhs
          const Eigen::Vector3d& lam = blk.lambda;
          Eigen::Matrix3d arrow;
          arrow << lam[0], lam[1], lam[2], lam[1], lam[0], 0, lam[2], 0, lam[0];
          Eigen::Vector3d u = arrow.colPivHouseholderQr().solve(rhs);
          v.segment(blk.offset, 3) = -lam + u;
          break;
        }
        case BlockKind::Psd: {
          const MatrixXd Dz =
              blk.rti.transpose() * mat_full(dz_a.segment(blk.offset, blk.count), blk.dim) * blk.rti;
          const MatrixXd Ds =
              blk.r.transpose() * mat_full(ds_a.segment(blk.offset, blk.count), blk.dim) * blk.r;
          MatrixXd H = 0.5 * (Dz * Ds + Ds.transpose() * Dz.transpose());
          H = 0.5 * (H + H.transpose()).eval();
          MatrixXd R = -H;
          R.diagonal().array() += target;
          // apply L_lambda^{-1} entrywise, then subtract lambda on the diagonal
          MatrixXd U(blk.dim, blk.dim);
          for (int i = 0; i < blk.dim; ++i)
            for (int j = 0; j < blk.dim; ++j)
              U(i, j) = 2.0 * R(i, j) / (blk.lambda[i] + blk.lambda[j]);
          U.diagonal() -= blk.lambda;
          v.segment(blk.offset, blk.count) = svec_full(U);
          break;
        }
      }
    }
  }

  bool factorize() {
    using namespace ipm_detail;
    const int nf = static_cast<int>(free_cols_.size());
    // scaled conic columns: B = A_c W (per block), then G = B B^T
    G_ = MatrixXd::Zero(m_, m_);
    MatrixXd B(m_, static_cast<int>(cone_cols_.size()));
    int bcol = 0;
    for (const auto& blk : work_) {
      switch (blk.kind) {
        case BlockKind::Free:
          break;
        case BlockKind::Nonneg:
          for (int i = 0; i < blk.count; ++i)
            B.col(bcol++) = A_.col(blk.offset + i) * blk.w_nn[i];
          break;
        case BlockKind::Rsoc: {
          MatrixXd blkcols = A_.middleCols(blk.offset, 3) * blk.w_soc;
          for (int i = 0; i < 3; ++i) B.col(bcol++) = blkcols.col(i);
          break;
        }
        case BlockKind::Psd: {
          // row r of the psd part maps to svec(r^T mat(a_r) r)
          for (int rr = 0; rr < m_; ++rr) {
            const MatrixXd Ar = mat_full(A_.row(rr).segment(blk.offset, blk.count), blk.dim);
            const VectorXd ph = svec_full(blk.r.transpose() * Ar * blk.r);
            B.block(rr, bcol, 1, blk.count) = ph.transpose();
          }
          bcol += blk.count;
          break;
        }
      }
    }
    G_.noalias() = B * B.transpose();

    MatrixXd Greg = G_;
    const double delta = 1e-12 * std::max(1.0, G_.trace() / std::max(1, m_));
    Greg.diagonal().array() += delta;
    llt_g_.compute(Greg);
    if (llt_g_.info() != Eigen::Success) {
      Greg.diagonal().array() += 1e-8 * std::max(1.0, G_.trace() / std::max(1, m_));
      llt_g_.compute(Greg);
      if (llt_g_.info() != Eigen::Success) return false;
    }

    if (have_free_) {
      Af_.resize(m_, nf);
      for (int k = 0; k < nf; ++k) Af_.col(k) = A_.col(free_cols_[k]);
      MatrixXd GiAf = llt_g_.solve(Af_);
      MatrixXd S = Af_.transpose() * GiAf;
      S.diagonal().array() += 1e-12 * std::max(1.0, S.trace() / std::max(1, nf));
      llt_schur_.compute(S);
      if (llt_schur_.info() != Eigen::Success) {
        S.diagonal().array() += 1e-8 * std::max(1.0, S.trace() / std::max(1, nf));
        llt_schur_.compute(S);
        if (llt_schur_.info() != Eigen::Success) return false;
      }
    }
    return true;
  }

  // solve the augmented system  [G Af; Af^T 0] [dy; dzf] = [r1; r2]
  void solve_augmented(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& dzf) const {
    const int nf = static_cast<int>(free_cols_.size());
    dy.resize(m_);
    dzf.resize(nf);
    auto solve_once = [&](const VectorXd& q1, const VectorXd& q2, VectorXd& oy, VectorXd& of) {
      if (nf > 0) {
        const VectorXd gi_q1 = llt_g_.solve(q1);
        of = llt_schur_.solve(Af_.transpose() * gi_q1 - q2);
        oy = llt_g_.solve(q1 - Af_ * of);
      } else {
        of.resize(0);
        oy = llt_g_.solve(q1);
      }
    };
    solve_once(r1, r2, dy, dzf);
    // two rounds of iterative refinement against the unregularized blocks
    for (int round = 0; round < 2; ++round) {
      VectorXd res1 = r1 - G_ * dy;
      if (nf > 0) res1 -= Af_ * dzf;
      VectorXd res2 = nf > 0 ? VectorXd(r2 - Af_.transpose() * dy) : VectorXd();
      VectorXd cy, cf;
      solve_once(res1, res2, cy, cf);
      dy += cy;
      if (nf > 0) dzf += cf;
    }
  }

  bool kkt_solve(const VectorXd& rp, const VectorXd& rd, const VectorXd& v, VectorXd& dz,
                 VectorXd& dy, VectorXd& ds) const {
    using namespace ipm_detail;
    // t = W v, u = W^2 rd_c
    VectorXd t = VectorXd::Zero(n_), u = VectorXd::Zero(n_);
    for (const auto& blk : work_) {
      if (blk.kind == BlockKind::Free) continue;
      scatter_scaled(blk, v.segment(blk.offset, blk.count), t);
      VectorXd wrd(blk.count);
      switch (blk.kind) {
        case BlockKind::Nonneg:
          wrd = blk.w_nn.cwiseProduct(rd.segment(blk.offset, blk.count));
          u.segment(blk.offset, blk.count) = blk.w_nn.cwiseProduct(wrd);
          break;
        case BlockKind::Rsoc:
          u.segment(blk.offset, 3) = blk.w_soc * (blk.w_soc * rd.segment(blk.offset, 3));
          break;
        case BlockKind::Psd: {
          const MatrixXd Rd = mat_full(rd.segment(blk.offset, blk.count), blk.dim);
          const MatrixXd G = blk.r * blk.r.transpose();
          u.segment(blk.offset, blk.count) = svec_full(G * Rd * G);
          break;
        }
        default:
          break;
      }
    }

    VectorXd r1 = rp;
    for (int col : cone_cols_) r1 -= A_.col(col) * (t[col] - u[col]);
    VectorXd r2(free_cols_.size());
    for (std::size_t k = 0; k < free_cols_.size(); ++k) r2[k] = rd[free_cols_[k]];

    VectorXd dzf;
    solve_augmented(r1, r2, dy, dzf);

    ds = rd - A_.transpose() * dy;
    dz.resize(n_);
    dz.setZero();
    // dz_c = t - u + W^2 A_c^T dy
    VectorXd aty = A_.transpose() * dy;
    for (const auto& blk : work_) {
      if (blk.kind == BlockKind::Free) continue;
      switch (blk.kind) {
        case BlockKind::Nonneg:
          for (int i = 0; i < blk.count; ++i) {
            const int col = blk.offset + i;
            dz[col] = t[col] - u[col] + blk.w_nn[i] * blk.w_nn[i] * aty[col];
          }
          break;
        case BlockKind::Rsoc:
          dz.segment(blk.offset, 3) = t.segment(blk.offset, 3) - u.segment(blk.offset, 3) +
                                      blk.w_soc * (blk.w_soc * aty.segment(blk.offset, 3));
          break;
        case BlockKind::Psd: {
          const MatrixXd At = mat_full(aty.segment(blk.offset, blk.count), blk.dim);
          const MatrixXd G = blk.r * blk.r.transpose();
          dz.segment(blk.offset, blk.count) = t.segment(blk.offset, blk.count) -
                                              u.segment(blk.offset, blk.count) +
                                              svec_full(G * At * G);
          break;
        }
        default:
          break;
      }
    }
    for (std::size_t k = 0; k < free_cols_.size(); ++k) {
      dz[free_cols_[k]] = dzf[k];
      ds[free_cols_[k]] = 0.0;
    }
    return dz.allFinite() && dy.allFinite() && ds.allFinite();
  }

  bool detect_primal_infeasible(ConicSolution& out, const VectorXd& y, const VectorXd& s) const {
    const double bty = b_.dot(y);
    if (bty <= 1e-12 * std::max(1.0, y.lpNorm<Eigen::Infinity>())) return false;
    VectorXd resid = A_.transpose() * y + s;
    const double rel = resid.lpNorm<Eigen::Infinity>() / bty;
    if (rel > opts_.inf_tol * std::max(1.0, c_norm_)) return false;
    // certificate: scale to b^T y = 1, check the slack is (near) dual-cone member
    out.status = ConicStatus::PrimalInfeasible;
    out.y = unscale_y(y / bty);
    out.s = (s / bty) * c_scale_;
    out.z = VectorXd::Zero(n_);
    out.primal_obj = kInf;
    out.dual_obj = kInf;
    out.rp = rel;
    return true;
  }

  bool detect_dual_infeasible(ConicSolution& out, const VectorXd& z) const {
    const double ctz = c_.dot(z);
    if (ctz >= -1e-12 * std::max(1.0, z.lpNorm<Eigen::Infinity>())) return false;
    const double rel = (A_ * z).lpNorm<Eigen::Infinity>() / (-ctz);
    if (rel > opts_.inf_tol * std::max(1.0, b_norm_)) return false;
    out.status = ConicStatus::DualInfeasible;
    out.z = back_transform_z(z / (-ctz));
    out.y = VectorXd::Zero(m_);
    out.s = VectorXd::Zero(n_);
    out.primal_obj = -kInf;
    out.dual_obj = -kInf;
    out.rp = rel;
    return true;
  }

  VectorXd unscale_y(const VectorXd& y) const {
    VectorXd out = y;
    for (int r = 0; r < m_; ++r) out[r] *= row_scale_[r] * c_scale_;
    return out;
  }

  VectorXd back_transform_z(const VectorXd& z) const {
    VectorXd out = z;
    const Eigen::Matrix3d t3 = ipm_detail::rsoc_to_soc();
    for (const auto& blk : work_)
      if (blk.kind == BlockKind::Rsoc) out.segment(blk.offset, 3) = t3 * z.segment(blk.offset, 3);
    return out;
  }

  void fill_solution(ConicSolution& out, const VectorXd& z, const VectorXd& y, const VectorXd& s,
                     double pobj, double dobj, double rp, double rd, double gap) const {
    out.z = back_transform_z(z);
    out.y = unscale_y(y);
    VectorXd su = s * c_scale_;
    const Eigen::Matrix3d t3 = ipm_detail::rsoc_to_soc();
    for (const auto& blk : work_)
      if (blk.kind == BlockKind::Rsoc) su.segment(blk.offset, 3) = t3 * s.segment(blk.offset, 3) * c_scale_;
    out.s = su;
    out.primal_obj = unscale_obj(pobj);
    out.dual_obj = unscale_obj(dobj);
    out.rp = rp;
    out.rd = rd;
    out.gap = gap;
  }

  ConicSolution solve_unconstrained() const {
    // no equality rows: z = 0 is optimal iff c lies in the dual cone
    ConicSolution out;
    out.z = VectorXd::Zero(n_);
    out.y = VectorXd(0);
    out.s = c_ * c_scale_;
    out.primal_obj = 0.0;
    out.dual_obj = 0.0;
    out.rp = out.rd = out.gap = 0.0;
    bool dual_ok = true;
    for (const auto& blk : work_) {
      switch (blk.kind) {
        case BlockKind::Free:
          for (int i = 0; i < blk.count; ++i)
            if (std::abs(c_[blk.offset + i]) > opts_.tol) dual_ok = false;
          break;
        case BlockKind::Nonneg:
          for (int i = 0; i < blk.count; ++i)
            if (c_[blk.offset + i] < -opts_.tol) dual_ok = false;
          break;
        case BlockKind::Rsoc: {
          const VectorXd cb = c_.segment(blk.offset, 3);
          if (cb[0] < -opts_.tol || ipm_detail::soc_residual(cb) < -opts_.tol) dual_ok = false;
          break;
        }
        case BlockKind::Psd: {
          const MatrixXd C = ipm_detail::mat_full(c_.segment(blk.offset, blk.count), blk.dim);
          Eigen::SelfAdjointEigenSolver<MatrixXd> es(C, Eigen::EigenvaluesOnly);
          if (es.eigenvalues().minCoeff() < -opts_.tol) dual_ok = false;
          break;
        }
      }
    }
    if (dual_ok) {
      out.status = ConicStatus::Optimal;
      ConicSolution fixed = out;
      fixed.z = back_transform_z(out.z);
      VectorXd su = out.s;
      const Eigen::Matrix3d t3 = ipm_detail::rsoc_to_soc();
      for (const auto& blk : work_)
        if (blk.kind == BlockKind::Rsoc)
          su.segment(blk.offset, 3) = t3 * (c_.segment(blk.offset, 3) * c_scale_);
      fixed.s = su;
      return fixed;
    }
    out.status = ConicStatus::DualInfeasible;
    return out;
  }
};

inline ConicSolution solve_conic(const ConicProblem& p, const IpmOptions& opts = {}) {
  // all-zero rows are resolved up front so the normal equations stay regular
  for (const auto& row : p.rows) {
    bool all_zero = true;
    for (double v : row.val)
      if (v != 0.0) all_zero = false;
    if (all_zero && std::abs(row.rhs) > 1e-12) {
      ConicSolution out;
      out.status = ConicStatus::PrimalInfeasible;
      const int m = static_cast<int>(p.rows.size());
      out.y = Eigen::VectorXd::Zero(m);
      for (int r = 0; r < m; ++r)
        if (&p.rows[r] == &row) out.y[r] = row.rhs > 0 ? 1.0 / row.rhs : 1.0 / row.rhs;
      out.s = Eigen::VectorXd::Zero(p.total_dim());
      out.z = Eigen::VectorXd::Zero(p.total_dim());
      out.primal_obj = kInf;
      out.dual_obj = kInf;
      return out;
    }
  }
  ConicSolver solver(p, opts);
  return solver.solve();
}

}  // namespace isdp
