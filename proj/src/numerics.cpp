#include "latlab/numerics.hpp"

#include <algorithm>

namespace latlab {

std::pair<cplx, cplx> eig2x2(const Mat2& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double lo = 0.5 * (tr - root);
    const double hi = 0.5 * (tr + root);
    return {cplx(lo, 0.0), cplx(hi, 0.0)};
  }
  const double re = 0.5 * tr;
  const double im = 0.5 * std::sqrt(-disc);
  return {cplx(re, im), cplx(re, -im)};
}

namespace {

struct Echelon {
  CMat r;
  std::vector<int> pivot_cols;
};

// Forward elimination with partial (row) pivoting. A column without an
// acceptable pivot is skipped and recorded as free by omission.
Echelon reduce_rows(CMat m, double thresh) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  Echelon e;
  Eigen::Index pivot_row = 0;
  for (Eigen::Index col = 0; col < cols && pivot_row < rows; ++col) {
    Eigen::Index best = pivot_row;
    double best_mag = std::abs(m(pivot_row, col));
    for (Eigen::Index r = pivot_row + 1; r < rows; ++r) {
      const double mag = std::abs(m(r, col));
      if (mag > best_mag) {
        best = r;
        best_mag = mag;
      }
    }
    if (!(best_mag > thresh)) continue;
    if (best != pivot_row) m.row(best).swap(m.row(pivot_row));
    for (Eigen::Index r = pivot_row + 1; r < rows; ++r) {
      const cplx factor = m(r, col) / m(pivot_row, col);
      m(r, col) = 0.0;
      for (Eigen::Index c = col + 1; c < cols; ++c) m(r, c) -= factor * m(pivot_row, c);
    }
    e.pivot_cols.push_back(static_cast<int>(col));
    ++pivot_row;
  }
  e.r = std::move(m);
  return e;
}

double max_entry_magnitude(const CMat& m) {
  double mx = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) mx = std::max(mx, std::abs(m(r, c)));
  return mx;
}

}  // namespace

int rank_with_tol(const CMat& m, double tol) {
  if (m.size() == 0) return 0;
  const double thresh = tol * max_entry_magnitude(m);
  return static_cast<int>(reduce_rows(m, thresh).pivot_cols.size());
}

std::optional<CVec> null_direction(const CMat& m, double tol) {
  if (m.size() == 0) return std::nullopt;
  const Eigen::Index cols = m.cols();
  const double thresh = tol * max_entry_magnitude(m);
  const Echelon e = reduce_rows(m, thresh);
  const int rank = static_cast<int>(e.pivot_cols.size());
  if (rank >= cols) return std::nullopt;

  // First free column gets 1, remaining free columns 0; pivot variables by
  // back substitution through the echelon rows.
  int free_col = 0;
  {
    std::vector<char> is_pivot(static_cast<std::size_t>(cols), 0);
    for (int c : e.pivot_cols) is_pivot[static_cast<std::size_t>(c)] = 1;
    while (free_col < cols && is_pivot[static_cast<std::size_t>(free_col)]) ++free_col;
  }
  CVec v = CVec::Zero(cols);
  v(free_col) = 1.0;
  for (int i = rank - 1; i >= 0; --i) {
    const int pc = e.pivot_cols[static_cast<std::size_t>(i)];
    cplx acc = 0.0;
    for (Eigen::Index c = pc + 1; c < cols; ++c) acc += e.r(i, c) * v(c);
    v(pc) = -acc / e.r(i, pc);
  }
  v.normalize();
  return v;
}

}  // namespace latlab
