#include "sdx/motionseg.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sdx/operators.hpp"

namespace sdx {

namespace {

void check_flow(const FlowField& flow, const char* who) {
  if (flow.rows < 1 || flow.cols < 1 || flow.u.rows() != flow.rows ||
      flow.u.cols() != flow.cols || flow.v.rows() != flow.rows || flow.v.cols() != flow.cols)
    throw ParameterError(std::string(who) + ": inconsistent flow dimensions");
  if (!flow.u.allFinite() || !flow.v.allFinite())
    throw ParameterError(std::string(who) + ": flow has non-finite values");
}

Mat params_to_matrix(const Vec& a) {
  Mat h(3, 3);
  h << a[1], a[2], a[0],
       a[4], a[5], a[3],
       a[6], a[7], 1.0;
  return h;
}

Vec matrix_to_params(const Mat& h) {
  if (std::abs(h(2, 2)) < 1e-12)
    throw DegeneracyError("homography denormalization hit a vanishing scale");
  const Mat hn = h / h(2, 2);
  Vec a(8);
  a << hn(0, 2), hn(0, 0), hn(0, 1), hn(1, 2), hn(1, 0), hn(1, 1), hn(2, 0), hn(2, 1);
  return a;
}

}  // namespace

HomographySystem build_system(const FlowField& flow) {
  check_flow(flow, "build_system");
  HomographySystem sys;
  sys.rows = flow.rows;
  sys.cols = flow.cols;
  const int n = flow.rows * flow.cols;
  sys.px.resize(n, 8);
  sys.py.resize(n, 8);
  sys.bx.resize(n);
  sys.by.resize(n);
  int i = 0;
  for (int c = 0; c < flow.cols; ++c)
    for (int r = 0; r < flow.rows; ++r, ++i) {
      const double x = c, y = r;
      const double bx = x + flow.u(r, c);
      const double by = y + flow.v(r, c);
      sys.px.row(i) << 1, x, y, 0, 0, 0, -x * bx, -y * bx;
      sys.py.row(i) << 0, 0, 0, 1, x, y, -x * by, -y * by;
      sys.bx[i] = bx;
      sys.by[i] = by;
    }
  return sys;
}

std::pair<double, double> homography_apply(const Vec& a, double x, double y) {
  const double denom = 1.0 + a[6] * x + a[7] * y;
  return {(a[0] + a[1] * x + a[2] * y) / denom, (a[3] + a[4] * x + a[5] * y) / denom};
}

FlowField homography_flow(const Vec& a, int rows, int cols) {
  FlowField flow;
  flow.rows = rows;
  flow.cols = cols;
  flow.u.resize(rows, cols);
  flow.v.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto [xn, yn] = homography_apply(a, c, r);
      flow.u(r, c) = xn - c;
      flow.v(r, c) = yn - r;
    }
  return flow;
}

namespace {

Vec solve_stacked(const Mat& px, const Mat& py, const Vec& bx, const Vec& by, bool affine) {
  const Eigen::Index n = px.rows();
  const int cols = affine ? 6 : 8;
  Mat stacked(2 * n, cols);
  stacked.topRows(n) = px.leftCols(cols);
  stacked.bottomRows(n) = py.leftCols(cols);
  Vec rhs(2 * n);
  rhs.head(n) = bx;
  rhs.tail(n) = by;
  Eigen::ColPivHouseholderQR<Mat> qr(stacked);
  if (qr.rank() < cols)
    throw DegeneracyError("global motion fit: design matrix rank " +
                          std::to_string(qr.rank()) + " < " + std::to_string(cols));
  Vec a = Vec::Zero(8);
  a.head(cols) = qr.solve(rhs);
  return a;
}

}  // namespace

Vec fit_global_lsq(const HomographySystem& sys, bool normalize) {
  if (!normalize)
    return solve_stacked(sys.px, sys.py, sys.bx, sys.by, false);

  // Rebuild the system in [-1,1] coordinates, solve, then conjugate back.
  const double sx = std::max(1.0, (sys.cols - 1) / 2.0);
  const double sy = std::max(1.0, (sys.rows - 1) / 2.0);
  const double cx = (sys.cols - 1) / 2.0;
  const double cy = (sys.rows - 1) / 2.0;
  const int n = sys.rows * sys.cols;
  Mat px(n, 8), py(n, 8);
  Vec bx(n), by(n);
  int i = 0;
  for (int c = 0; c < sys.cols; ++c)
    for (int r = 0; r < sys.rows; ++r, ++i) {
      const double x = (c - cx) / sx;
      const double y = (r - cy) / sy;
      const double bxn = (sys.bx[i] - cx) / sx;
      const double byn = (sys.by[i] - cy) / sy;
      px.row(i) << 1, x, y, 0, 0, 0, -x * bxn, -y * bxn;
      py.row(i) << 0, 0, 0, 1, x, y, -x * byn, -y * byn;
      bx[i] = bxn;
      by[i] = byn;
    }
  const Vec a_norm = solve_stacked(px, py, bx, by, false);

  Mat t(3, 3);
  t << 1.0 / sx, 0, -cx / sx,
       0, 1.0 / sy, -cy / sy,
       0, 0, 1;
  const Mat h = t.inverse() * params_to_matrix(a_norm) * t;
  return matrix_to_params(h);
}

MotionSegResult motion_masked_segment(const FlowField& flow, const MotionSegConfig& cfg) {
  check_flow(flow, "motion_masked_segment");
  const HomographySystem sys = build_system(flow);
  const int n = flow.rows * flow.cols;
  const DifferenceOperator diffop = DifferenceOperator::make_grid(flow.rows, flow.cols);
  const SpMat dtd = SpMat(diffop.stacked.transpose() * diffop.stacked);
  const int params = cfg.affine ? 6 : 8;

  MotionSegResult result;
  // Pixels the plain global fit cannot explain start out masked; without
  // this the contaminated first fit inflates every residual and the mask
  // grabs the whole frame.
  Vec w = Vec::Zero(n);
  {
    const Vec a0 = fit_global_lsq(sys);
    Vec residual(n);
    for (int i = 0; i < n; ++i)
      residual[i] = std::hypot(sys.bx[i] - sys.px.row(i) * a0, sys.by[i] - sys.py.row(i) * a0);
    Vec sorted = residual;
    std::nth_element(sorted.data(), sorted.data() + n / 2, sorted.data() + n);
    const double cut = std::max(3.0 * sorted[n / 2], 0.5);
    for (int i = 0; i < n; ++i) w[i] = residual[i] > cut ? 1.0 : 0.0;
  }
  Vec y = w;
  Vec z = diffop.stacked * w;
  Vec u1 = Vec::Zero(n);
  Vec u2 = Vec::Zero(z.size());
  // The sparse channel starts at the observed positions so that masked pixels
  // are explained exactly from the first iteration.
  Vec sx = sys.bx;
  Vec sy = sys.by;
  Vec a = Vec::Zero(8);

  Eigen::SimplicialLDLT<SpMat> w_solver;
  {
    SpMat identity(n, n);
    identity.setIdentity();
    w_solver.analyzePattern(SpMat(identity + dtd));
  }

  const auto loss_at = [&](const Vec& pxa, const Vec& pya) {
    const Vec w_star = (1.0 - w.array()).matrix();
    const Vec rx = sys.bx - w_star.cwiseProduct(pxa) - w.cwiseProduct(sx);
    const Vec ry = sys.by - w_star.cwiseProduct(pya) - w.cwiseProduct(sy);
    return 0.5 * rx.squaredNorm() + 0.5 * ry.squaredNorm() +
           cfg.lambda1 * (sx.lpNorm<1>() + sy.lpNorm<1>()) + cfg.lambda2 * w.lpNorm<1>() +
           cfg.lambda3 * (diffop.stacked * w).lpNorm<1>();
  };

  double prev_loss = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    // As in the image decomposition, the channel fits couple through the
    // thresholded mask so fractional values cannot bleed the moving pixels
    // into the global fit.
    Vec wb(n);
    for (int i = 0; i < n; ++i) wb[i] = w[i] >= cfg.binarize_threshold ? 1.0 : 0.0;
    const Vec wb_star = (1.0 - wb.array()).matrix();

    // Global parameters from the unmasked pixels.
    {
      Mat stacked(2 * n, params);
      stacked.topRows(n) = wb_star.asDiagonal() * sys.px.leftCols(params);
      stacked.bottomRows(n) = wb_star.asDiagonal() * sys.py.leftCols(params);
      Vec rhs(2 * n);
      rhs.head(n) = wb_star.cwiseProduct(sys.bx);
      rhs.tail(n) = wb_star.cwiseProduct(sys.by);
      const Eigen::ColPivHouseholderQR<Mat> qr(stacked);
      if (qr.rank() < params)
        throw DegeneracyError("motion_masked_segment: weighted system lost rank");
      a.setZero();
      a.head(params) = qr.solve(rhs);
    }
    const Vec pxa = sys.px * a;
    const Vec pya = sys.py * a;

    // Exact elementwise prox for the free sparse channels.
    for (int i = 0; i < n; ++i) {
      if (wb[i] > 0.0) {
        sx[i] = soft_threshold(sys.bx[i], cfg.lambda1);
        sy[i] = soft_threshold(sys.by[i], cfg.lambda1);
      }
      // Unmasked pixels keep their previous value; it does not enter the model.
    }

    // Quadratic mask solve, then box projection.
    const Vec cx_vec = pxa - sx;
    const Vec cy_vec = pya - sy;
    SpMat m_w = SpMat(cfg.rho2 * dtd);
    for (int i = 0; i < n; ++i)
      m_w.coeffRef(i, i) += cx_vec[i] * cx_vec[i] + cy_vec[i] * cy_vec[i] + cfg.rho1;
    w_solver.factorize(m_w);
    if (w_solver.info() != Eigen::Success)
      throw NumericalError("motion_masked_segment: mask system factorization failed");
    const Vec rhs = cx_vec.cwiseProduct(pxa - sys.bx) + cy_vec.cwiseProduct(pya - sys.by) +
                    cfg.rho1 * y + cfg.rho2 * (diffop.stacked.transpose() * z) - u1 -
                    diffop.stacked.transpose() * u2;
    w = project_box01(w_solver.solve(rhs));

    y = soft_threshold(w + u1 / cfg.rho1, cfg.lambda2 / cfg.rho1);
    const Vec dw = diffop.stacked * w;
    z = soft_threshold(dw + u2 / cfg.rho2, cfg.lambda3 / cfg.rho2);
    u1 += cfg.rho1 * (w - y);
    u2 += cfg.rho2 * (dw - z);

    const double loss = loss_at(pxa, pya);
    if (!std::isfinite(loss))
      throw NumericalError("motion_masked_segment: non-finite loss at iteration " +
                           std::to_string(it));
    result.loss_trace.push_back(loss);
    if (std::isfinite(prev_loss) &&
        std::abs(loss - prev_loss) <= cfg.rel_tol * std::max(std::abs(prev_loss), 1e-12)) {
      result.converged = true;
      ++it;
      break;
    }
    prev_loss = loss;
  }

  result.iterations = it;
  result.a = a;
  result.sx = sx;
  result.sy = sy;
  result.w_continuous = w;
  result.w_binary.resize(n);
  for (int i = 0; i < n; ++i) result.w_binary[i] = w[i] >= cfg.binarize_threshold;
  return result;
}

std::vector<std::uint8_t> lsq_threshold_baseline(const FlowField& flow, double threshold) {
  const HomographySystem sys = build_system(flow);
  const Vec a = fit_global_lsq(sys);
  const Vec rx = sys.bx - sys.px * a;
  const Vec ry = sys.by - sys.py * a;
  std::vector<std::uint8_t> mask(rx.size());
  for (Eigen::Index i = 0; i < rx.size(); ++i)
    mask[i] = std::hypot(rx[i], ry[i]) > threshold;
  return mask;
}

FlowField load_flow(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".flo") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open flow file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "PIEH", 4) != 0) throw DataError("bad .flo magic in " + path);
    std::int32_t cols = 0, rows = 0;
    in.read(reinterpret_cast<char*>(&cols), 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    if (cols < 1 || rows < 1 || cols > 1 << 16 || rows > 1 << 16)
      throw DataError("bad .flo dimensions in " + path);
    FlowField flow;
    flow.rows = rows;
    flow.cols = cols;
    flow.u.resize(rows, cols);
    flow.v.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        float uv[2];
        in.read(reinterpret_cast<char*>(uv), 8);
        if (!in) throw DataError("truncated .flo data in " + path);
        flow.u(r, c) = uv[0];
        flow.v(r, c) = uv[1];
      }
    return flow;
  }

  // CSV alternative: first line "rows,cols", then rows*cols lines "u,v"
  // in row-major order.
  std::ifstream in(path);
  if (!in) throw DataError("cannot open flow file: " + path);
  char sep = 0;
  int rows = 0, cols = 0;
  if (!(in >> rows >> sep >> cols)) throw DataError("bad flow CSV header in " + path);
  FlowField flow;
  flow.rows = rows;
  flow.cols = cols;
  flow.u.resize(rows, cols);
  flow.v.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double u = 0, v = 0;
      if (!(in >> u >> sep >> v)) throw DataError("truncated flow CSV in " + path);
      flow.u(r, c) = u;
      flow.v(r, c) = v;
    }
  return flow;
}

void save_flow_flo(const FlowField& flow, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.write("PIEH", 4);
  const std::int32_t cols = flow.cols, rows = flow.rows;
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const float uv[2] = {static_cast<float>(flow.u(r, c)), static_cast<float>(flow.v(r, c))};
      out.write(reinterpret_cast<const char*>(uv), 8);
    }
  if (!out) throw DataError("write failed: " + path);
}

void save_flow_csv(const FlowField& flow, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << flow.rows << "," << flow.cols << "\n";
  out.precision(17);
  for (int r = 0; r < flow.rows; ++r)
    for (int c = 0; c < flow.cols; ++c) out << flow.u(r, c) << "," << flow.v(r, c) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace sdx
