// SPDX-License-Identifier: Apache-2.0
#include "dapt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dapt {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": shape mismatch " + shape_str(a.dims()) + " vs " +
                              shape_str(b.dims()));
}

void require_rank12(const std::string& op, const Tensor& t) {
  if (t.rank() < 1 || t.rank() > 2)
    throw std::invalid_argument(op + ": expected rank 1 or 2, got " + shape_str(t.dims()));
}

// (rows, cols) treating rank-1 as a single row
std::pair<int, int> as_matrix(const Tensor& t) {
  if (t.rank() == 1) return {1, t.dims()[0]};
  return {t.dims()[0], t.dims()[1]};
}

Tensor make_out(std::vector<int> dims, bool rg) {
  Tensor t(std::move(dims));
  if (rg) t.set_requires_grad(true);
  return t;
}

constexpr double kGeluCoef = 0.044715;
const double kGeluScale = std::sqrt(2.0 / 3.14159265358979323846);

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank12("matmul", a);
  if (b.rank() != 2) throw std::invalid_argument("matmul: rhs must be rank 2, got " + shape_str(b.dims()));
  auto [n, k] = as_matrix(a);
  if (k != b.dims()[0]) shape_error("matmul", a, b);
  const int m = b.dims()[1];

  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make_out(a.rank() == 1 ? std::vector<int>{m} : std::vector<int>{n, m}, rg);
  const double* av = a.data();
  const double* bv = b.data();
  double* ov = out.data();
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (int j = 0; j < m; ++j) ov[i * m + j] += aip * bv[p * m + j];
    }

  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(
        [ai, bi, oi, n, k, m]() {
          const double* og = oi->grad.data();
          if (ai->requires_grad) {
            double* ag = ai->grad.data();
            const double* bv2 = bi->value.data();
            for (int i = 0; i < n; ++i)
              for (int p = 0; p < k; ++p) {
                double acc = 0.0;
                for (int j = 0; j < m; ++j) acc += og[i * m + j] * bv2[p * m + j];
                ag[i * k + p] += acc;
              }
          }
          if (bi->requires_grad) {
            double* bg = bi->grad.data();
            const double* av2 = ai->value.data();
            for (int i = 0; i < n; ++i)
              for (int p = 0; p < k; ++p) {
                const double aip = av2[i * k + p];
                if (aip == 0.0) continue;
                for (int j = 0; j < m; ++j) bg[p * m + j] += aip * og[i * m + j];
              }
          }
        },
        {ai, bi, oi});
  }
  return out;
}

Tensor matmul_transposed(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank12("matmul_transposed", a);
  if (b.rank() != 2)
    throw std::invalid_argument("matmul_transposed: rhs must be rank 2, got " + shape_str(b.dims()));
  auto [n, k] = as_matrix(a);
  if (k != b.dims()[1]) shape_error("matmul_transposed", a, b);
  const int m = b.dims()[0];

  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = make_out(a.rank() == 1 ? std::vector<int>{m} : std::vector<int>{n, m}, rg);
  const double* av = a.data();
  const double* bv = b.data();
  double* ov = out.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
      ov[i * m + j] = acc;
    }

  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(
        [ai, bi, oi, n, k, m]() {
          const double* og = oi->grad.data();
          if (ai->requires_grad) {
            double* ag = ai->grad.data();
            const double* bv2 = bi->value.data();
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < m; ++j) {
                const double g = og[i * m + j];
                if (g == 0.0) continue;
                for (int p = 0; p < k; ++p) ag[i * k + p] += g * bv2[j * k + p];
              }
          }
          if (bi->requires_grad) {
            double* bg = bi->grad.data();
            const double* av2 = ai->value.data();
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < m; ++j) {
                const double g = og[i * m + j];
                if (g == 0.0) continue;
                for (int p = 0; p < k; ++p) bg[j * k + p] += g * av2[i * k + p];
              }
          }
        },
        {ai, bi, oi});
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const bool rg = a.requires_grad() || b.requires_grad();
  const bool broadcast = a.rank() == 2 && b.rank() == 1 && a.cols() == b.dims()[0];
  if (!broadcast && a.dims() != b.dims()) shape_error("add", a, b);

  Tensor out = make_out(a.dims(), rg);
  const double* av = a.data();
  const double* bv = b.data();
  double* ov = out.data();
  const std::size_t n = a.numel();
  if (broadcast) {
    const int cols = a.cols();
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i % cols];
  } else {
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i];
  }

  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape.record(
        [ai, bi, oi, broadcast, n]() {
          const double* og = oi->grad.data();
          if (ai->requires_grad) {
            double* ag = ai->grad.data();
            for (std::size_t i = 0; i < n; ++i) ag[i] += og[i];
          }
          if (bi->requires_grad) {
            double* bg = bi->grad.data();
            if (broadcast) {
              const std::size_t cols = bi->value.size();
              for (std::size_t i = 0; i < n; ++i) bg[i % cols] += og[i];
            } else {
              for (std::size_t i = 0; i < n; ++i) bg[i] += og[i];
            }
          }
        },
        {ai, bi, oi});
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
  const bool rg = a.requires_grad();
  Tensor out = make_out(a.dims(), rg);
  const double* av = a.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < a.numel(); ++i) ov[i] = c * av[i];

  if (rg) {
    auto ai = a.impl(), oi = out.impl();
    const std::size_t n = a.numel();
    tape.record(
        [ai, oi, c, n]() {
          double* ag = ai->grad.data();
          const double* og = oi->grad.data();
          for (std::size_t i = 0; i < n; ++i) ag[i] += c * og[i];
        },
        {ai, oi});
  }
  return out;
}

Tensor softmax(Tape& tape, const Tensor& a) {
  require_rank12("softmax", a);
  auto [n, d] = as_matrix(a);
  if (d < 1) throw std::invalid_argument("softmax: empty last dim");

  const bool rg = a.requires_grad();
  Tensor out = make_out(a.dims(), rg);
  const double* av = a.data();
  double* ov = out.data();
  for (int i = 0; i < n; ++i) {
    const double* row = av + static_cast<std::size_t>(i) * d;
    double* orow = ov + static_cast<std::size_t>(i) * d;
    double mx = row[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      orow[j] = std::exp(row[j] - mx);
      s += orow[j];
    }
    for (int j = 0; j < d; ++j) orow[j] /= s;
  }

  if (rg) {
    auto ai = a.impl(), oi = out.impl();
    tape.record(
        [ai, oi, n, d]() {
          double* ag = ai->grad.data();
          const double* og = oi->grad.data();
          const double* p = oi->value.data();
          for (int i = 0; i < n; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * d;
            double dot = 0.0;
            for (int j = 0; j < d; ++j) dot += og[off + j] * p[off + j];
            for (int j = 0; j < d; ++j) ag[off + j] += p[off + j] * (og[off + j] - dot);
          }
        },
        {ai, oi});
  }
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank12("layer_norm", x);
  if (eps <= 0.0) throw std::invalid_argument("layer_norm: eps must be > 0");
  auto [n, d] = as_matrix(x);
  if (gain.rank() != 1 || gain.dims()[0] != d) shape_error("layer_norm", x, gain);
  if (bias.rank() != 1 || bias.dims()[0] != d) shape_error("layer_norm", x, bias);

  const bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
  Tensor out = make_out(x.dims(), rg);
  // stash normalized rows and inverse stddevs for the backward pass
  std::vector<double> xhat(static_cast<std::size_t>(n) * d);
  std::vector<double> inv_std(n);

  const double* xv = x.data();
  const double* gv = gain.data();
  const double* bv = bias.data();
  double* ov = out.data();
  for (int i = 0; i < n; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xv[off + j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xv[off + j] - mu;
      var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (int j = 0; j < d; ++j) {
      xhat[off + j] = (xv[off + j] - mu) * inv;
      ov[off + j] = gv[j] * xhat[off + j] + bv[j];
    }
  }

  if (rg) {
    auto xi = x.impl(), gi = gain.impl(), bi = bias.impl(), oi = out.impl();
    tape.record(
        [xi, gi, bi, oi, n, d, xh = std::move(xhat), is = std::move(inv_std)]() {
          const double* og = oi->grad.data();
          const double* gv2 = gi->value.data();
          for (int i = 0; i < n; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * d;
            if (xi->requires_grad) {
              // dxhat = dy * gain; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
              double m1 = 0.0, m2 = 0.0;
              for (int j = 0; j < d; ++j) {
                const double dxh = og[off + j] * gv2[j];
                m1 += dxh;
                m2 += dxh * xh[off + j];
              }
              m1 /= d;
              m2 /= d;
              double* xg = xi->grad.data();
              for (int j = 0; j < d; ++j) {
                const double dxh = og[off + j] * gv2[j];
                xg[off + j] += is[i] * (dxh - m1 - xh[off + j] * m2);
              }
            }
            if (gi->requires_grad) {
              double* gg = gi->grad.data();
              for (int j = 0; j < d; ++j) gg[j] += og[off + j] * xh[off + j];
            }
            if (bi->requires_grad) {
              double* bg = bi->grad.data();
              for (int j = 0; j < d; ++j) bg[j] += og[off + j];
            }
          }
        },
        {xi, gi, bi, oi});
  }
  return out;
}

Tensor gelu(Tape& tape, const Tensor& x) {
  const bool rg = x.requires_grad();
  Tensor out = make_out(x.dims(), rg);
  const double* xv = x.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = xv[i];
    const double t = std::tanh(kGeluScale * (v + kGeluCoef * v * v * v));
    ov[i] = 0.5 * v * (1.0 + t);
  }

  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    const std::size_t n = x.numel();
    tape.record(
        [xi, oi, n]() {
          double* xg = xi->grad.data();
          const double* og = oi->grad.data();
          const double* xv2 = xi->value.data();
          for (std::size_t i = 0; i < n; ++i) {
            const double v = xv2[i];
            const double u = kGeluScale * (v + kGeluCoef * v * v * v);
            const double t = std::tanh(u);
            const double du = kGeluScale * (1.0 + 3.0 * kGeluCoef * v * v);
            const double dgelu = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
            xg[i] += og[i] * dgelu;
          }
        },
        {xi, oi});
  }
  return out;
}

Tensor embedding_lookup(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2)
    throw std::invalid_argument("embedding_lookup: table must be rank 2, got " + shape_str(table.dims()));
  const int v = table.rows(), d = table.cols();
  const int n = static_cast<int>(ids.size());
  for (int id : ids)
    if (id < 0 || id >= v)
      throw std::out_of_range("embedding_lookup: id " + std::to_string(id) + " out of range [0," +
                              std::to_string(v) + ")");

  const bool rg = table.requires_grad();
  Tensor out = make_out({n, d}, rg);
  const double* tv = table.data();
  double* ov = out.data();
  for (int i = 0; i < n; ++i)
    std::copy_n(tv + static_cast<std::size_t>(ids[i]) * d, d, ov + static_cast<std::size_t>(i) * d);

  if (rg) {
    auto ti = table.impl(), oi = out.impl();
    tape.record(
        [ti, oi, ids, n, d]() {
          double* tg = ti->grad.data();
          const double* og = oi->grad.data();
          for (int i = 0; i < n; ++i) {
            double* row = tg + static_cast<std::size_t>(ids[i]) * d;
            const double* grow = og + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) row[j] += grow[j];
          }
        },
        {ti, oi});
  }
  return out;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const int rank = parts[0].rank();
  if (rank < 1 || rank > 2) throw std::invalid_argument("concat: expected rank 1 or 2");
  int rows = rank == 2 ? parts[0].rows() : 1;
  int total = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rank() != rank || (rank == 2 && p.rows() != rows)) shape_error("concat", parts[0], p);
    total += rank == 2 ? p.cols() : p.dims()[0];
    rg = rg || p.requires_grad();
  }

  Tensor out = make_out(rank == 1 ? std::vector<int>{total} : std::vector<int>{rows, total}, rg);
  double* ov = out.data();
  int off = 0;
  for (const auto& p : parts) {
    const int w = rank == 2 ? p.cols() : p.dims()[0];
    const double* pv = p.data();
    for (int i = 0; i < rows; ++i)
      std::copy_n(pv + static_cast<std::size_t>(i) * w, w,
                  ov + static_cast<std::size_t>(i) * total + off);
    off += w;
  }

  if (rg) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    std::vector<int> widths;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      widths.push_back(rank == 2 ? p.cols() : p.dims()[0]);
    }
    auto oi = out.impl();
    auto tracked = impls;
    tracked.push_back(oi);
    tape.record(
        [impls, widths, oi, rows, total]() {
          const double* og = oi->grad.data();
          int off2 = 0;
          for (std::size_t k = 0; k < impls.size(); ++k) {
            const int w = widths[k];
            if (impls[k]->requires_grad) {
              double* pg = impls[k]->grad.data();
              for (int i = 0; i < rows; ++i) {
                const double* grow = og + static_cast<std::size_t>(i) * total + off2;
                double* prow = pg + static_cast<std::size_t>(i) * w;
                for (int j = 0; j < w; ++j) prow[j] += grow[j];
              }
            }
            off2 += w;
          }
        },
        tracked);
  }
  return out;
}

Tensor euclidean_distance(Tape& tape, const Tensor& u, const Tensor& v) {
  if (u.rank() != 1 || v.rank() != 1 || u.dims() != v.dims())
    shape_error("euclidean_distance", u, v);
  const int d = u.dims()[0];

  double s = 0.0;
  const double* uv = u.data();
  const double* vv = v.data();
  for (int i = 0; i < d; ++i) {
    const double c = uv[i] - vv[i];
    s += c * c;
  }
  const double dist = std::sqrt(s);

  const bool rg = u.requires_grad() || v.requires_grad();
  Tensor out = Tensor::scalar(dist);
  if (rg) {
    out.set_requires_grad(true);
    auto ui = u.impl(), vi = v.impl(), oi = out.impl();
    tape.record(
        [ui, vi, oi, d, dist]() {
          if (dist == 0.0) return;  // subgradient 0 at the kink
          const double g = oi->grad[0] / dist;
          for (int i = 0; i < d; ++i) {
            const double c = (ui->value[i] - vi->value[i]) * g;
            if (ui->requires_grad) ui->grad[i] += c;
            if (vi->requires_grad) vi->grad[i] -= c;
          }
        },
        {ui, vi, oi});
  }
  return out;
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, int target) {
  if (logits.rank() != 1)
    throw std::invalid_argument("cross_entropy: logits must be rank 1, got " + shape_str(logits.dims()));
  const int v = logits.dims()[0];
  if (target < 0 || target >= v)
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) + " out of range [0," +
                            std::to_string(v) + ")");

  const double* lv = logits.data();
  double mx = lv[0];
  for (int i = 1; i < v; ++i) mx = std::max(mx, lv[i]);
  double s = 0.0;
  for (int i = 0; i < v; ++i) s += std::exp(lv[i] - mx);
  const double lse = mx + std::log(s);

  const bool rg = logits.requires_grad();
  Tensor out = Tensor::scalar(lse - lv[target]);
  if (rg) {
    out.set_requires_grad(true);
    auto li = logits.impl(), oi = out.impl();
    tape.record(
        [li, oi, v, target, mx, s]() {
          const double g = oi->grad[0];
          for (int i = 0; i < v; ++i) {
            const double p = std::exp(li->value[i] - mx) / s;
            li->grad[i] += g * (p - (i == target ? 1.0 : 0.0));
          }
        },
        {li, oi});
  }
  return out;
}

Tensor select_row(Tape& tape, const Tensor& a, int row) {
  if (a.rank() != 2)
    throw std::invalid_argument("select_row: expected rank 2, got " + shape_str(a.dims()));
  if (row < 0 || row >= a.rows())
    throw std::out_of_range("select_row: row " + std::to_string(row) + " out of range");
  const int d = a.cols();

  const bool rg = a.requires_grad();
  Tensor out = make_out({d}, rg);
  std::copy_n(a.data() + static_cast<std::size_t>(row) * d, d, out.data());

  if (rg) {
    auto ai = a.impl(), oi = out.impl();
    tape.record(
        [ai, oi, row, d]() {
          double* ag = ai->grad.data() + static_cast<std::size_t>(row) * d;
          const double* og = oi->grad.data();
          for (int j = 0; j < d; ++j) ag[j] += og[j];
        },
        {ai, oi});
  }
  return out;
}

Tensor slice_cols(Tape& tape, const Tensor& a, int start, int len) {
  if (a.rank() != 2)
    throw std::invalid_argument("slice_cols: expected rank 2, got " + shape_str(a.dims()));
  if (start < 0 || len < 1 || start + len > a.cols())
    throw std::out_of_range("slice_cols: [" + std::to_string(start) + "," +
                            std::to_string(start + len) + ") out of " + std::to_string(a.cols()));
  const int n = a.rows(), d = a.cols();

  const bool rg = a.requires_grad();
  Tensor out = make_out({n, len}, rg);
  const double* av = a.data();
  double* ov = out.data();
  for (int i = 0; i < n; ++i)
    std::copy_n(av + static_cast<std::size_t>(i) * d + start, len,
                ov + static_cast<std::size_t>(i) * len);

  if (rg) {
    auto ai = a.impl(), oi = out.impl();
    tape.record(
        [ai, oi, n, d, start, len]() {
          double* ag = ai->grad.data();
          const double* og = oi->grad.data();
          for (int i = 0; i < n; ++i) {
            double* arow = ag + static_cast<std::size_t>(i) * d + start;
            const double* orow = og + static_cast<std::size_t>(i) * len;
            for (int j = 0; j < len; ++j) arow[j] += orow[j];
          }
        },
        {ai, oi});
  }
  return out;
}

Tensor add_to_row(Tape& tape, const Tensor& a, int row, const Tensor& v) {
  if (a.rank() != 2 || v.rank() != 1 || v.dims()[0] != a.cols()) shape_error("add_to_row", a, v);
  if (row < 0 || row >= a.rows())
    throw std::out_of_range("add_to_row: row " + std::to_string(row) + " out of range");
  const int d = a.cols();

  const bool rg = a.requires_grad() || v.requires_grad();
  Tensor out = make_out(a.dims(), rg);
  std::copy_n(a.data(), a.numel(), out.data());
  double* orow = out.data() + static_cast<std::size_t>(row) * d;
  const double* vv = v.data();
  for (int j = 0; j < d; ++j) orow[j] += vv[j];

  if (rg) {
    auto ai = a.impl(), vi = v.impl(), oi = out.impl();
    const std::size_t n = a.numel();
    tape.record(
        [ai, vi, oi, row, d, n]() {
          const double* og = oi->grad.data();
          if (ai->requires_grad) {
            double* ag = ai->grad.data();
            for (std::size_t i = 0; i < n; ++i) ag[i] += og[i];
          }
          if (vi->requires_grad) {
            double* vg = vi->grad.data();
            const double* grow = og + static_cast<std::size_t>(row) * d;
            for (int j = 0; j < d; ++j) vg[j] += grow[j];
          }
        },
        {ai, vi, oi});
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double s = 0.0;
  const double* av = a.data();
  for (std::size_t i = 0; i < a.numel(); ++i) s += av[i];

  const bool rg = a.requires_grad();
  Tensor out = Tensor::scalar(s);
  if (rg) {
    out.set_requires_grad(true);
    auto ai = a.impl(), oi = out.impl();
    const std::size_t n = a.numel();
    tape.record(
        [ai, oi, n]() {
          const double g = oi->grad[0];
          double* ag = ai->grad.data();
          for (std::size_t i = 0; i < n; ++i) ag[i] += g;
        },
        {ai, oi});
  }
  return out;
}

Tensor clip_max(Tape& tape, const Tensor& a, double cap) {
  const bool rg = a.requires_grad();
  Tensor out = make_out(a.dims(), rg);
  const double* av = a.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < a.numel(); ++i) ov[i] = std::min(av[i], cap);

  if (rg) {
    auto ai = a.impl(), oi = out.impl();
    const std::size_t n = a.numel();
    tape.record(
        [ai, oi, cap, n]() {
          double* ag = ai->grad.data();
          const double* og = oi->grad.data();
          const double* av2 = ai->value.data();
          for (std::size_t i = 0; i < n; ++i)
            if (av2[i] < cap) ag[i] += og[i];
        },
        {ai, oi});
  }
  return out;
}

Tensor sigmoid_bce(Tape& tape, const Tensor& logits, const std::vector<double>& targets) {
  if (logits.rank() != 1 || logits.numel() != targets.size())
    throw std::invalid_argument("sigmoid_bce: logits " + shape_str(logits.dims()) + " vs " +
                                std::to_string(targets.size()) + " targets");
  const int k = logits.dims()[0];

  const double* lv = logits.data();
  double loss = 0.0;
  for (int i = 0; i < k; ++i) {
    const double z = lv[i];
    loss += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::fabs(z)));
  }
  loss /= k;

  const bool rg = logits.requires_grad();
  Tensor out = Tensor::scalar(loss);
  if (rg) {
    out.set_requires_grad(true);
    auto li = logits.impl(), oi = out.impl();
    tape.record(
        [li, oi, targets, k]() {
          const double g = oi->grad[0] / k;
          for (int i = 0; i < k; ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-li->value[i]));
            li->grad[i] += g * (sig - targets[i]);
          }
        },
        {li, oi});
  }
  return out;
}

}  // namespace dapt
