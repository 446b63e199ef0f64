#include "itr/ops.hpp"

#include "itr/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace itr {
namespace {

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands recorded on different tapes");
  }
}

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_of(a.value()) + " vs " +
                         shape_of(b.value()));
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape_of(a.value()) + " x " +
                         shape_of(b.value()));
  }
  Tensor<Scalar> out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const auto& g, const auto&) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  Tensor<Scalar> out = a.value().transpose();
  return a.tape().record(std::move(out), {a}, [a](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(a, g.transpose());
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a, b, "add");
  Tensor<Scalar> out = a.value() + b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a, b, "sub");
  Tensor<Scalar> out = a.value() - b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -g);
  });
}

template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a, b, "hadamard");
  Tensor<Scalar> out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const auto& g, const auto&) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

template <typename Scalar>
Var<Scalar> add_colwise(const Var<Scalar>& x, const Var<Scalar>& v) {
  require_same_tape(x, v, "add_colwise");
  if (v.cols() != 1 || v.rows() != x.rows()) {
    throw DimensionError("add_colwise: column vector " + shape_of(v.value()) +
                         " does not match " + shape_of(x.value()));
  }
  Tensor<Scalar> out = x.value().colwise() + v.value().col(0);
  return x.tape().record(std::move(out), {x, v}, [x, v](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(x, g);
    if (t.requires_grad(v)) t.accumulate(v, g.rowwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> add_rowwise(const Var<Scalar>& x, const Var<Scalar>& v) {
  require_same_tape(x, v, "add_rowwise");
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw DimensionError("add_rowwise: row vector " + shape_of(v.value()) +
                         " does not match " + shape_of(x.value()));
  }
  Tensor<Scalar> out = x.value().rowwise() + v.value().row(0);
  return x.tape().record(std::move(out), {x, v}, [x, v](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(x, g);
    if (t.requires_grad(v)) t.accumulate(v, g.colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> mul_colwise(const Var<Scalar>& v, const Var<Scalar>& x) {
  require_same_tape(x, v, "mul_colwise");
  if (v.cols() != 1 || v.rows() != x.rows()) {
    throw DimensionError("mul_colwise: column vector " + shape_of(v.value()) +
                         " does not match " + shape_of(x.value()));
  }
  Tensor<Scalar> out = x.value().array().colwise() * v.value().col(0).array();
  return x.tape().record(std::move(out), {v, x}, [v, x](Tape<Scalar>& t, const auto& g, const auto&) {
    if (t.requires_grad(x)) {
      Tensor<Scalar> gx = g.array().colwise() * v.value().col(0).array();
      t.accumulate(x, gx);
    }
    if (t.requires_grad(v)) t.accumulate(v, g.cwiseProduct(x.value()).rowwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> mul_scalar(const Var<Scalar>& x, const Var<Scalar>& s) {
  require_same_tape(x, s, "mul_scalar");
  if (s.rows() != 1 || s.cols() != 1) {
    throw DimensionError("mul_scalar: expected 1x1 factor, got " + shape_of(s.value()));
  }
  Tensor<Scalar> out = x.value() * s.item();
  return x.tape().record(std::move(out), {x, s}, [x, s](Tape<Scalar>& t, const auto& g, const auto&) {
    if (t.requires_grad(x)) t.accumulate(x, g * s.item());
    if (t.requires_grad(s)) {
      Tensor<Scalar> gs(1, 1);
      gs(0, 0) = g.cwiseProduct(x.value()).sum();
      t.accumulate(s, gs);
    }
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  Tensor<Scalar> out = x.value().unaryExpr([](Scalar v) {
    if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
  return x.tape().record(std::move(out), {x}, [x](Tape<Scalar>& t, const auto& g, const auto& y) {
    t.accumulate(x, g.cwiseProduct(y.cwiseProduct((Scalar(1) - y.array()).matrix())));
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  Tensor<Scalar> out = x.value().array().tanh().matrix();
  return x.tape().record(std::move(out), {x}, [x](Tape<Scalar>& t, const auto& g, const auto& y) {
    t.accumulate(x, g.cwiseProduct((Scalar(1) - y.array().square()).matrix()));
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Tensor<Scalar> out = x.value().cwiseMax(Scalar(0));
  return x.tape().record(std::move(out), {x}, [x](Tape<Scalar>& t, const auto& g, const auto&) {
    Tensor<Scalar> gx = (x.value().array() > Scalar(0)).select(g, Scalar(0));
    t.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& x, Scalar floor) {
  Tensor<Scalar> out = x.value().unaryExpr([floor](Scalar v) { return std::log(std::max(v, floor)); });
  return x.tape().record(std::move(out), {x}, [x, floor](Tape<Scalar>& t, const auto& g, const auto&) {
    const Tensor<Scalar>& xv = x.value();
    Tensor<Scalar> gx(xv.rows(), xv.cols());
    for (Index i = 0; i < xv.size(); ++i) {
      gx(i) = xv(i) > floor ? g(i) / xv(i) : Scalar(0);
    }
    t.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor) {
  Tensor<Scalar> out = x.value() * factor;
  return x.tape().record(std::move(out), {x}, [x, factor](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(x, g * factor);
  });
}

template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& x, Scalar a, Scalar b) {
  Tensor<Scalar> out = (x.value().array() * a + b).matrix();
  return x.tape().record(std::move(out), {x}, [x, a](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(x, g * a);
  });
}

template <typename Scalar>
Var<Scalar> softmax(const Var<Scalar>& x, int axis) {
  if (axis != 0 && axis != 1) throw ConfigError("softmax: axis must be 0 or 1");
  const Tensor<Scalar>& xv = x.value();
  assert(xv.allFinite() && "softmax: non-finite input");
  Tensor<Scalar> out(xv.rows(), xv.cols());
  if (axis == 0) {
    for (Index c = 0; c < xv.cols(); ++c) {
      const Scalar m = xv.col(c).maxCoeff();
      out.col(c) = (xv.col(c).array() - m).exp().matrix();
      out.col(c) /= out.col(c).sum();
    }
  } else {
    for (Index r = 0; r < xv.rows(); ++r) {
      const Scalar m = xv.row(r).maxCoeff();
      out.row(r) = (xv.row(r).array() - m).exp().matrix();
      out.row(r) /= out.row(r).sum();
    }
  }
  return x.tape().record(std::move(out), {x}, [x, axis](Tape<Scalar>& t, const auto& g, const auto& y) {
    // dx = y * (g - <g, y>) along the normalized axis.
    Tensor<Scalar> gy = g.cwiseProduct(y);
    Tensor<Scalar> gx(y.rows(), y.cols());
    if (axis == 0) {
      for (Index c = 0; c < y.cols(); ++c) gx.col(c) = gy.col(c) - y.col(c) * gy.col(c).sum();
    } else {
      for (Index r = 0; r < y.rows(); ++r) gx.row(r) = gy.row(r) - y.row(r) * gy.row(r).sum();
    }
    t.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    require_same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts differ " + shape_of(parts.front().value()) +
                           " vs " + shape_of(p.value()));
    }
    rows += p.rows();
  }
  Tensor<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().tape().record(std::move(out), parts,
                                     [parts](Tape<Scalar>& t, const auto& g, const auto&) {
                                       Index off = 0;
                                       for (const auto& p : parts) {
                                         if (t.requires_grad(p)) t.accumulate(p, g.middleRows(off, p.rows()));
                                         off += p.rows();
                                       }
                                     });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require_same_tape(parts.front(), p, "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row counts differ " + shape_of(parts.front().value()) +
                           " vs " + shape_of(p.value()));
    }
    cols += p.cols();
  }
  Tensor<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().tape().record(std::move(out), parts,
                                     [parts](Tape<Scalar>& t, const auto& g, const auto&) {
                                       Index off = 0;
                                       for (const auto& p : parts) {
                                         if (t.requires_grad(p)) t.accumulate(p, g.middleCols(off, p.cols()));
                                         off += p.cols();
                                       }
                                     });
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw LookupError("slice_rows: rows [" + std::to_string(start) + ", " +
                      std::to_string(start + count) + ") outside " + shape_of(x.value()));
  }
  Tensor<Scalar> out = x.value().middleRows(start, count);
  return x.tape().record(std::move(out), {x}, [x, start](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate_block(x, start, 0, g);
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw LookupError("slice_cols: columns [" + std::to_string(start) + ", " +
                      std::to_string(start + count) + ") outside " + shape_of(x.value()));
  }
  Tensor<Scalar> out = x.value().middleCols(start, count);
  return x.tape().record(std::move(out), {x}, [x, start](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate_block(x, 0, start, g);
  });
}

template <typename Scalar>
Var<Scalar> entry(const Var<Scalar>& x, Index row, Index col) {
  if (row < 0 || col < 0 || row >= x.rows() || col >= x.cols()) {
    throw LookupError("entry: (" + std::to_string(row) + ", " + std::to_string(col) + ") outside " +
                      shape_of(x.value()));
  }
  Tensor<Scalar> out(1, 1);
  out(0, 0) = x.value()(row, col);
  return x.tape().record(std::move(out), {x}, [x, row, col](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate_block(x, row, col, g);
  });
}

template <typename Scalar>
Var<Scalar> max_over_axis(const Var<Scalar>& x, int axis) {
  if (axis != 0 && axis != 1) throw ConfigError("max_over_axis: axis must be 0 or 1");
  const Tensor<Scalar>& xv = x.value();
  if (xv.size() == 0) throw DimensionError("max_over_axis: empty input");
  const Index outer = axis == 0 ? xv.cols() : xv.rows();
  const Index inner = axis == 0 ? xv.rows() : xv.cols();
  std::vector<Index> arg(static_cast<std::size_t>(outer));
  Tensor<Scalar> out = axis == 0 ? Tensor<Scalar>(1, outer) : Tensor<Scalar>(outer, 1);
  for (Index o = 0; o < outer; ++o) {
    Index best = 0;
    Scalar best_v = axis == 0 ? xv(0, o) : xv(o, 0);
    for (Index i = 1; i < inner; ++i) {
      const Scalar v = axis == 0 ? xv(i, o) : xv(o, i);
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    arg[static_cast<std::size_t>(o)] = best;
    out(o) = best_v;
  }
  return x.tape().record(std::move(out), {x}, [x, axis, arg](Tape<Scalar>& t, const auto& g, const auto&) {
    Tensor<Scalar> gx = Tensor<Scalar>::Zero(x.rows(), x.cols());
    for (std::size_t o = 0; o < arg.size(); ++o) {
      const Index oi = static_cast<Index>(o);
      if (axis == 0) {
        gx(arg[o], oi) += g(oi);
      } else {
        gx(oi, arg[o]) += g(oi);
      }
    }
    t.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> segment_max_cols(const Var<Scalar>& x, std::span<const Index> sizes) {
  const Tensor<Scalar>& xv = x.value();
  Index total = 0;
  for (Index s : sizes) {
    if (s < 1) throw DimensionError("segment_max_cols: empty segment");
    total += s;
  }
  if (total != xv.cols()) {
    throw DimensionError("segment_max_cols: segment sizes sum to " + std::to_string(total) +
                         " but input is " + shape_of(xv));
  }
  const Index rows = xv.rows();
  const Index segs = static_cast<Index>(sizes.size());
  Tensor<Scalar> out(rows, segs);
  // argmax column (absolute) per (row, segment)
  std::vector<Index> arg(static_cast<std::size_t>(rows * segs));
  Index start = 0;
  for (Index s = 0; s < segs; ++s) {
    const Index len = sizes[static_cast<std::size_t>(s)];
    for (Index r = 0; r < rows; ++r) {
      Index best = start;
      Scalar best_v = xv(r, start);
      for (Index c = start + 1; c < start + len; ++c) {
        if (xv(r, c) > best_v) {
          best_v = xv(r, c);
          best = c;
        }
      }
      out(r, s) = best_v;
      arg[static_cast<std::size_t>(s * rows + r)] = best;
    }
    start += len;
  }
  return x.tape().record(std::move(out), {x}, [x, arg, rows, segs](Tape<Scalar>& t, const auto& g, const auto&) {
    Tensor<Scalar> gx = Tensor<Scalar>::Zero(x.rows(), x.cols());
    for (Index s = 0; s < segs; ++s) {
      for (Index r = 0; r < rows; ++r) {
        gx(r, arg[static_cast<std::size_t>(s * rows + r)]) += g(r, s);
      }
    }
    t.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> gather(const Var<Scalar>& table, std::span<const std::size_t> indices) {
  const Tensor<Scalar>& tv = table.value();
  const auto vocab = static_cast<std::size_t>(tv.rows());
  Tensor<Scalar> out(static_cast<Index>(indices.size()), tv.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= vocab) {
      throw LookupError("gather: index " + std::to_string(indices[i]) + " outside table with " +
                        std::to_string(vocab) + " rows");
    }
    out.row(static_cast<Index>(i)) = tv.row(static_cast<Index>(indices[i]));
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return table.tape().record(std::move(out), {table}, [table, idx](Tape<Scalar>& t, const auto& g, const auto&) {
    // Large embedding tables: write straight into the parameter's gradient
    // rows instead of materializing a dense table-sized node gradient.
    if (Parameter<Scalar>* p = t.parameter_of(table)) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        p->grad.row(static_cast<Index>(idx[i])) += g.row(static_cast<Index>(i));
      }
      return;
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      t.accumulate_block(table, static_cast<Index>(idx[i]), 0, g.row(static_cast<Index>(i)));
    }
  });
}

template <typename Scalar>
Var<Scalar> unfold(const Var<Scalar>& x, Index window, std::span<const Index> segment_lengths) {
  if (window < 1) throw ConfigError("unfold: window must be positive");
  const Tensor<Scalar>& xv = x.value();
  const Index e = xv.rows();
  Index total_len = 0;
  Index total_windows = 0;
  for (Index len : segment_lengths) {
    if (len < 1) throw DimensionError("unfold: empty segment");
    total_len += len;
    total_windows += window_count(len, window);
  }
  if (total_len != xv.cols()) {
    throw DimensionError("unfold: segment lengths sum to " + std::to_string(total_len) +
                         " but input is " + shape_of(xv));
  }
  Tensor<Scalar> out = Tensor<Scalar>::Zero(e * window, total_windows);
  // (source column, output column, row block) triples for the backward pass
  struct Copy {
    Index src;
    Index dst;
    Index block;
  };
  std::vector<Copy> copies;
  copies.reserve(static_cast<std::size_t>(total_windows * window));
  Index src_start = 0;
  Index dst = 0;
  for (Index len : segment_lengths) {
    const Index n_win = window_count(len, window);
    for (Index j = 0; j < n_win; ++j, ++dst) {
      for (Index o = 0; o < window; ++o) {
        const Index pos = j + o;
        if (pos >= len) break;  // zero padding
        out.block(o * e, dst, e, 1) = xv.col(src_start + pos);
        copies.push_back({src_start + pos, dst, o});
      }
    }
    src_start += len;
  }
  return x.tape().record(std::move(out), {x}, [x, copies, e](Tape<Scalar>& t, const auto& g, const auto&) {
    Tensor<Scalar> gx = Tensor<Scalar>::Zero(x.rows(), x.cols());
    for (const Copy& c : copies) gx.col(c.src) += g.block(c.block * e, c.dst, e, 1);
    t.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> conv1d_maxpool(const Var<Scalar>& seq, Index window, const Var<Scalar>& filters,
                           const Var<Scalar>& bias) {
  const Index len = seq.cols();
  if (len < 1) throw DimensionError("conv1d_maxpool: empty sequence");
  if (filters.cols() != seq.rows() * window) {
    throw DimensionError("conv1d_maxpool: filters " + shape_of(filters.value()) + " expect input rows * " +
                         std::to_string(window) + ", input is " + shape_of(seq.value()));
  }
  const Index lengths[] = {len};
  auto patches = unfold(seq, window, std::span<const Index>(lengths));
  auto response = add_colwise(matmul(filters, patches), bias);
  return max_over_axis(response, 1);
}

template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double rate, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  Tape<Scalar>& tape = x.tape();
  const Scalar keep_scale = Scalar(1.0 / (1.0 - rate));
  Tensor<Scalar> mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask(i) = tape.rng().bernoulli(1.0 - rate) ? keep_scale : Scalar(0);
  }
  Tensor<Scalar> out = x.value().cwiseProduct(mask);
  return tape.record(std::move(out), {x}, [x, mask](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  Tensor<Scalar> out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape().record(std::move(out), {x}, [x](Tape<Scalar>& t, const auto& g, const auto&) {
    t.accumulate(x, Tensor<Scalar>::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

template <typename Scalar>
Var<Scalar> detach(const Var<Scalar>& x) {
  return x.tape().constant(x.value());
}

template <typename Scalar>
Var<Scalar> cosine_cols(const Var<Scalar>& m, const Var<Scalar>& v) {
  require_same_tape(m, v, "cosine_cols");
  if (v.cols() != 1 || v.rows() != m.rows()) {
    throw DimensionError("cosine_cols: vector " + shape_of(v.value()) + " does not match " +
                         shape_of(m.value()));
  }
  const Tensor<Scalar>& mv = m.value();
  const auto vv = v.value().col(0);
  const Index n = mv.cols();
  const Scalar vnorm = vv.norm();
  Vector<Scalar> mnorm(n);
  Tensor<Scalar> out = Tensor<Scalar>::Zero(n, 1);
  for (Index i = 0; i < n; ++i) {
    mnorm(i) = mv.col(i).norm();
    if (mnorm(i) > Scalar(0) && vnorm > Scalar(0)) {
      out(i, 0) = mv.col(i).dot(vv) / (mnorm(i) * vnorm);
    }
  }
  return m.tape().record(std::move(out), {m, v},
                         [m, v, mnorm, vnorm](Tape<Scalar>& t, const auto& g, const auto& cosv) {
                           const Tensor<Scalar>& mv = m.value();
                           const auto vv = v.value().col(0);
                           const Index n = mv.cols();
                           Tensor<Scalar> gm = Tensor<Scalar>::Zero(mv.rows(), n);
                           Tensor<Scalar> gv = Tensor<Scalar>::Zero(vv.rows(), 1);
                           for (Index i = 0; i < n; ++i) {
                             if (!(mnorm(i) > Scalar(0) && vnorm > Scalar(0))) continue;
                             const Scalar c = cosv(i, 0);
                             const Scalar gi = g(i, 0);
                             const Scalar inv = Scalar(1) / (mnorm(i) * vnorm);
                             gm.col(i) = gi * (vv * inv - c * mv.col(i) / (mnorm(i) * mnorm(i)));
                             gv.col(0) += gi * (mv.col(i) * inv - c * vv / (vnorm * vnorm));
                           }
                           if (t.requires_grad(m)) t.accumulate(m, gm);
                           if (t.requires_grad(v)) t.accumulate(v, gv);
                         });
}

#define ITR_INSTANTIATE_OPS(S)                                                                     \
  template Var<S> matmul(const Var<S>&, const Var<S>&);                                            \
  template Var<S> transpose(const Var<S>&);                                                        \
  template Var<S> add(const Var<S>&, const Var<S>&);                                               \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                               \
  template Var<S> hadamard(const Var<S>&, const Var<S>&);                                          \
  template Var<S> add_colwise(const Var<S>&, const Var<S>&);                                       \
  template Var<S> add_rowwise(const Var<S>&, const Var<S>&);                                       \
  template Var<S> mul_colwise(const Var<S>&, const Var<S>&);                                       \
  template Var<S> mul_scalar(const Var<S>&, const Var<S>&);                                        \
  template Var<S> sigmoid(const Var<S>&);                                                          \
  template Var<S> tanh(const Var<S>&);                                                             \
  template Var<S> relu(const Var<S>&);                                                             \
  template Var<S> log(const Var<S>&, S);                                                           \
  template Var<S> scale(const Var<S>&, S);                                                         \
  template Var<S> affine(const Var<S>&, S, S);                                                     \
  template Var<S> softmax(const Var<S>&, int);                                                     \
  template Var<S> concat_rows(const std::vector<Var<S>>&);                                         \
  template Var<S> concat_cols(const std::vector<Var<S>>&);                                         \
  template Var<S> slice_rows(const Var<S>&, Index, Index);                                         \
  template Var<S> slice_cols(const Var<S>&, Index, Index);                                         \
  template Var<S> entry(const Var<S>&, Index, Index);                                              \
  template Var<S> max_over_axis(const Var<S>&, int);                                               \
  template Var<S> segment_max_cols(const Var<S>&, std::span<const Index>);                         \
  template Var<S> gather(const Var<S>&, std::span<const std::size_t>);                             \
  template Var<S> unfold(const Var<S>&, Index, std::span<const Index>);                            \
  template Var<S> conv1d_maxpool(const Var<S>&, Index, const Var<S>&, const Var<S>&);              \
  template Var<S> dropout(const Var<S>&, double, bool);                                            \
  template Var<S> sum(const Var<S>&);                                                              \
  template Var<S> detach(const Var<S>&);                                                           \
  template Var<S> cosine_cols(const Var<S>&, const Var<S>&);

ITR_INSTANTIATE_OPS(float)
ITR_INSTANTIATE_OPS(double)

#undef ITR_INSTANTIATE_OPS

}  // namespace itr
