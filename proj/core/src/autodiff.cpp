#include "mode/autodiff.hpp"

#include <cmath>

namespace mode {

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = OpKind::leaf;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = OpKind::constant;
  n.value = std::move(value);
  n.needs_grad = false;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  Node n;
  n.op = OpKind::matmul;
  n.a = a.index();
  n.b = b.index();
  n.value = mode::matmul(node(a).value, node(b).value);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  Node n;
  n.op = OpKind::transpose;
  n.a = a.index();
  n.value = mode::transpose(node(a).value);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = OpKind::add;
  n.a = a.index();
  n.b = b.index();
  n.value = mode::add(node(a).value, node(b).value);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = OpKind::sub;
  n.a = a.index();
  n.b = b.index();
  n.value = mode::sub(node(a).value, node(b).value);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.op = OpKind::hadamard;
  n.a = a.index();
  n.b = b.index();
  n.value = mode::hadamard(node(a).value, node(b).value);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  Node n;
  n.op = OpKind::scale;
  n.a = a.index();
  n.factor = c;
  n.value = mode::scale(node(a).value, c);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::scale_rows(Var u, Var w) {
  Node n;
  n.op = OpKind::scale_rows;
  n.a = u.index();
  n.b = w.index();
  n.value = mode::scale_rows(node(u).value, node(w).value);
  n.needs_grad = node(u).needs_grad || node(w).needs_grad;
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
  Node n;
  n.op = OpKind::slice_cols;
  n.a = a.index();
  n.c0 = c0;
  n.c1 = c1;
  n.value = mode::slice_cols(node(a).value, c0, c1);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  Node n;
  n.op = OpKind::softmax_rows;
  n.a = a.index();
  n.value = mode::softmax_rows(node(a).value);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::outer(Var u, Var v) {
  const Matrix& uv = node(u).value;
  const Matrix& vv = node(v).value;
  if (uv.cols() != 1 || vv.cols() != 1) {
    throw ShapeError("outer: expected column vectors, got " + shape_str(uv) + " and " +
                     shape_str(vv));
  }
  Node n;
  n.op = OpKind::outer;
  n.a = u.index();
  n.b = v.index();
  n.value = mode::outer(uv.entries(), vv.entries());
  n.needs_grad = node(u).needs_grad || node(v).needs_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = OpKind::sum;
  n.a = a.index();
  n.value = Matrix(1, 1, {mode::sum(node(a).value)});
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

const Matrix& Tape::grad(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) {
    // Never touched by backward: gradient is zero (unreachable leaf etc.).
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::accumulate(std::size_t target, const Matrix& contribution) {
  Node& t = nodes_[target];
  if (!t.needs_grad) return;
  if (t.grad.empty()) {
    t.grad = contribution;
  } else {
    t.grad = mode::add(t.grad, contribution);
  }
}

void Tape::backward(Var output) {
  Node& out = node(output);
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw ShapeError("backward: output must be 1x1, got " + shape_str(out.value));
  }
  if (!out.needs_grad) return;
  out.grad = Matrix(1, 1, {1.0});

  for (std::size_t idx = output.index() + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.needs_grad || n.grad.empty()) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case OpKind::leaf:
      case OpKind::constant:
        break;
      case OpKind::matmul: {
        // d/da = g * b^T, d/db = a^T * g
        if (nodes_[n.a].needs_grad)
          accumulate(n.a, mode::matmul(g, mode::transpose(nodes_[n.b].value)));
        if (nodes_[n.b].needs_grad)
          accumulate(n.b, mode::matmul(mode::transpose(nodes_[n.a].value), g));
        break;
      }
      case OpKind::transpose:
        accumulate(n.a, mode::transpose(g));
        break;
      case OpKind::add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case OpKind::sub:
        accumulate(n.a, g);
        if (nodes_[n.b].needs_grad) accumulate(n.b, mode::scale(g, -1.0));
        break;
      case OpKind::hadamard:
        if (nodes_[n.a].needs_grad) accumulate(n.a, mode::hadamard(g, nodes_[n.b].value));
        if (nodes_[n.b].needs_grad) accumulate(n.b, mode::hadamard(g, nodes_[n.a].value));
        break;
      case OpKind::scale:
        accumulate(n.a, mode::scale(g, n.factor));
        break;
      case OpKind::scale_rows: {
        const Matrix& u = nodes_[n.a].value;
        const Matrix& w = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) accumulate(n.a, mode::scale_rows(g, w));
        if (nodes_[n.b].needs_grad) {
          // d/dw_i = sum_j g[i][j] * u[i][j]
          Matrix gw(w.rows(), 1);
          for (std::size_t i = 0; i < u.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < u.cols(); ++j) acc += g.at(i, j) * u.at(i, j);
            gw.at(i, 0) = acc;
          }
          accumulate(n.b, gw);
        }
        break;
      }
      case OpKind::slice_cols: {
        const Matrix& a = nodes_[n.a].value;
        Matrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t j = n.c0; j < n.c1; ++j) ga.at(i, j) = g.at(i, j - n.c0);
        accumulate(n.a, ga);
        break;
      }
      case OpKind::softmax_rows: {
        // Per row: dL/dz_j = s_j * (g_j - sum_k g_k s_k)
        const Matrix& s = n.value;
        Matrix ga(s.rows(), s.cols());
        for (std::size_t i = 0; i < s.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < s.cols(); ++j) dot += g.at(i, j) * s.at(i, j);
          for (std::size_t j = 0; j < s.cols(); ++j)
            ga.at(i, j) = s.at(i, j) * (g.at(i, j) - dot);
        }
        accumulate(n.a, ga);
        break;
      }
      case OpKind::outer: {
        // d/du = g * v, d/dv = g^T * u
        if (nodes_[n.a].needs_grad) accumulate(n.a, mode::matmul(g, nodes_[n.b].value));
        if (nodes_[n.b].needs_grad)
          accumulate(n.b, mode::matmul(mode::transpose(g), nodes_[n.a].value));
        break;
      }
      case OpKind::sum: {
        const Matrix& a = nodes_[n.a].value;
        Matrix ga(a.rows(), a.cols());
        const double g0 = g.at(0, 0);
        for (double& v : ga.entries()) v = g0;
        accumulate(n.a, ga);
        break;
      }
    }
  }
}

std::vector<Matrix> finite_diff_grad(const ScalarFn& f, std::vector<Matrix> params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step h must be positive");
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix g(params[p].rows(), params[p].cols());
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double original = params[p].data()[i];
      params[p].data()[i] = original + h;
      const double f_plus = f(params);
      params[p].data()[i] = original - h;
      const double f_minus = f(params);
      params[p].data()[i] = original;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw NumericError("finite_diff_grad: non-finite evaluation at parameter " +
                           std::to_string(p) + " entry " + std::to_string(i));
      }
      g.data()[i] = (f_plus - f_minus) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace mode
