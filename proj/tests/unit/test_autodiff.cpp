#include <doctest.h>

#include "itr/errors.hpp"
#include "itr/ops.hpp"
#include "itr/tape.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace itr;
using Mat = Tensor<double>;

namespace {

Mat random_mat(Index r, Index c, Rng& rng) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Central-difference check of d sum(w o f(x)) / dx for every input.
double op_error(const std::vector<Mat>& inputs,
                const std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>& f) {
  Rng rng(17);
  std::vector<Parameter<double>> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("x" + std::to_string(i), inputs[i]);
  Mat weights;
  auto eval = [&](bool backward) {
    Tape<double> tape(3);
    std::vector<Var<double>> vars;
    for (auto& p : params) vars.push_back(tape.parameter(p));
    auto out = f(tape, vars);
    if (weights.size() == 0) weights = random_mat(out.rows(), out.cols(), rng);
    auto loss = sum(hadamard(out, tape.constant(weights)));
    if (backward) tape.backward(loss);
    return loss.item();
  };
  eval(true);
  double worst = 0.0;
  const double h = 1e-6;
  for (auto& p : params) {
    const Mat analytic = p.grad;
    for (Index i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data()[i];
      p.value.data()[i] = keep + h;
      const double up = eval(false);
      p.value.data()[i] = keep - h;
      const double down = eval(false);
      p.value.data()[i] = keep;
      const double num = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(num - analytic.data()[i]) / std::max(1.0, std::abs(num)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("elementwise and matrix op gradients match finite differences") {
  Rng rng(1);
  const Mat a = random_mat(3, 4, rng);
  const Mat b = random_mat(3, 4, rng);
  const Mat c = random_mat(4, 2, rng);
  const Mat col = random_mat(3, 1, rng);
  const Mat row = random_mat(1, 4, rng);
  using V = std::vector<Var<double>>;
  CHECK(op_error({a, c}, [](Tape<double>&, const V& v) { return matmul(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return transpose(v[0]); }) < 1e-7);
  CHECK(op_error({a, b}, [](Tape<double>&, const V& v) { return add(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({a, b}, [](Tape<double>&, const V& v) { return sub(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({a, b}, [](Tape<double>&, const V& v) { return hadamard(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({a, col}, [](Tape<double>&, const V& v) { return add_colwise(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({a, row}, [](Tape<double>&, const V& v) { return add_rowwise(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({col, a}, [](Tape<double>&, const V& v) { return mul_colwise(v[0], v[1]); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return sigmoid(v[0]); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return tanh(v[0]); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return relu(v[0]); }) < 1e-6);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return affine(v[0], 2.0, -1.0); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return softmax(v[0], 0); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return softmax(v[0], 1); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return max_over_axis(v[0], 0); }) < 1e-6);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return max_over_axis(v[0], 1); }) < 1e-6);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return slice_rows(v[0], 1, 2); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return slice_cols(v[0], 1, 3); }) < 1e-7);
  CHECK(op_error({a}, [](Tape<double>&, const V& v) { return entry(v[0], 2, 3); }) < 1e-7);
  CHECK(op_error({a, b}, [](Tape<double>&, const V& v) { return concat_rows(V{v[0], v[1]}); }) < 1e-7);
  CHECK(op_error({a, random_mat(3, 2, rng)}, [](Tape<double>&, const V& v) { return concat_cols(V{v[0], v[1]}); }) < 1e-7);
  CHECK(op_error({a, col}, [](Tape<double>&, const V& v) { return cosine_cols(v[0], v[1]); }) < 1e-6);
  const Mat positive = a.array().abs() + 0.5;
  CHECK(op_error({positive}, [](Tape<double>&, const V& v) { return log(v[0]); }) < 1e-6);
}

TEST_CASE("sequence op gradients match finite differences") {
  Rng rng(2);
  const Mat seq = random_mat(2, 7, rng);
  const Mat table = random_mat(6, 3, rng);
  using V = std::vector<Var<double>>;
  const std::vector<Index> sizes = {3, 1, 3};
  CHECK(op_error({seq}, [&](Tape<double>&, const V& v) { return segment_max_cols(v[0], sizes); }) < 1e-6);
  const std::vector<std::size_t> ids = {4, 1, 4, 0};
  CHECK(op_error({table}, [&](Tape<double>&, const V& v) { return gather(v[0], ids); }) < 1e-7);
  const std::vector<Index> lengths = {5, 2};
  CHECK(op_error({seq}, [&](Tape<double>&, const V& v) { return unfold(v[0], 3, lengths); }) < 1e-7);
}

TEST_CASE("gather routes repeated indices additively") {
  Parameter<double> table("t", Mat::Ones(4, 2));
  Tape<double> tape;
  const std::vector<std::size_t> ids = {2, 2, 0};
  auto g = gather(tape.parameter(table), ids);
  tape.backward(sum(g));
  CHECK(table.grad(2, 0) == doctest::Approx(2.0));
  CHECK(table.grad(0, 1) == doctest::Approx(1.0));
  CHECK(table.grad(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("softmax axes normalize columns or rows") {
  Rng rng(4);
  Tape<double> tape;
  auto x = tape.constant(random_mat(3, 5, rng) * 30.0);
  auto cols = softmax(x, 0).value();
  auto rows = softmax(x, 1).value();
  for (Index j = 0; j < 5; ++j) CHECK(cols.col(j).sum() == doctest::Approx(1.0));
  for (Index i = 0; i < 3; ++i) CHECK(rows.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("backward requires a scalar root and runs once") {
  Parameter<double> p("p", Mat::Ones(2, 2));
  Tape<double> tape;
  auto v = tape.parameter(p);
  CHECK_THROWS_AS(tape.backward(v), ContractError);
  auto s = sum(v);
  tape.backward(s);
  CHECK_THROWS(tape.backward(s));
}

TEST_CASE("frozen parameters receive no gradient") {
  Parameter<double> p("p", Mat::Ones(2, 2), false);
  Parameter<double> q("q", Mat::Ones(2, 2));
  Tape<double> tape;
  auto y = sum(hadamard(tape.parameter(p), tape.parameter(q)));
  tape.backward(y);
  CHECK(p.grad.isZero());
  CHECK(q.grad(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("gradients accumulate across tapes") {
  Parameter<double> p("p", Mat::Constant(1, 1, 3.0));
  for (int i = 0; i < 2; ++i) {
    Tape<double> tape;
    auto v = tape.parameter(p);
    tape.backward(sum(hadamard(v, v)));
  }
  CHECK(p.grad(0, 0) == doctest::Approx(12.0));
}

TEST_CASE("shape mismatches raise dimension errors") {
  Tape<double> tape;
  auto a = tape.constant(Mat::Ones(2, 3));
  auto b = tape.constant(Mat::Ones(2, 3));
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
  CHECK_THROWS_AS(add(a, tape.constant(Mat::Ones(3, 2))), DimensionError);
  CHECK_THROWS_AS(slice_rows(a, 1, 5), LookupError);
}

TEST_CASE("dropout is identity outside training and deterministic per tape seed") {
  Rng rng(8);
  const Mat x = random_mat(4, 6, rng);
  Tape<double> t1(5), t2(5);
  CHECK(dropout(t1.constant(x), 0.5, false).value() == x);
  auto d1 = dropout(t1.constant(x), 0.5, true).value();
  auto d2 = dropout(t2.constant(x), 0.5, true).value();
  CHECK(d1 == d2);
  CHECK((d1.array() == 0).count() > 0);
}

TEST_CASE("detach blocks the gradient") {
  Parameter<double> p("p", Mat::Constant(1, 1, 2.0));
  Tape<double> tape;
  auto v = tape.parameter(p);
  tape.backward(sum(hadamard(v, detach(v))));
  CHECK(p.grad(0, 0) == doctest::Approx(2.0));
}
