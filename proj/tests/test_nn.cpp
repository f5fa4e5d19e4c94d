#include "ace/fixtures/onnx_builder.hpp"
#include "ace/nn.hpp"
#include "helpers.hpp"

using namespace ace;
using nn::Tensor;

namespace {

nn::Node make_node(const std::string& op, std::map<std::string, nn::Attribute> attrs = {}) {
  nn::Node n;
  n.op_type = op;
  n.name = op;
  n.attributes = std::move(attrs);
  n.outputs = {"y"};
  return n;
}

nn::Attribute ints(std::vector<std::int64_t> v) {
  nn::Attribute a;
  a.ints = std::move(v);
  return a;
}

nn::Attribute one(std::int64_t v) {
  nn::Attribute a;
  a.i = v;
  return a;
}

Tensor run1(const nn::Node& node, const std::vector<const Tensor*>& in) { return nn::evaluate(node, in, 13).at(0); }

// Direct NCHW convolution used as the reference.
std::vector<float> reference_conv(const Tensor& x, const Tensor& w, const std::vector<float>& b, int pad) {
  const auto n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const auto m = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const auto oh = h + 2 * pad - kh + 1, ow = wd + 2 * pad - kw + 1;
  std::vector<float> out(std::size_t(n * m * oh * ow));
  for (std::int64_t bi = 0; bi < n; ++bi)
    for (std::int64_t mi = 0; mi < m; ++mi)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx) {
          double acc = b.empty() ? 0.0 : b[std::size_t(mi)];
          for (std::int64_t ci = 0; ci < c; ++ci)
            for (std::int64_t ky = 0; ky < kh; ++ky)
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const auto iy = y + ky - pad, ix = xx + kx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += double(x.f[std::size_t(((bi * c + ci) * h + iy) * wd + ix)]) *
                       w.f[std::size_t(((mi * c + ci) * kh + ky) * kw + kx)];
              }
          out[std::size_t(((bi * m + mi) * oh + y) * ow + xx)] = float(acc);
        }
  return out;
}

Tensor random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed) {
  Rng rng(seed);
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = float(rng.normal());
  return Tensor::floats(std::move(shape), std::move(v));
}

void check_close(const std::vector<float>& a, const std::vector<float>& b, double tol = 1e-4) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol).scale(1.0));
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("pointwise and spatial convolutions match a direct reference") {
    const Tensor x = random_tensor({2, 3, 5, 6}, 1);
    for (int k : {1, 3}) {
      for (int pad : {0, 1}) {
        const Tensor w = random_tensor({4, 3, k, k}, 2);
        const Tensor b = random_tensor({4}, 3);
        auto node = make_node("Conv", {{"kernel_shape", ints({k, k})}, {"pads", ints({pad, pad, pad, pad})}});
        const Tensor y = run1(node, {&x, &w, &b});
        CAPTURE(k);
        CAPTURE(pad);
        check_close(y.f, reference_conv(x, w, b.f, pad));
        const Tensor y2 = run1(node, {&x, &w});
        check_close(y2.f, reference_conv(x, w, {}, pad));
      }
    }
  }

  TEST_CASE("gemm with transposes, alpha, beta and broadcast bias") {
    const Tensor a = Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor b = Tensor::floats({2, 3}, {1, 0, 1, 0, 1, 0});
    const Tensor c = Tensor::floats({2}, {10, 20});
    nn::Attribute alpha;
    alpha.f = 2.0f;
    const Tensor y = run1(make_node("Gemm", {{"transB", one(1)}, {"alpha", alpha}}), {&a, &b, &c});
    CHECK(y.shape == std::vector<std::int64_t>{2, 2});
    CHECK(y.f == std::vector<float>{18, 24, 30, 30});
  }

  TEST_CASE("relu, softmax and pooling") {
    const Tensor x = Tensor::floats({1, 1, 2, 2}, {-1, 2, 3, -4});
    CHECK(run1(make_node("Relu"), {&x}).f == std::vector<float>{0, 2, 3, 0});
    CHECK(run1(make_node("GlobalAveragePool"), {&x}).f == std::vector<float>{0});
    const Tensor mp = run1(make_node("MaxPool", {{"kernel_shape", ints({2, 2})}}), {&x});
    CHECK(mp.f == std::vector<float>{3});
    const Tensor s = Tensor::floats({1, 2}, {0, std::log(3.0f)});
    const Tensor sm = run1(make_node("Softmax", {{"axis", one(-1)}}), {&s});
    CHECK(sm.f[0] == doctest::Approx(0.25));
    CHECK(sm.f[1] == doctest::Approx(0.75));
  }

  TEST_CASE("broadcast division and concat") {
    const Tensor a = Tensor::floats({2, 2}, {2, 4, 6, 8});
    const Tensor b = Tensor::floats({2, 1}, {2, 4});
    CHECK(run1(make_node("Div"), {&a, &b}).f == std::vector<float>{1, 2, 1.5f, 2});
    const Tensor c = run1(make_node("Concat", {{"axis", one(1)}}), {&a, &b});
    CHECK(c.shape == std::vector<std::int64_t>{2, 3});
    CHECK(c.f == std::vector<float>{2, 4, 2, 6, 8, 4});
  }

  TEST_CASE("unsupported operators are a model format error") {
    const Tensor x = Tensor::floats({1}, {1});
    CHECK(test::error_kind_of([&] { run1(make_node("Einsum"), {&x}); }) == ErrorKind::model_format);
  }

  TEST_CASE("graphs built with the fixture builder parse and run") {
    fixtures::OnnxBuilder b("g");
    b.input("x", {-1, 3});
    b.initializer("w", {3, 2}, {1, 0, 0, 1, 1, 1});
    b.node("MatMul", {"x", "w"}, {"h"});
    b.node("Relu", {"h"}, {"y"});
    b.output("y", {-1, 2});
    const auto g = nn::Graph::parse(b.serialize());
    CHECK(g.inputs().at(0).dims == std::vector<std::int64_t>{-1, 3});
    const auto out = g.run({{"x", Tensor::floats({2, 3}, {1, 2, 3, -5, 1, 1})}});
    CHECK(out.at("y").f == std::vector<float>{4, 5, 0, 2});
    CHECK(test::error_kind_of([&] { g.run({}); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("garbage bytes are rejected") {
    CHECK(test::error_kind_of([] { nn::Graph::parse("definitely not onnx"); }) == ErrorKind::model_format);
  }
}
