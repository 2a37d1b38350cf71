#include <cmath>
#include <vector>

#include "auxvae/adam.hpp"
#include "auxvae/grad_check.hpp"
#include "auxvae/ops.hpp"
#include "auxvae/param_store.hpp"
#include "auxvae/rng.hpp"
#include "auxvae/tensor.hpp"
#include "doctest.h"

using namespace auxvae;
using namespace auxvae::nn;

namespace {

// Sums all entries into a scalar so any op output can feed backward().
template <class T>
Tensor<T> sum_all(const Tensor<T>& x) {
  auto ones = tensor<T>(x->cols, 1);
  for (auto& v : ones->val) v = T(1);
  auto col = matmul(x, ones);            // (n x 1)
  auto ones_row = tensor<T>(1, x->rows);
  for (auto& v : ones_row->val) v = T(1);
  return matmul(ones_row, col);          // (1 x 1)
}

Tensor<double> randd(int rows, int cols, Rng& rng, bool rg = false) {
  auto t = tensor<double>(rows, cols, rg);
  for (auto& v : t->val) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("scalar chain backpropagates product rule") {
  auto a = scalar_tensor<double>(3.0, true);
  auto b = scalar_tensor<double>(4.0, true);
  auto y = matmul(a, b);  // 1x1 * 1x1
  backward(y);
  CHECK(y->val[0] == doctest::Approx(12.0));
  CHECK(a->grad[0] == doctest::Approx(4.0));
  CHECK(b->grad[0] == doctest::Approx(3.0));
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
  auto a = scalar_tensor<double>(2.0, true);
  {
    auto y = mul_scalar(a, 5.0);
    backward(y);
  }
  {
    auto y = mul_scalar(a, 5.0);
    backward(y);
  }
  CHECK(a->grad[0] == doctest::Approx(10.0));
  a->zero_grad();
  CHECK(a->grad[0] == 0.0);
}

TEST_CASE("diamond-shaped graph sums both paths") {
  // y = a*a contributes twice through the same leaf.
  auto a = scalar_tensor<double>(3.0, true);
  auto y = matmul(a, a);
  backward(y);
  CHECK(a->grad[0] == doctest::Approx(6.0));
}

TEST_CASE("backward seed scales the whole gradient") {
  auto a = scalar_tensor<double>(2.0, true);
  auto y = mul_scalar(a, 3.0);
  backward(y, 0.25);
  CHECK(a->grad[0] == doctest::Approx(0.75));
}

TEST_CASE("backward rejects non-scalar roots") {
  auto a = tensor<double>(2, 2, true);
  CHECK_THROWS(backward(a));
}

TEST_CASE("constant subgraphs are not tracked") {
  auto a = tensor<double>(2, 2, false);
  auto b = tensor<double>(2, 2, false);
  auto y = add(a, b);
  CHECK_FALSE(y->requires_grad);
}

}  // TEST_SUITE tensor

TEST_SUITE("ops_forward") {

TEST_CASE("gelu matches reference values") {
  auto x = row_vector<double>({0.0, 1.0, -1.0}, false);
  auto y = gelu(x);
  CHECK(y->val[0] == doctest::Approx(0.0));
  CHECK(y->val[1] == doctest::Approx(0.841345).epsilon(1e-5));
  CHECK(y->val[2] == doctest::Approx(-0.158655).epsilon(1e-4));
}

TEST_CASE("softmax rows are normalized and stable under large logits") {
  auto x = tensor_from<double>(2, 3, {1000.0, 1000.0, 1000.0, 0.0, 1.0, 2.0});
  auto y = softmax_rows(x);
  for (int i = 0; i < 2; ++i) {
    double s = 0;
    for (int j = 0; j < 3; ++j) s += y->at(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(y->at(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(y->at(1, 2) > y->at(1, 1));
}

TEST_CASE("causal dilated conv matches the hand example") {
  // Input [1,2,3,4,5], one channel; K=2, d=2, taps [1,1], bias 0:
  // out[t] = x[t] + x[t-2] -> [1, 2, 4, 6, 8]
  auto h = tensor_from<double>(5, 1, {1, 2, 3, 4, 5});
  auto w = tensor_from<double>(2, 1, {1, 1});
  auto b = tensor_from<double>(1, 1, {0});
  auto y = conv1d_causal(h, w, b, 2);
  std::vector<double> expect{1, 2, 4, 6, 8};
  for (int t = 0; t < 5; ++t) CHECK(y->val[t] == doctest::Approx(expect[t]));
}

TEST_CASE("conv output at t only depends on inputs at or before t") {
  Rng rng(7);
  for (int ksize : {1, 2, 3}) {
    for (int dil : {1, 2, 4}) {
      int tlen = 12, cin = 2, cout = 2;
      auto h = randd(tlen, cin, rng);
      auto w = randd(ksize * cout, cin, rng);
      auto b = randd(1, cout, rng);
      auto base = conv1d_causal(h, w, b, dil);
      for (int tp = 0; tp < tlen; ++tp) {
        auto h2 = tensor_from<double>(tlen, cin, h->val);
        for (int c = 0; c < cin; ++c) h2->at(tp, c) += 10.0;
        auto pert = conv1d_causal(h2, w, b, dil);
        for (int t = 0; t < tp; ++t)
          for (int c = 0; c < cout; ++c)
            CHECK(pert->at(t, c) == doctest::Approx(base->at(t, c)));
      }
    }
  }
}

TEST_CASE("transposed conv zero-stuffs before convolving") {
  // Input [a, b], stride 2, K=1 identity kernel -> [a, 0, b, 0].
  auto h = tensor_from<double>(2, 1, {3.0, 5.0});
  auto w = tensor_from<double>(1, 1, {1.0});
  auto b = tensor_from<double>(1, 1, {0.0});
  auto y = conv1d_transposed(h, w, b, 2);
  REQUIRE(y->rows == 4);
  CHECK(y->val[0] == doctest::Approx(3.0));
  CHECK(y->val[1] == doctest::Approx(0.0));
  CHECK(y->val[2] == doctest::Approx(5.0));
  CHECK(y->val[3] == doctest::Approx(0.0));
}

TEST_CASE("batch norm normalizes over rows") {
  auto x = tensor_from<double>(2, 1, {1.0, 3.0});
  auto gamma = row_vector<double>({1.0});
  auto beta = row_vector<double>({0.0});
  auto rm = row_vector<double>({0.0});
  auto rv = row_vector<double>({1.0});
  auto y = batch_norm(x, gamma, beta, rm, rv, /*train=*/true);
  CHECK(y->val[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(y->val[1] == doctest::Approx(1.0).epsilon(1e-4));
  // Running stats moved toward batch stats (momentum 0.1).
  CHECK(rm->val[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 2.0));
  CHECK(rv->val[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));
}

TEST_CASE("batch norm training mode requires 2+ rows, eval works with 1") {
  auto x = tensor_from<double>(1, 1, {5.0});
  auto gamma = row_vector<double>({1.0});
  auto beta = row_vector<double>({0.0});
  auto rm = row_vector<double>({1.0});
  auto rv = row_vector<double>({4.0});
  CHECK_THROWS(batch_norm(x, gamma, beta, rm, rv, true));
  auto y = batch_norm(x, gamma, beta, rm, rv, false);
  CHECK(y->val[0] == doctest::Approx((5.0 - 1.0) / 2.0).epsilon(1e-4));
}

TEST_CASE("max pool handles ragged tail and routes gradient to the argmax") {
  auto h = tensor_from<double>(5, 1, {1, 7, 3, 2, 9}, true);
  auto y = max_pool1d(h, 2);
  REQUIRE(y->rows == 3);
  CHECK(y->val[0] == 7);
  CHECK(y->val[1] == 3);
  CHECK(y->val[2] == 9);
  backward(sum_all(y));
  std::vector<double> expect{0, 1, 1, 0, 1};
  for (int i = 0; i < 5; ++i) CHECK(h->grad[i] == expect[i]);
}

TEST_CASE("clamp zeroes gradient outside the range") {
  auto x = row_vector<double>({-2.0, 0.5, 2.0}, true);
  auto y = clamp(x, -1.0, 1.0);
  CHECK(y->val[0] == -1.0);
  CHECK(y->val[1] == 0.5);
  CHECK(y->val[2] == 1.0);
  backward(sum_all(y));
  CHECK(x->grad[0] == 0.0);
  CHECK(x->grad[1] == 1.0);
  CHECK(x->grad[2] == 0.0);
}

TEST_CASE("losses match hand values") {
  auto pred = row_vector<double>({1.0, 2.0});
  auto target = row_vector<double>({0.0, 4.0});
  CHECK(mse_loss(pred, target)->val[0] == doctest::Approx((1.0 + 4.0) / 2));
  CHECK(mae_loss(pred, target)->val[0] == doctest::Approx((1.0 + 2.0) / 2));

  auto probs = row_vector<double>({0.7, 0.2, 0.1});
  auto onehot = row_vector<double>({1.0, 0.0, 0.0});
  CHECK(cross_entropy_loss(probs, onehot)->val[0] ==
        doctest::Approx(-std::log(0.7)));
}

TEST_CASE("cross entropy rejects unnormalized probabilities") {
  auto bad = row_vector<double>({0.7, 0.7, 0.1});
  auto onehot = row_vector<double>({1.0, 0.0, 0.0});
  CHECK_THROWS(cross_entropy_loss(bad, onehot));
  auto neg = row_vector<double>({1.2, -0.1, -0.1});
  CHECK_THROWS(cross_entropy_loss(neg, onehot));
}

TEST_CASE("logit cross entropy matches the softmax path and stays finite") {
  auto logits = row_vector<double>({0.3, -1.2, 2.0});
  auto onehot = row_vector<double>({0.0, 1.0, 0.0});
  auto via_probs = cross_entropy_loss(softmax_rows(logits), onehot);
  auto fused = cross_entropy_with_logits(logits, onehot);
  CHECK(fused->val[0] == doctest::Approx(via_probs->val[0]).epsilon(1e-12));

  // saturated logits: softmax underflows to 0, the fused loss does not
  auto extreme = row_vector<double>({1000.0, 0.0});
  auto pick_small = row_vector<double>({0.0, 1.0});
  CHECK(cross_entropy_with_logits(extreme, pick_small)->val[0] ==
        doctest::Approx(1000.0));
  auto pick_big = row_vector<double>({1.0, 0.0});
  CHECK(cross_entropy_with_logits(extreme, pick_big)->val[0] ==
        doctest::Approx(0.0));

  auto not_onehot = row_vector<double>({0.4, 0.4});
  CHECK_THROWS(cross_entropy_with_logits(extreme, not_onehot));
}

TEST_CASE("gaussian kl closed form and domain check") {
  auto mu0 = row_vector<double>({0.0});
  auto s1 = row_vector<double>({1.0});
  CHECK(gaussian_kl(mu0, s1)->val[0] == doctest::Approx(0.0));

  auto mu1 = row_vector<double>({1.0});
  CHECK(gaussian_kl(mu1, s1)->val[0] == doctest::Approx(0.5));

  auto s2 = row_vector<double>({2.0});
  CHECK(gaussian_kl(mu0, s2)->val[0] ==
        doctest::Approx(0.5 * (4.0 - 1.0) - std::log(2.0)).epsilon(1e-9));

  auto s_bad = row_vector<double>({0.0});
  CHECK_THROWS(gaussian_kl(mu0, s_bad));
}

TEST_CASE("reparameterize is deterministic given the rng seed") {
  auto mu = row_vector<double>({1.0, 2.0}, true);
  auto sigma = row_vector<double>({0.5, 0.1}, true);
  Rng r1(42), r2(42);
  auto z1 = reparameterize(mu, sigma, r1);
  auto z2 = reparameterize(mu, sigma, r2);
  CHECK(z1->val[0] == z2->val[0]);
  CHECK(z1->val[1] == z2->val[1]);
  backward(sum_all(z1));
  CHECK(mu->grad[0] == doctest::Approx(1.0));
  // d z / d sigma is the drawn noise.
  Rng r3(42);
  double e0 = r3.normal(), e1 = r3.normal();
  CHECK(sigma->grad[0] == doctest::Approx(e0));
  CHECK(sigma->grad[1] == doctest::Approx(e1));
}

}  // TEST_SUITE ops_forward

TEST_SUITE("ops_grad") {

// Every differentiable op, finite-difference checked in double precision.
TEST_CASE("composite graph passes gradient check") {
  ParamStore<double> store(123);
  auto w1 = store.add_param("w1", 3, 4, Init::GlorotUniform);
  auto b1 = store.add_param("b1", 1, 4, Init::Zeros);
  auto w2 = store.add_param("w2", 4, 2, Init::GlorotUniform);
  auto b2 = store.add_param("b2", 1, 2, Init::Zeros);
  Rng data_rng(5);
  auto x = randd(2, 3, data_rng);
  auto target = randd(2, 2, data_rng);

  auto f = [&](ParamStore<double>& s) {
    auto h = gelu(dense(x, s.param("w1"), s.param("b1")));
    auto y = dense(h, s.param("w2"), s.param("b2"));
    return mse_loss(y, target);
  };
  auto report = grad_check<double>(f, store, 16, 99);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("conv, pooling, batch norm and softmax pass gradient check") {
  ParamStore<double> store(321);
  store.add_param("conv.w", 3 * 2, 2, Init::GlorotUniform, 3 * 2, 3 * 2);
  store.add_param("conv.b", 1, 2, Init::Zeros);
  store.add_param("bn.gamma", 1, 2, Init::Ones);
  store.add_param("bn.beta", 1, 2, Init::Zeros);
  store.add_param("out.w", 2, 3, Init::GlorotUniform);
  store.add_param("out.b", 1, 3, Init::Zeros);
  auto rm = store.add_buffer("bn.rm", 1, 2);
  auto rv = store.add_buffer("bn.rv", 1, 2, 1.0);
  Rng data_rng(17);
  auto x = randd(8, 2, data_rng);
  auto onehot = tensor_from<double>(1, 3, {0.0, 1.0, 0.0});

  auto f = [&](ParamStore<double>& s) {
    auto h = conv1d_causal(x, s.param("conv.w"), s.param("conv.b"), 2);
    h = gelu(h);
    h = batch_norm(h, s.param("bn.gamma"), s.param("bn.beta"), rm, rv, true);
    h = max_pool1d(h, 3);
    h = max_over_time(h);
    auto logits = dense(h, s.param("out.w"), s.param("out.b"));
    auto probs = softmax_rows(logits);
    return cross_entropy_loss(probs, onehot);
  };
  auto report = grad_check<double>(f, store, 12, 7);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("logit cross entropy passes gradient check") {
  ParamStore<double> store(91);
  store.add_param("w", 3, 4, Init::GlorotUniform);
  store.add_param("b", 1, 4, Init::Zeros);
  Rng data_rng(23);
  auto x = randd(2, 3, data_rng);
  auto onehot = tensor_from<double>(2, 4,
                                    {0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0});

  auto f = [&](ParamStore<double>& s) {
    auto logits = dense(x, s.param("w"), s.param("b"));
    return cross_entropy_with_logits(logits, onehot);
  };
  auto report = grad_check<double>(f, store, 16, 13);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("transposed conv and reshape pass gradient check") {
  ParamStore<double> store(555);
  store.add_param("tc.w", 3 * 2, 3, Init::GlorotUniform, 9, 6);
  store.add_param("tc.b", 1, 2, Init::Zeros);
  Rng data_rng(11);
  auto x = randd(4, 3, data_rng);
  auto target = randd(1, 16, data_rng);

  auto f = [&](ParamStore<double>& s) {
    auto y = conv1d_transposed(x, s.param("tc.w"), s.param("tc.b"), 2);
    auto flat = reshape(y, 1, 16);
    return mse_loss(flat, target);
  };
  auto report = grad_check<double>(f, store, 18, 3);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("kl and reparameterization pass gradient check") {
  ParamStore<double> store(777);
  store.add_param("mu", 1, 4, Init::GlorotUniform);
  store.add_param("log_sigma", 1, 4, Init::Zeros);
  Rng data_rng(2);
  auto target = randd(1, 4, data_rng);

  auto f = [&](ParamStore<double>& s) {
    auto sigma = exp_elem(clamp(s.param("log_sigma"), -7.0, 7.0));
    Rng eps_rng(2024);  // fixed: noise must match across re-evaluations
    auto z = reparameterize(s.param("mu"), sigma, eps_rng);
    auto recon = mse_loss(z, target);
    auto kl = gaussian_kl(s.param("mu"), sigma);
    return add(recon, mul_scalar(kl, 0.5));
  };
  auto report = grad_check<double>(f, store, 8, 31);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("mae and concat pass gradient check away from kinks") {
  ParamStore<double> store(888);
  store.add_param("w", 2, 3, Init::GlorotUniform);
  store.add_param("b", 1, 3, Init::Zeros);
  Rng data_rng(29);
  auto xa = randd(2, 1, data_rng);
  auto xb = randd(2, 1, data_rng);
  auto target = randd(2, 3, data_rng);

  auto f = [&](ParamStore<double>& s) {
    auto x = concat_cols(xa, xb);
    auto rows = concat_rows(trim_rows(x, 1), trim_rows(x, 1));
    auto y = dense(rows, s.param("w"), s.param("b"));
    return mae_loss(y, target);
  };
  auto report = grad_check<double>(f, store, 6, 13);
  CHECK(report.max_rel_err < 1e-6);
}

}  // TEST_SUITE ops_grad

TEST_SUITE("optimizer") {

TEST_CASE("first adam step moves by lr against the gradient sign") {
  ParamStore<double> store(1);
  auto p = store.add_param("p", 1, 1, Init::Zeros);
  p->val[0] = 1.0;
  p->ensure_grad();
  p->grad[0] = 10.0;  // any positive value: first step is -lr * sign
  AdamState<double> opt;
  opt.lr = 0.1;
  adam_step(store, opt);
  CHECK(p->val[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(opt.step_count == 1);
}

TEST_CASE("weight decay shrinks parameters with zero gradient") {
  ParamStore<double> store(1);
  auto p = store.add_param("p", 1, 1, Init::Zeros);
  p->val[0] = 5.0;
  AdamState<double> opt;
  opt.lr = 0.01;
  opt.weight_decay = 0.1;
  for (int i = 0; i < 10; ++i) {
    store.zero_grad();
    adam_step(store, opt);
  }
  CHECK(p->val[0] < 5.0);
  CHECK(p->val[0] > 0.0);
}

TEST_CASE("non-finite gradient aborts with the parameter path") {
  ParamStore<double> store(1);
  auto p = store.add_param("enc.w", 1, 1, Init::Zeros);
  p->ensure_grad();
  p->grad[0] = std::nan("");
  AdamState<double> opt;
  CHECK_THROWS_WITH_AS(adam_step(store, opt),
                       "adam_step: non-finite gradient in enc.w",
                       std::runtime_error);
}

TEST_CASE("adam trajectory matches a reference implementation") {
  // Two steps on f(p) = p^2 / 2 (gradient = p), lr=0.1, default betas.
  ParamStore<double> store(1);
  auto p = store.add_param("p", 1, 1, Init::Zeros);
  p->val[0] = 1.0;
  AdamState<double> opt;
  opt.lr = 0.1;

  double ref_p = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    double g = ref_p;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1 - std::pow(0.9, t));
    double vh = v / (1 - std::pow(0.999, t));
    ref_p -= 0.1 * mh / (std::sqrt(vh) + 1e-8);

    store.zero_grad();
    p->ensure_grad();
    p->grad[0] = p->val[0];
    adam_step(store, opt);
  }
  CHECK(p->val[0] == doctest::Approx(ref_p).epsilon(1e-12));
}

}  // TEST_SUITE optimizer

TEST_SUITE("rng") {

TEST_CASE("derived streams differ and are reproducible") {
  std::uint64_t s1 = derive_seed(42, "shuffle");
  std::uint64_t s2 = derive_seed(42, "init");
  std::uint64_t s3 = derive_seed(43, "shuffle");
  CHECK(s1 != s2);
  CHECK(s1 != s3);
  CHECK(s1 == derive_seed(42, "shuffle"));
  CHECK(derive_seed(42, std::uint64_t{7}) != derive_seed(42, std::uint64_t{8}));
}

TEST_CASE("normal draws have plausible first and second moments") {
  Rng rng(99);
  int n = 20000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 8; ++i) CHECK(sorted[i] == i);
}

}  // TEST_SUITE rng
