#include "doctest.h"

#include <cmath>
#include <random>

#include "gazeforge/blocks/gradcheck.hpp"

using namespace gazeforge;
using namespace gazeforge::blocks;

namespace {

// Direct cross-correlation with zero padding, no shared helpers.
Tensor naive_conv(const Tensor& x, const ConvParams<double>& p) {
  const auto& w = p.weight;
  const Eigen::Index oh = (x.height() + 2 * p.padding - w.height()) / p.stride + 1;
  const Eigen::Index ow = (x.width() + 2 * p.padding - w.width()) / p.stride + 1;
  Tensor y(x.batch(), w.batch(), oh, ow);
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index o = 0; o < w.batch(); ++o)
      for (Eigen::Index i = 0; i < oh; ++i)
        for (Eigen::Index j = 0; j < ow; ++j) {
          double s = p.bias.size() ? p.bias(o) : 0.0;
          for (Eigen::Index c = 0; c < w.channels(); ++c)
            for (Eigen::Index a = 0; a < w.height(); ++a)
              for (Eigen::Index b = 0; b < w.width(); ++b) {
                const Eigen::Index r = i * p.stride - p.padding + a, q = j * p.stride - p.padding + b;
                if (r >= 0 && q >= 0 && r < x.height() && q < x.width()) s += x(n, c, r, q) * w(o, c, a, b);
              }
          y(n, o, i, j) = s;
        }
  return y;
}

ConvParams<double> zero_conv(Eigen::Index out, Eigen::Index in, Eigen::Index k, int stride, int padding) {
  ConvParams<double> p;
  p.weight = Tensor(out, in, k, k);
  p.bias = Eigen::VectorXd::Zero(out);
  p.stride = stride;
  p.padding = padding;
  return p;
}

std::vector<DecoderBlockParams<double>> random_stack(std::mt19937_64& rng, DecoderKind kind, int blocks,
                                                     Eigen::Index c0, Eigen::Index skip) {
  std::vector<DecoderBlockParams<double>> out;
  Eigen::Index c = c0;
  for (int i = 0; i < blocks; ++i) {
    const Eigen::Index in = c + (i > 0 ? skip : 0);
    out.push_back(random_decoder_block(rng, kind, in, 4, 3));
    c = 3;
  }
  return out;
}

}  // namespace

TEST_CASE("conv2d examples") {
  Tensor x(1, 1, 2, 2);
  x.values() << 1, 2, 3, 4;

  auto ones = zero_conv(1, 1, 2, 1, 0);
  ones.weight.values().setOnes();
  const auto y = conv2d(x, ones);
  REQUIRE(y.dims() == Tensor::Dims{1, 1, 1, 1});
  CHECK(y(0, 0, 0, 0) == 10.0);

  auto identity = zero_conv(1, 1, 1, 1, 0);
  identity.weight.values().setOnes();
  CHECK(conv2d(x, identity).values() == x.values());

  CHECK((conv2d(x, zero_conv(2, 1, 3, 1, 1)).values().array() == 0).all());

  CHECK_THROWS_AS(conv2d(x, zero_conv(1, 1, 3, 1, 0)), Error);
  CHECK_THROWS_AS(conv2d(x, zero_conv(1, 2, 1, 1, 0)), Error);
}

TEST_CASE("conv2d matches a direct loop") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int stride = 1 + trial % 2, pad = trial % 3;
    const auto p = random_conv(rng, 3, 2, 3, stride, pad);
    const auto x = Tensor::uniform({2, 2, 7, 6}, rng);
    CHECK((conv2d(x, p).values() - naive_conv(x, p).values()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("deconv2d examples") {
  std::mt19937_64 rng(2);
  SUBCASE("1x1 input with a delta gives the retained kernel window") {
    Tensor x(1, 1, 1, 1);
    x.values() << 1;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        auto p = zero_conv(1, 1, 4, 2, 1);
        p.weight(0, 0, a, b) = 1;
        const auto y = deconv2d(x, p);
        REQUIRE(y.dims() == Tensor::Dims{1, 1, 2, 2});
        // Output (i, j) reads kernel tap (i + 1, j + 1): only the central 2x2 window survives the padding.
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) CHECK(y(0, 0, i, j) == ((a == i + 1 && b == j + 1) ? 1.0 : 0.0));
      }
  }

  SUBCASE("zero input, no bias") {
    auto p = random_deconv(rng, 2, 3);
    p.bias.setZero();
    CHECK((deconv2d(Tensor(1, 2, 3, 3), p).values().array() == 0).all());
  }

  SUBCASE("doubles the spatial size") {
    const auto p = random_deconv(rng, 2, 3);
    CHECK(deconv2d(Tensor(2, 2, 5, 3), p).dims() == Tensor::Dims{2, 3, 10, 6});
  }
}

TEST_CASE("deconv2d is the adjoint of conv2d") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_conv(rng, 3, 2, 4, 2, 1);
    p.bias.resize(0);
    const auto x = Tensor::uniform({2, 2, 8, 6}, rng);
    const auto y = Tensor::uniform({2, 3, 4, 3}, rng);
    CHECK(std::abs(inner_product(conv2d(x, p), y) - inner_product(x, deconv2d(y, p))) < 1e-10);
  }
}

TEST_CASE("attention module") {
  std::mt19937_64 rng(4);
  const auto x = Tensor::uniform({2, 3, 4, 4}, rng);

  SUBCASE("zero input") { CHECK((am_forward(Tensor(2, 3, 4, 4), random_attention(rng, 3)).values().array() == 0).all()); }

  SUBCASE("zero gate weights halve the input") {
    const AttentionParams<double> p{zero_conv(3, 3, 1, 1, 0)};
    CHECK((am_forward(x, p).values() - 0.5 * x.values()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("contraction") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto y = am_forward(x, random_attention(rng, 3));
      CHECK((y.values().cwiseAbs().array() <= x.values().cwiseAbs().array()).all());
    }
  }

  SUBCASE("shape mismatch") { CHECK_THROWS_AS(am_forward(x, random_attention(rng, 4)), Error); }
}

TEST_CASE("scSE") {
  std::mt19937_64 rng(5);
  const auto x = Tensor::uniform({2, 4, 3, 5}, rng);

  SUBCASE("zero input") { CHECK((scse_forward(Tensor(1, 4, 3, 3), random_scse(rng, 4)).values().array() == 0).all()); }

  SUBCASE("zero branch weights halve the input") {
    const ScseParams<double> p{zero_conv(2, 4, 1, 1, 0), zero_conv(4, 2, 1, 1, 0), zero_conv(1, 4, 1, 1, 0)};
    CHECK((scse_forward(x, p).values() - 0.5 * x.values()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("contraction and finiteness") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto y = scse_forward(x, random_scse(rng, 4));
      CHECK((y.values().cwiseAbs().array() <= x.values().cwiseAbs().array()).all());
      CHECK(y.values().allFinite());
    }
  }

  SUBCASE("fusion takes the elementwise max") {
    double out = 0;
    CHECK(scse_fuse(0.2, -0.4, out));
    CHECK(out == 0.2);
    CHECK_FALSE(scse_fuse(-1.0, 3.0, out));
    CHECK(out == 3.0);
  }

  SUBCASE("shape mismatch") { CHECK_THROWS_AS(scse_forward(x, random_scse(rng, 6)), Error); }
}

TEST_CASE("boundary refinement") {
  std::mt19937_64 rng(6);
  const auto x = Tensor::uniform({2, 3, 5, 4}, rng);

  SUBCASE("zero branch is the identity, bit for bit") {
    const BoundaryRefinementParams<double> p{zero_conv(3, 3, 3, 1, 1), zero_conv(3, 3, 3, 1, 1)};
    CHECK(br_forward(x, p).values() == x.values());
  }

  SUBCASE("zero input with zero biases") {
    auto p = random_boundary_refinement(rng, 3);
    p.first.bias.setZero();
    p.second.bias.setZero();
    CHECK((br_forward(Tensor(1, 3, 4, 4), p).values().array() == 0).all());
  }

  SUBCASE("y - x equals the independently recomputed branch") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = random_boundary_refinement(rng, 3);
      Tensor mid = naive_conv(x, p.first);
      mid.values() = mid.values().cwiseMax(0.0);
      const Tensor branch = naive_conv(mid, p.second);
      CHECK((br_forward(x, p).values() - x.values() - branch.values()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("shape mismatch") { CHECK_THROWS_AS(br_forward(x, random_boundary_refinement(rng, 2)), Error); }
}

TEST_CASE("decoder shape contract") {
  std::mt19937_64 rng(7);
  for (DecoderKind kind : {DecoderKind::attention, DecoderKind::scse}) {
    CAPTURE(to_string(kind));
    const auto one = random_stack(rng, kind, 1, 5, 0);
    CHECK(decoder_forward({Tensor::uniform({1, 5, 8, 8}, rng)}, one, kind).dims() == Tensor::Dims{1, 3, 16, 16});

    const auto three = random_stack(rng, kind, 3, 5, 0);
    const auto y = decoder_forward({Tensor::uniform({1, 5, 8, 8}, rng)}, three, kind);
    CHECK(y.dims() == Tensor::Dims{1, 3, 64, 64});
    CHECK(y.values().allFinite());

    const auto skipped = random_stack(rng, kind, 3, 5, 2);
    const std::vector<Tensor> features{Tensor::uniform({1, 5, 8, 8}, rng), Tensor::uniform({1, 2, 16, 16}, rng),
                                       Tensor::uniform({1, 2, 32, 32}, rng)};
    CHECK(decoder_forward(features, skipped, kind).dims() == Tensor::Dims{1, 3, 64, 64});

    const std::vector<Tensor> bad{Tensor::uniform({1, 5, 8, 8}, rng), Tensor::uniform({1, 2, 15, 16}, rng)};
    try {
      decoder_forward(bad, skipped, kind);
      FAIL("expected a shape error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::shape);
      CHECK(std::string(e.what()).find("16x16") != std::string::npos);
    }
  }
}

TEST_CASE("decoder with zero weights outputs zeros") {
  std::mt19937_64 rng(8);
  for (DecoderKind kind : {DecoderKind::attention, DecoderKind::scse}) {
    auto blocks = random_stack(rng, kind, 2, 4, 0);
    for (auto& b : blocks) zero_weights(b);
    const auto y = decoder_forward({Tensor::uniform({1, 4, 4, 4}, rng)}, blocks, kind);
    CHECK((y.values().array() == 0).all());
  }
}

TEST_CASE("block gradients match central differences") {
  std::mt19937_64 rng(9);
  auto check = [](const BlockHandle& h, const std::vector<Tensor>& in) {
    const auto r = finite_diff_gradcheck(h, in);
    CAPTURE(h.name);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.checked > 0);
    return r;
  };
  for (int trial = 0; trial < 3; ++trial) {
    check(conv2d_handle(random_conv(rng, 3, 2, 3, 1 + trial % 2, 1)), {Tensor::uniform({2, 2, 5, 5}, rng)});
    check(deconv2d_handle(random_deconv(rng, 2, 3)), {Tensor::uniform({2, 2, 3, 3}, rng)});
    check(am_handle(random_attention(rng, 3)), {Tensor::uniform({2, 3, 4, 4}, rng)});
    check(scse_handle(random_scse(rng, 4)), {Tensor::uniform({2, 4, 3, 3}, rng)});
    check(br_handle(random_boundary_refinement(rng, 2)), {Tensor::uniform({1, 2, 4, 4}, rng)});
    for (DecoderKind kind : {DecoderKind::attention, DecoderKind::scse}) {
      check(decoder_handle(random_stack(rng, kind, 2, 3, 2), kind),
            {Tensor::uniform({1, 3, 2, 2}, rng), Tensor::uniform({1, 2, 4, 4}, rng)});
    }
  }
}

TEST_CASE("gradcheck catches a wrong backward pass") {
  std::mt19937_64 rng(10);
  auto h = conv2d_handle(random_conv(rng, 2, 2, 3, 1, 1));
  const auto forward = h.backward;
  h.backward = [forward](const std::vector<Tensor>& in, const Tensor& g) {
    auto out = forward(in, g);
    out[0].values() *= 1.01;
    return out;
  };
  CHECK(finite_diff_gradcheck(h, {Tensor::uniform({1, 2, 4, 4}, rng)}).max_rel_error > 1e-3);
}

TEST_CASE("batch norm and channel helpers") {
  std::mt19937_64 rng(11);
  const auto x = Tensor::uniform({2, 3, 2, 2}, rng);
  CHECK((batch_norm(x, BatchNormParams<double>::identity(3)).values() - x.values()).cwiseAbs().maxCoeff() < 1e-4);
  const auto b = Tensor::uniform({2, 2, 2, 2}, rng);
  const auto cat = concat_channels(x, b);
  CHECK(cat.channels() == 5);
  const auto [left, right] = split_channels(cat, 3);
  CHECK(left.values() == x.values());
  CHECK(right.values() == b.values());
  CHECK_THROWS_AS(concat_channels(x, Tensor(2, 2, 3, 2)), Error);
}
