#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "srtk/imgmath.hpp"
#include "srtk/metrics_ref.hpp"

using namespace srtk;
using imgmath::GaussianKernel;
using Catch::Approx;

namespace {

ImageTensor constant_image(int h, int w, int c, double value,
                           Domain d = Domain::Unit) {
    ImageTensor img(h, w, c, d);
    std::fill(img.data.begin(), img.data.end(), value);
    return img;
}

}  // namespace

TEST_CASE("srgb_to_lab maps the neutral axis exactly") {
    const ImageTensor white = constant_image(1, 1, 3, 1.0);
    const ImageTensor lab_w = imgmath::srgb_to_lab(white);
    CHECK(lab_w.at(0, 0, 0) == Approx(100.0).margin(1e-10));
    CHECK(lab_w.at(0, 0, 1) == Approx(0.0).margin(1e-10));
    CHECK(lab_w.at(0, 0, 2) == Approx(0.0).margin(1e-10));

    const ImageTensor black = constant_image(1, 1, 3, 0.0);
    const ImageTensor lab_b = imgmath::srgb_to_lab(black);
    CHECK(lab_b.at(0, 0, 0) == Approx(0.0).margin(1e-10));
    CHECK(lab_b.at(0, 0, 1) == Approx(0.0).margin(1e-10));
    CHECK(lab_b.at(0, 0, 2) == Approx(0.0).margin(1e-10));

    const ImageTensor gray = constant_image(1, 1, 3, 0.5);
    const ImageTensor lab_g = imgmath::srgb_to_lab(gray);
    CHECK(lab_g.at(0, 0, 0) == Approx(53.39).margin(0.01));
    CHECK(lab_g.at(0, 0, 1) == Approx(0.0).margin(1e-10));
    CHECK(lab_g.at(0, 0, 2) == Approx(0.0).margin(1e-10));
}

TEST_CASE("srgb_to_lab rejects bad inputs") {
    CHECK_THROWS_AS(imgmath::srgb_to_lab(constant_image(2, 2, 1, 0.5)), DomainError);
    ImageTensor latent = constant_image(2, 2, 3, 0.5, Domain::Latent);
    CHECK_THROWS_AS(imgmath::srgb_to_lab(latent), DomainError);
}

TEST_CASE("lab round trip is tight for in-gamut colors") {
    std::mt19937_64 rng(7);
    const ImageTensor img = oracles::random_image(rng, 6, 5, 3, Domain::Unit, 0.02, 0.98);
    const ImageTensor lab = imgmath::srgb_to_lab(img);
    const ImageTensor back = imgmath::srgb_to_lab(imgmath::lab_to_srgb(lab));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double de = metrics_ref::delta_e2000_pair(
                lab.at(y, x, 0), lab.at(y, x, 1), lab.at(y, x, 2), back.at(y, x, 0),
                back.at(y, x, 1), back.at(y, x, 2));
            CHECK(de <= 1e-6);
        }
}

TEST_CASE("gaussian_blur preserves constants and impulse response") {
    const auto k = GaussianKernel::make(1.0);
    const ImageTensor c = constant_image(9, 9, 2, 0.731);
    const ImageTensor bc = imgmath::gaussian_blur(c, k);
    for (double v : bc.data) CHECK(v == Approx(0.731).margin(1e-12));

    // kernel weights sum to one
    double wsum = 0.0;
    for (double w : k.weights) wsum += w;
    CHECK(wsum == Approx(1.0).margin(1e-12));
    CHECK(k.radius >= static_cast<int>(std::ceil(3.0 * k.sigma)));

    // impulse response on a grid wide enough to avoid reflections
    const int n = 4 * k.radius + 1, mid = n / 2;
    ImageTensor impulse(n, n, 1, Domain::Latent);
    impulse.at(mid, mid, 0) = 1.0;
    const ImageTensor resp = imgmath::gaussian_blur(impulse, k);
    for (int dy = -k.radius; dy <= k.radius; ++dy)
        for (int dx = -k.radius; dx <= k.radius; ++dx)
            CHECK(resp.at(mid + dy, mid + dx, 0) ==
                  Approx(k.weights[dy + k.radius] * k.weights[dx + k.radius])
                      .margin(1e-15));
}

TEST_CASE("gaussian_blur preserves the mean under reflect padding") {
    std::mt19937_64 rng(11);
    const ImageTensor img = oracles::random_image(rng, 8, 8, 1);
    const auto k = GaussianKernel::make(1.7);
    const ImageTensor blurred = imgmath::gaussian_blur(img, k);
    CHECK(imgmath::mean(blurred) == Approx(imgmath::mean(img)).margin(1e-10));
}

TEST_CASE("gaussian_blur matches direct convolution and is linear") {
    std::mt19937_64 rng(13);
    const auto k = GaussianKernel::make(1.3);
    const ImageTensor x = oracles::random_image(rng, 7, 6, 1);
    const ImageTensor y = oracles::random_image(rng, 7, 6, 1);

    // direct dense convolution with the same reflect rule
    ImageTensor direct(7, 6, 1, Domain::Unit);
    for (int yy = 0; yy < 7; ++yy)
        for (int xx = 0; xx < 6; ++xx) {
            double acc = 0.0;
            for (int dy = -k.radius; dy <= k.radius; ++dy)
                for (int dx = -k.radius; dx <= k.radius; ++dx)
                    acc += k.weights[dy + k.radius] * k.weights[dx + k.radius] *
                           x.at(imgmath::reflect_index(yy + dy, 7),
                                imgmath::reflect_index(xx + dx, 6), 0);
            direct.at(yy, xx, 0) = acc;
        }
    const ImageTensor fast = imgmath::gaussian_blur(x, k);
    for (std::size_t i = 0; i < fast.data.size(); ++i)
        CHECK(fast.data[i] == Approx(direct.data[i]).margin(1e-12));

    // linearity
    ImageTensor combo(7, 6, 1, Domain::Latent);
    for (std::size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = 2.5 * x.data[i] - 0.75 * y.data[i];
    const ImageTensor lhs = imgmath::gaussian_blur(combo, k);
    const ImageTensor bx = imgmath::gaussian_blur(x, k);
    const ImageTensor by = imgmath::gaussian_blur(y, k);
    for (std::size_t i = 0; i < lhs.data.size(); ++i)
        CHECK(lhs.data[i] == Approx(2.5 * bx.data[i] - 0.75 * by.data[i]).margin(1e-10));
}

TEST_CASE("gaussian_blur adjoint satisfies the inner-product identity") {
    std::mt19937_64 rng(17);
    const auto k = GaussianKernel::make(2.0);
    const ImageTensor x = oracles::random_image(rng, 6, 9, 2);
    const ImageTensor y = oracles::random_image(rng, 6, 9, 2);
    const ImageTensor bx = imgmath::gaussian_blur(x, k);
    const ImageTensor bty = imgmath::gaussian_blur_adjoint(y, k);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        lhs += bx.data[i] * y.data[i];
        rhs += x.data[i] * bty.data[i];
    }
    CHECK(lhs == Approx(rhs).margin(1e-12));
}

TEST_CASE("gradient_magnitude basics") {
    const ImageTensor c = constant_image(6, 6, 1, 0.4);
    for (double v : imgmath::gradient_magnitude(c).data)
        CHECK(v == Approx(0.0).margin(1e-15));

    // unit-slope vertical ramp: interior magnitude 1
    ImageTensor ramp(8, 8, 1, Domain::Latent);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = static_cast<double>(y);
    const ImageTensor g = imgmath::gradient_magnitude(ramp);
    for (int y = 1; y < 7; ++y)
        for (int x = 0; x < 8; ++x) CHECK(g.at(y, x, 0) == Approx(1.0).margin(1e-9));

    CHECK_THROWS_AS(imgmath::gradient_magnitude(constant_image(4, 4, 3, 0.1)),
                    DomainError);
}

TEST_CASE("gradient_magnitude transpose symmetry and stencil oracle") {
    std::mt19937_64 rng(19);
    const ImageTensor img = oracles::random_image(rng, 7, 7, 1);
    ImageTensor transposed(7, 7, 1, img.domain);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x) transposed.at(x, y, 0) = img.at(y, x, 0);
    const ImageTensor g = imgmath::gradient_magnitude(img);
    const ImageTensor gt = imgmath::gradient_magnitude(transposed);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x)
            CHECK(gt.at(x, y, 0) == Approx(g.at(y, x, 0)).margin(1e-12));

    const auto oracle = oracles::scharr_mag(img.data, 7, 7);
    for (std::size_t i = 0; i < oracle.size(); ++i)
        CHECK(g.data[i] == Approx(oracle[i]).margin(1e-12));
}

TEST_CASE("dft2_magnitude of constants and cosines") {
    const ImageTensor c = constant_image(6, 8, 1, 0.37);
    const ImageTensor mag = imgmath::dft2_magnitude(c);
    CHECK(mag.at(0, 0, 0) == Approx(6.0 * 8.0 * 0.37).margin(1e-9));
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x)
            if (y != 0 || x != 0) CHECK(mag.at(y, x, 0) == Approx(0.0).margin(1e-9));

    // pure cosine at integer frequency k: exactly two bins light up
    const int n = 16, k = 3;
    ImageTensor cosimg(1, n, 1, Domain::Latent);
    for (int x = 0; x < n; ++x)
        cosimg.at(0, x, 0) = std::cos(2.0 * std::numbers::pi * k * x / n);
    const ImageTensor cmag = imgmath::dft2_magnitude(cosimg);
    CHECK(cmag.at(0, k, 0) == Approx(n / 2.0).margin(1e-9));
    CHECK(cmag.at(0, n - k, 0) == Approx(n / 2.0).margin(1e-9));
    for (int x = 0; x < n; ++x)
        if (x != k && x != n - k) CHECK(cmag.at(0, x, 0) == Approx(0.0).margin(1e-9));
}

TEST_CASE("dft2_magnitude matches the naive oracle on both code paths") {
    std::mt19937_64 rng(23);
    for (const auto [h, w] : {std::pair{4, 4}, std::pair{6, 5}}) {
        const ImageTensor img = oracles::random_image(rng, h, w, 2);
        const ImageTensor mag = imgmath::dft2_magnitude(img);
        for (int c = 0; c < 2; ++c) {
            const auto oracle = oracles::naive_dft2(img, c);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double expect = std::abs(oracle[static_cast<std::size_t>(y) * w + x]);
                    CHECK(mag.at(y, x, c) ==
                          Approx(expect).margin(1e-9 * std::max(1.0, expect)));
                }
        }
    }
}

TEST_CASE("dft2_magnitude is invariant to circular shifts") {
    std::mt19937_64 rng(29);
    const int h = 8, w = 8;
    const ImageTensor img = oracles::random_image(rng, h, w, 1);
    ImageTensor shifted(h, w, 1, img.domain);
    const int sy = 3, sx = 5;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            shifted.at((y + sy) % h, (x + sx) % w, 0) = img.at(y, x, 0);
    const ImageTensor m1 = imgmath::dft2_magnitude(img);
    const ImageTensor m2 = imgmath::dft2_magnitude(shifted);
    for (std::size_t i = 0; i < m1.data.size(); ++i)
        CHECK(m1.data[i] == Approx(m2.data[i]).margin(1e-9));
}

TEST_CASE("percentile: examples, monotonicity, bounds") {
    CHECK(imgmath::percentile(std::vector<double>{5.0}, 50.0) == 5.0);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(imgmath::percentile(v, 0.0) == 1.0);
    CHECK(imgmath::percentile(v, 100.0) == 4.0);
    CHECK(imgmath::percentile(v, 50.0) == Approx(2.5).margin(1e-15));

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    std::vector<double> data(33);
    for (double& x : data) x = dist(rng);
    double prev = -1e300;
    const double lo = *std::min_element(data.begin(), data.end());
    const double hi = *std::max_element(data.begin(), data.end());
    for (double p = 0.0; p <= 100.0; p += 2.5) {
        const double q = imgmath::percentile(data, p);
        CHECK(q >= prev);
        CHECK(q >= lo);
        CHECK(q <= hi);
        prev = q;
    }

    CHECK_THROWS_AS(imgmath::percentile(std::vector<double>{}, 50.0), EmptyInput);
    CHECK_THROWS_AS(imgmath::percentile(v, 101.0), DomainError);
}

TEST_CASE("resize_bicubic identity, constants and oracle") {
    std::mt19937_64 rng(37);
    const ImageTensor img = oracles::random_image(rng, 8, 8, 3);
    const ImageTensor same = imgmath::resize_bicubic(img, 1.0);
    REQUIRE(same.height == 8);
    REQUIRE(same.width == 8);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(same.data[i] == Approx(img.data[i]).margin(1e-12));

    const ImageTensor c = constant_image(8, 8, 1, 0.42);
    const ImageTensor down = imgmath::resize_bicubic(c, 0.25);
    REQUIRE(down.height == 2);
    for (double v : down.data) CHECK(v == Approx(0.42).margin(1e-12));

    // ramp, half size, against a direct kernel-evaluation oracle
    ImageTensor ramp(8, 8, 1, Domain::Latent);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = y + 0.5 * x;
    const ImageTensor half = imgmath::resize_bicubic(ramp, 0.5);
    REQUIRE(half.height == 4);
    REQUIRE(half.width == 4);
    auto cr = [](double t) {
        const double a = std::abs(t);
        if (a <= 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
        if (a < 2.0) return -0.5 * a * a * a + 2.5 * a * a - 4.0 * a + 2.0;
        return 0.0;
    };
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const double sy = (y + 0.5) * 2.0 - 0.5;
            const double sx = (x + 0.5) * 2.0 - 0.5;
            double acc = 0.0;
            for (int j = -1; j <= 2; ++j)
                for (int i = -1; i <= 2; ++i) {
                    const int yy = std::clamp(static_cast<int>(std::floor(sy)) + j, 0, 7);
                    const int xx = std::clamp(static_cast<int>(std::floor(sx)) + i, 0, 7);
                    acc += cr(sy - (std::floor(sy) + j)) * cr(sx - (std::floor(sx) + i)) *
                           ramp.at(yy, xx, 0);
                }
            CHECK(half.at(y, x, 0) == Approx(acc).margin(1e-9));
        }

    // dimensions round, floored at 1
    const ImageTensor tiny = imgmath::resize_bicubic(c, 0.1);
    CHECK(tiny.height == 1);
    CHECK(tiny.width == 1);
    const ImageTensor up = imgmath::resize_bicubic(c, 1.3);
    CHECK(up.height == 10);  // round(8 * 1.3)

    CHECK_THROWS_AS(imgmath::resize_bicubic(img, 0.0), DomainError);
}
