#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "srtk/imgmath.hpp"
#include "srtk/metrics_ref.hpp"

using namespace srtk;
using Catch::Approx;

TEST_CASE("psnr values and symmetry") {
    std::mt19937_64 rng(97);
    const ImageTensor a = oracles::random_image(rng, 6, 6, 3);
    CHECK(std::isinf(metrics_ref::psnr(a, a, 1.0)));

    ImageTensor b255(4, 4, 1, Domain::RawDN), a255(4, 4, 1, Domain::RawDN);
    std::fill(a255.data.begin(), a255.data.end(), 100.0);
    std::fill(b255.data.begin(), b255.data.end(), 110.0);
    CHECK(metrics_ref::psnr(a255, b255, 255.0) ==
          Approx(10.0 * std::log10(65025.0 / 100.0)).margin(1e-9));

    // halving the residual adds 20*log10(2) dB
    ImageTensor bhalf = a255;
    std::fill(bhalf.data.begin(), bhalf.data.end(), 105.0);
    CHECK(metrics_ref::psnr(a255, bhalf, 255.0) -
              metrics_ref::psnr(a255, b255, 255.0) ==
          Approx(20.0 * std::log10(2.0)).margin(1e-9));

    const ImageTensor b = oracles::random_image(rng, 6, 6, 3);
    CHECK(metrics_ref::psnr(a, b, 1.0) == Approx(metrics_ref::psnr(b, a, 1.0)).margin(1e-12));
    CHECK(metrics_ref::psnr(a, b, 1.0) == Approx(oracles::psnr(a, b, 1.0)).margin(1e-9));

    ImageTensor wrong(2, 2, 1, Domain::Unit);
    CHECK_THROWS_AS(metrics_ref::psnr(a, wrong, 1.0), ShapeError);
}

TEST_CASE("ssim: identity, constant shift, symmetry, oracle") {
    std::mt19937_64 rng(101);
    const ImageTensor a = oracles::random_image(rng, 16, 16, 1);
    CHECK(metrics_ref::ssim(a, a) == Approx(1.0).margin(1e-12));

    // constant images: variance terms vanish, sigma factor is exactly 1
    const double c = 0.5, d = 0.125;
    ImageTensor ca(12, 12, 1, Domain::Unit), cb(12, 12, 1, Domain::Unit);
    std::fill(ca.data.begin(), ca.data.end(), c);
    std::fill(cb.data.begin(), cb.data.end(), c + d);
    const double c1 = 0.01 * 0.01;
    const double expect = (2.0 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
    CHECK(metrics_ref::ssim(ca, cb) == Approx(expect).margin(1e-10));

    const ImageTensor b = oracles::random_image(rng, 16, 16, 1);
    CHECK(metrics_ref::ssim(a, b) == Approx(metrics_ref::ssim(b, a)).margin(1e-12));
    CHECK(metrics_ref::ssim(a, b) ==
          Approx(oracles::ssim(a, b, 11, 1.5, 0.01, 0.03, 1.0)).margin(1e-10));

    // multichannel goes through the luma projection
    const ImageTensor rgb1 = oracles::random_image(rng, 16, 16, 3);
    const ImageTensor rgb2 = oracles::random_image(rng, 16, 16, 3);
    CHECK(metrics_ref::ssim(rgb1, rgb2) ==
          Approx(oracles::ssim(rgb1, rgb2, 11, 1.5, 0.01, 0.03, 1.0)).margin(1e-10));

    ImageTensor tiny(8, 8, 1, Domain::Unit);
    CHECK_THROWS_AS(metrics_ref::ssim(tiny, tiny), SizeError);
}

TEST_CASE("sam: angles, invariances, exclusions") {
    std::mt19937_64 rng(103);
    const ImageTensor a = oracles::random_image(rng, 5, 5, 4, Domain::Unit, 0.05, 1.0);
    CHECK(metrics_ref::sam_degrees(a, a) == Approx(0.0).margin(1e-9));

    ImageTensor e1(1, 1, 2, Domain::Unit), e2(1, 1, 2, Domain::Unit);
    e1.data = {1.0, 0.0};
    e2.data = {0.0, 1.0};
    CHECK(metrics_ref::sam_degrees(e1, e2) == Approx(90.0).margin(1e-12));

    ImageTensor ones(1, 1, 2, Domain::Unit), twos(1, 1, 2, Domain::Unit);
    ones.data = {1.0, 1.0};
    twos.data = {2.0, 2.0};
    CHECK(metrics_ref::sam_degrees(ones, twos) == Approx(0.0).margin(1e-12));

    const ImageTensor b = oracles::random_image(rng, 5, 5, 4, Domain::Unit, 0.05, 1.0);
    CHECK(metrics_ref::sam_degrees(a, b) ==
          Approx(metrics_ref::sam_degrees(b, a)).margin(1e-12));
    CHECK(metrics_ref::sam_degrees(a, b) ==
          Approx(oracles::sam_degrees(a, b)).margin(1e-9));

    // SAM tolerates positive per-pixel rescaling of one side
    ImageTensor scaled = b;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            const double s = 0.5 + 0.1 * (y + x);
            for (int ch = 0; ch < 4; ++ch) scaled.at(y, x, ch) *= s;
        }
    CHECK(metrics_ref::sam_degrees(a, scaled) ==
          Approx(metrics_ref::sam_degrees(a, b)).margin(1e-9));

    // zero-norm pixels are excluded and counted
    ImageTensor za = a, zb = b;
    for (int ch = 0; ch < 4; ++ch) {
        za.at(0, 0, ch) = 0.0;
        zb.at(1, 1, ch) = 0.0;
    }
    std::size_t excluded = 0;
    metrics_ref::sam_degrees(za, zb, &excluded);
    CHECK(excluded == 2);

    ImageTensor allzero(2, 2, 3, Domain::Unit);
    CHECK_THROWS_AS(metrics_ref::sam_degrees(allzero, allzero), DegenerateInput);
    ImageTensor single(2, 2, 1, Domain::Unit);
    CHECK_THROWS_AS(metrics_ref::sam_degrees(single, single), DomainError);
}

namespace {

struct De2000Case {
    double l1, a1, b1, l2, a2, b2, expect;
};

// published CIEDE2000 verification pairs
constexpr std::array<De2000Case, 34> kDe2000Cases{{
    {50.0000, 2.6772, -79.7751, 50.0000, 0.0000, -82.7485, 2.0425},
    {50.0000, 3.1571, -77.2803, 50.0000, 0.0000, -82.7485, 2.8615},
    {50.0000, 2.8361, -74.0200, 50.0000, 0.0000, -82.7485, 3.4412},
    {50.0000, -1.3802, -84.2814, 50.0000, 0.0000, -82.7485, 1.0000},
    {50.0000, -1.1848, -84.8006, 50.0000, 0.0000, -82.7485, 1.0000},
    {50.0000, -0.9009, -85.5211, 50.0000, 0.0000, -82.7485, 1.0000},
    {50.0000, 0.0000, 0.0000, 50.0000, -1.0000, 2.0000, 2.3669},
    {50.0000, -1.0000, 2.0000, 50.0000, 0.0000, 0.0000, 2.3669},
    {50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0009, 7.1792},
    {50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0010, 7.1792},
    {50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0011, 7.2195},
    {50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0012, 7.2195},
    {50.0000, -0.0010, 2.4900, 50.0000, 0.0009, -2.4900, 4.8045},
    {50.0000, -0.0010, 2.4900, 50.0000, 0.0010, -2.4900, 4.8045},
    {50.0000, -0.0010, 2.4900, 50.0000, 0.0011, -2.4900, 4.7461},
    {50.0000, 2.5000, 0.0000, 50.0000, 0.0000, -2.5000, 4.3065},
    {50.0000, 2.5000, 0.0000, 73.0000, 25.0000, -18.0000, 27.1492},
    {50.0000, 2.5000, 0.0000, 61.0000, -5.0000, 29.0000, 22.8977},
    {50.0000, 2.5000, 0.0000, 56.0000, -27.0000, -3.0000, 31.9030},
    {50.0000, 2.5000, 0.0000, 58.0000, 24.0000, 15.0000, 19.4535},
    {50.0000, 2.5000, 0.0000, 50.0000, 3.1736, 0.5854, 1.0000},
    {50.0000, 2.5000, 0.0000, 50.0000, 3.2972, 0.0000, 1.0000},
    {50.0000, 2.5000, 0.0000, 50.0000, 1.8634, 0.5757, 1.0000},
    {50.0000, 2.5000, 0.0000, 50.0000, 3.2592, 0.3350, 1.0000},
    {60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644},
    {63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630},
    {61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731},
    {35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645},
    {22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373},
    {36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146},
    {90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441},
    {90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381},
    {6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377},
    {2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082},
}};

}  // namespace

TEST_CASE("delta_e2000 reproduces the published verification pairs") {
    for (const auto& c : kDe2000Cases) {
        CHECK(metrics_ref::delta_e2000_pair(c.l1, c.a1, c.b1, c.l2, c.a2, c.b2) ==
              Approx(c.expect).margin(1e-4));
        // symmetry of the standard formula on the published pairs
        CHECK(metrics_ref::delta_e2000_pair(c.l2, c.a2, c.b2, c.l1, c.a1, c.b1) ==
              Approx(c.expect).margin(1e-4));
    }
}

TEST_CASE("delta_e2000 images match the independent transcription") {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> ldist(0.0, 100.0);
    std::uniform_real_distribution<double> abdist(-60.0, 60.0);
    ImageTensor a(2, 5, 3, Domain::Lab), b(2, 5, 3, Domain::Lab);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 5; ++x) {
            a.at(y, x, 0) = ldist(rng);
            a.at(y, x, 1) = abdist(rng);
            a.at(y, x, 2) = abdist(rng);
            b.at(y, x, 0) = ldist(rng);
            b.at(y, x, 1) = abdist(rng);
            b.at(y, x, 2) = abdist(rng);
        }
    double expect = 0.0;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 5; ++x)
            expect += oracles::ciede2000(a.at(y, x, 0), a.at(y, x, 1), a.at(y, x, 2),
                                         b.at(y, x, 0), b.at(y, x, 1), b.at(y, x, 2));
    expect /= 10.0;
    CHECK(metrics_ref::delta_e2000(a, b) == Approx(expect).margin(1e-9));
    CHECK(metrics_ref::delta_e2000(a, a) == 0.0);

    ImageTensor not_lab = a;
    not_lab.domain = Domain::Unit;
    CHECK_THROWS_AS(metrics_ref::delta_e2000(a, not_lab), DomainError);
}

namespace {

ImageTensor checkerboard(int n, int cell) {
    ImageTensor img(n, n, 1, Domain::Unit);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            img.at(y, x, 0) = ((y / cell + x / cell) % 2 == 0) ? 0.85 : 0.15;
    return img;
}

}  // namespace

TEST_CASE("fsim: identity, symmetry, ordering") {
    std::mt19937_64 rng(109);
    const ImageTensor a = oracles::random_image(rng, 32, 32, 1);
    CHECK(metrics_ref::fsim(a, a) == Approx(1.0).margin(1e-12));

    const ImageTensor b = oracles::random_image(rng, 32, 32, 1);
    CHECK(metrics_ref::fsim(a, b) == Approx(metrics_ref::fsim(b, a)).margin(1e-12));
    CHECK(metrics_ref::fsim(a, b) < 1.0);
    CHECK(metrics_ref::fsim(a, b) > 0.0);

    // Noiseless synthetic patterns need the Rayleigh compensation off, or
    // the smallest-scale response is read as pure noise.
    metrics_ref::FsimParams no_noise;
    no_noise.noise_k = -1.0;
    const ImageTensor board = checkerboard(32, 4);

    // contrast inversion is invisible to magnitude-based PC and GM
    ImageTensor inverted = board;
    for (double& v : inverted.data) v = 1.0 - v;
    CHECK(metrics_ref::fsim(board, inverted, no_noise) ==
          Approx(metrics_ref::fsim(board, board, no_noise)).margin(1e-12));

    // shifting by half a cell moves the edges: strictly below the identical pair
    ImageTensor shifted(32, 32, 1, Domain::Unit);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) shifted.at(y, x, 0) = board.at(y, (x + 2) % 32, 0);
    CHECK(metrics_ref::fsim(board, shifted, no_noise) <
          metrics_ref::fsim(board, board, no_noise));
    CHECK(metrics_ref::fsim(board, board, no_noise) == Approx(1.0).margin(1e-12));

    ImageTensor flat(32, 32, 1, Domain::Unit);
    std::fill(flat.data.begin(), flat.data.end(), 0.5);
    CHECK_THROWS_AS(metrics_ref::fsim(flat, flat), DegenerateInput);
}

TEST_CASE("dists from features") {
    loss::FeatureStack fa;
    loss::FeatureLayer layer;
    layer.features = ImageTensor(2, 2, 2, Domain::Latent);
    // distinct channel means keep the texture correlation non-degenerate
    layer.features.data = {1.0, 2.0, 2.0, 1.0, 3.0, 4.0, 5.0, 0.0};
    layer.weights = {1.0, 1.0};
    fa.layers.push_back(layer);

    const std::vector<double> alpha{1.0}, beta{0.0};
    CHECK(metrics_ref::dists_from_features(fa, fa, alpha, beta) ==
          Approx(0.0).margin(1e-12));

    // antipodal zero-mean features: structure correlation is exactly -1
    loss::FeatureStack fb = fa;
    for (double& v : fb.layers[0].features.data) v = -v;
    CHECK(metrics_ref::dists_from_features(fa, fb, alpha, beta) ==
          Approx(2.0).margin(1e-12));

    // positive affine rescaling of one side leaves correlations unchanged
    loss::FeatureStack fc = fa;
    for (double& v : fc.layers[0].features.data) v = 3.0 * v + 0.7;
    const std::vector<double> ab{0.6}, bb{0.4};
    CHECK(metrics_ref::dists_from_features(fa, fc, ab, bb) ==
          Approx(0.0).margin(1e-12));

    // constant feature maps hit the degenerate definition and are flagged
    loss::FeatureStack fconst = fa;
    std::fill(fconst.layers[0].features.data.begin(),
              fconst.layers[0].features.data.end(), 2.0);
    int degen = 0;
    const double v =
        metrics_ref::dists_from_features(fconst, fconst, alpha, beta, &degen);
    CHECK(v == Approx(0.0).margin(1e-12));  // equal constants correlate at 1
    CHECK(degen > 0);

    CHECK_THROWS_AS(
        metrics_ref::dists_from_features(fa, fb, std::vector<double>{1.0, 2.0}, beta),
        ShapeError);
}
