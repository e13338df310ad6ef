#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "plumeseg/enhance.hpp"

using namespace plumeseg;

namespace {

GridImage from_values(int rows, int cols, const std::vector<double>& v) {
    GridImage img(GridSpec{0, 0, 1.0, rows, cols});
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            img.set(r, c, v[static_cast<std::size_t>(r * cols + c)]);
        }
    }
    return img;
}

void check_same(const GridImage& a, const GridImage& b, double rel) {
    REQUIRE(a.valid == b.valid);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.valid[i]) {
            if (rel == 0.0) {
                CHECK(a.values[i] == b.values[i]);
            } else {
                CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(rel).scale(1.0));
            }
        }
    }
}

}  // namespace

TEST_SUITE("enhance") {
    TEST_CASE("hand-computed 3 x 3 example") {
        const auto img = from_values(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0});
        const auto st = moran_stats(img);
        CHECK(st.mean == 1.0);
        CHECK(st.variance == 8.0);
        const auto m = moran_enhance(img);
        CHECK(m.at(1, 1) == -8.0);
        CHECK(m.at(0, 0) == -0.75);
        CHECK(m.at(2, 2) == -0.75);
        // edge pixel: neighbors are four zeros and the center
        CHECK(m.at(0, 1) == doctest::Approx(-1.0 / 8.0 * (-4.0 + 8.0)));
    }

    TEST_CASE("constant image is rejected") {
        const auto img = from_values(2, 2, {3, 3, 3, 3});
        CHECK_THROWS_WITH_AS(moran_enhance(img), "constant image", ValidationError);
    }

    TEST_CASE("matches the dense pairwise oracle") {
        std::mt19937_64 rng(31);
        for (int i = 0; i < 100; ++i) {
            const auto img = testing::random_image(rng, 18, i % 2 ? 0.25 : 0.0);
            check_same(moran_enhance(img), testing::moran_dense(img), 1e-9);
        }
    }

    TEST_CASE("invalid cells stay invalid and are ignored") {
        auto img = from_values(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0});
        img.invalidate(0, 0);
        const auto m = moran_enhance(img);
        CHECK_FALSE(m.is_valid(0, 0));
        check_same(m, testing::moran_dense(img), 1e-12);
    }

    TEST_CASE("median and zeroing") {
        const auto img = from_values(2, 2, {1, 2, 3, 4});
        CHECK(valid_median(img) == 2.5);
        const auto z = zero_below_median(img);
        CHECK(z.at(0, 0) == 0.0);
        CHECK(z.at(0, 1) == 0.0);
        CHECK(z.at(1, 0) == 3.0);
        CHECK(z.at(1, 1) == 4.0);
    }

    TEST_CASE("majority at the maximum: only sub-median pixels are zeroed") {
        const auto img = from_values(2, 3, {7, 7, 7, 7, 1, 2});
        const auto z = zero_below_median(img);
        CHECK(z.values == std::vector<double>{7, 7, 7, 7, 0, 0});
        check_same(moran_on_high(img), moran_enhance(z), 0.0);
    }

    TEST_CASE("moran_on_high equals the composition oracle") {
        std::mt19937_64 rng(37);
        for (int i = 0; i < 100; ++i) {
            const auto img = testing::random_image(rng, 18, i % 3 == 0 ? 0.2 : 0.0);
            std::vector<double> vals;
            for (std::size_t k = 0; k < img.values.size(); ++k) {
                if (img.valid[k]) {
                    vals.push_back(img.values[k]);
                }
            }
            const double med = testing::median_oracle(vals);
            CHECK(valid_median(img) == med);
            GridImage zeroed = img;
            for (std::size_t k = 0; k < zeroed.values.size(); ++k) {
                if (zeroed.valid[k] && zeroed.values[k] < med) {
                    zeroed.values[k] = 0.0;
                }
            }
            check_same(moran_on_high(img), testing::moran_dense(zeroed), 1e-9);
        }
    }

    TEST_CASE("rook kernel uses only edge neighbors") {
        const auto img = from_values(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0});
        const auto m = moran_enhance(img, ContiguityKernel::rook());
        CHECK(m.at(1, 1) == -4.0);
        CHECK(m.at(0, 0) == doctest::Approx(-1.0 / 8.0 * -2.0));
    }
}
