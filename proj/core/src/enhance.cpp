#include "plumeseg/enhance.hpp"

#include <algorithm>

#include "plumeseg/common.hpp"

namespace plumeseg {

ContiguityKernel ContiguityKernel::queen() {
    ContiguityKernel k;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr != 0 || dc != 0) {
                k.offsets.push_back({dr, dc});
            }
        }
    }
    return k;
}

ContiguityKernel ContiguityKernel::rook() {
    return {{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
}

MoranStats moran_stats(const GridImage& image) {
    MoranStats st;
    double sum = 0.0;
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        if (image.valid[i]) {
            sum += image.values[i];
            ++st.n;
        }
    }
    if (st.n == 0) {
        return st;
    }
    st.mean = sum / static_cast<double>(st.n);
    double ss = 0.0;
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        if (image.valid[i]) {
            const double d = image.values[i] - st.mean;
            ss += d * d;
        }
    }
    st.variance = ss / static_cast<double>(st.n);
    return st;
}

GridImage moran_enhance(const GridImage& image, const ContiguityKernel& kernel) {
    const auto st = moran_stats(image);
    if (st.n < 2) {
        throw ValidationError("insufficient pixels");
    }
    bool constant = true;
    double first = 0.0;
    bool seen = false;
    for (std::size_t i = 0; i < image.values.size() && constant; ++i) {
        if (!image.valid[i]) {
            continue;
        }
        if (!seen) {
            first = image.values[i];
            seen = true;
        } else if (image.values[i] != first) {
            constant = false;
        }
    }
    if (constant || st.variance == 0.0) {
        throw ValidationError("constant image");
    }

    GridImage out(image.spec);
    const int nr = image.spec.n_rows;
    const int nc = image.spec.n_cols;
    for (int r = 0; r < nr; ++r) {
        for (int c = 0; c < nc; ++c) {
            if (!image.is_valid(r, c)) {
                continue;
            }
            double lag = 0.0;
            for (const auto& o : kernel.offsets) {
                if (o.dr == 0 && o.dc == 0) {
                    continue;
                }
                const int rr = r + o.dr;
                const int cc = c + o.dc;
                if (image.in_bounds(rr, cc) && image.is_valid(rr, cc)) {
                    lag += image.at(rr, cc) - st.mean;
                }
            }
            out.set(r, c, (image.at(r, c) - st.mean) / st.variance * lag);
        }
    }
    return out;
}

double valid_median(const GridImage& image) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        if (image.valid[i]) {
            vals.push_back(image.values[i]);
        }
    }
    if (vals.empty()) {
        throw ValidationError("insufficient pixels");
    }
    std::sort(vals.begin(), vals.end());
    const auto m = vals.size() / 2;
    return vals.size() % 2 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
}

GridImage zero_below_median(const GridImage& image) {
    const double med = valid_median(image);
    GridImage out = image;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (out.valid[i] && out.values[i] < med) {
            out.values[i] = 0.0;
        }
    }
    return out;
}

GridImage moran_on_high(const GridImage& image, const ContiguityKernel& kernel) {
    return moran_enhance(zero_below_median(image), kernel);
}

}  // namespace plumeseg
