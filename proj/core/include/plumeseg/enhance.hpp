#pragma once

#include <vector>

#include "plumeseg/grid.hpp"

namespace plumeseg {

/// Binary neighbor offsets (dr, dc); (0, 0) is never a neighbor.
struct ContiguityKernel {
    struct Offset {
        int dr = 0;
        int dc = 0;
    };
    std::vector<Offset> offsets;

    static ContiguityKernel queen();
    static ContiguityKernel rook();
};

struct MoranStats {
    double mean = 0.0;
    double variance = 0.0;  // population
    std::size_t n = 0;
};

/// Mean and population variance over the valid cells.
MoranStats moran_stats(const GridImage& image);

/// Local Moran's I per valid cell:
///   I_i = (x_i - mean) / var * sum_j w_ij (x_j - mean)
/// with mean and var over the valid cells of this image. Neighbors that are
/// outside the raster or invalid contribute nothing.
GridImage moran_enhance(const GridImage& image, const ContiguityKernel& kernel = ContiguityKernel::queen());

/// Median of the valid cells (mean of the two middle values for even counts).
double valid_median(const GridImage& image);

/// Zeroes valid cells strictly below the median.
GridImage zero_below_median(const GridImage& image);

/// moran_enhance(zero_below_median(image)).
GridImage moran_on_high(const GridImage& image, const ContiguityKernel& kernel = ContiguityKernel::queen());

}  // namespace plumeseg
