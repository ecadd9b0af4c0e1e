#pragma once

#include <algorithm>
#include <vector>

namespace knotflow::detail {

// Compensated accumulator. Cheap enough to use unconditionally; required for
// reproducible large-N sums.
struct KahanSum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double get() const { return s; }
};

// Deterministic parallel reduction over rows [0, n_rows). Rows are grouped
// into a fixed number of chunks independent of the thread count; each chunk
// accumulates sequentially into its own scratch and the scratches are folded
// in chunk order. Results are therefore bitwise identical no matter how many
// threads execute the chunks.
template <class Scratch, class Body, class Fold>
void chunked_rows(int n_rows, const Scratch& proto, Body&& body, Fold&& fold) {
    const int nc = std::max(1, std::min(n_rows, 64));
    std::vector<Scratch> scratch(static_cast<size_t>(nc), proto);
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < nc; ++c) {
        const int lo = static_cast<int>(static_cast<long long>(n_rows) * c / nc);
        const int hi = static_cast<int>(static_cast<long long>(n_rows) * (c + 1) / nc);
        for (int r = lo; r < hi; ++r) body(r, scratch[static_cast<size_t>(c)]);
    }
    for (int c = 0; c < nc; ++c) fold(scratch[static_cast<size_t>(c)]);
}

} // namespace knotflow::detail
