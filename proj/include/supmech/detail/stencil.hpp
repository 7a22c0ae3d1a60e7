#pragma once

#include <cstddef>

namespace supmech::detail {

// Second-order first derivative along one line: central differences in the
// interior, one-sided three-point stencils at the two ends. `stride` is the
// element distance between neighbouring lattice sites of the line, so the
// same kernel serves scalar grids and matrix-valued fields. Requires n >= 3.
template <class T>
void line_derivative(const T* in, T* out, int n, std::ptrdiff_t stride, double inv_two_h) {
    out[0] = inv_two_h * (-3.0 * in[0] + 4.0 * in[stride] - in[2 * stride]);
    for (int i = 1; i + 1 < n; ++i) {
        out[static_cast<std::ptrdiff_t>(i) * stride] =
            inv_two_h * (in[(i + 1) * stride] - in[(i - 1) * stride]);
    }
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(n - 1) * stride;
    out[last] = inv_two_h * (3.0 * in[last] - 4.0 * in[last - stride] + in[last - 2 * stride]);
}

// Exact matrix transpose of line_derivative, accumulated into out (out must be
// pre-zeroed by the caller). Used to realize state evolution as the numerical
// adjoint of observable evolution under the trace-integral pairing.
template <class T>
void line_derivative_transpose_acc(const T* in, T* out, int n, std::ptrdiff_t stride,
                                   double inv_two_h) {
    // Row 0: (-3, 4, -1) at columns (0, 1, 2).
    out[0] += inv_two_h * (-3.0) * in[0];
    out[stride] += inv_two_h * 4.0 * in[0];
    out[2 * stride] += inv_two_h * (-1.0) * in[0];
    // Interior rows i: (-1, +1) at columns (i-1, i+1).
    for (int i = 1; i + 1 < n; ++i) {
        const T v = in[static_cast<std::ptrdiff_t>(i) * stride];
        out[(i - 1) * stride] += inv_two_h * (-1.0) * v;
        out[(i + 1) * stride] += inv_two_h * v;
    }
    // Row n-1: (1, -4, 3) at columns (n-3, n-2, n-1).
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(n - 1) * stride;
    const T v = in[last];
    out[last - 2 * stride] += inv_two_h * v;
    out[last - stride] += inv_two_h * (-4.0) * v;
    out[last] += inv_two_h * 3.0 * v;
}

}  // namespace supmech::detail
