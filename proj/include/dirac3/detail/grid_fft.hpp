#pragma once

// Periodic G^3 grids on [0, 2pi)^3 and separable 3-D FFTs over them.
// Sample n = (n1, n2, n3) sits at x = 2pi n / G, stored at (n1*G + n2)*G + n3.

#include <unsupported/Eigen/FFT>

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace dirac3::detail {

using cplx = std::complex<double>;

inline int wrap_index(int k, int g) {
  const int r = k % g;
  return r < 0 ? r + g : r;
}

/// Signed frequency stored in bin b of a length-g transform.
inline int bin_frequency(int b, int g) { return b <= g / 2 ? b : b - g; }

struct ComplexGrid {
  int size = 0;
  std::vector<cplx> values;

  ComplexGrid() = default;
  explicit ComplexGrid(int g)
      : size(g), values(static_cast<std::size_t>(g) * g * g, cplx{0.0, 0.0}) {}

  std::size_t flat(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * size + b) * size + c;
  }
  cplx& at(int a, int b, int c) { return values[flat(a, b, c)]; }
  const cplx& at(int a, int b, int c) const { return values[flat(a, b, c)]; }

  /// Frequency-domain access with wrap-around of signed wave numbers.
  cplx& mode(const std::array<int, 3>& k) {
    return at(wrap_index(k[0], size), wrap_index(k[1], size), wrap_index(k[2], size));
  }
  const cplx& mode(const std::array<int, 3>& k) const {
    return at(wrap_index(k[0], size), wrap_index(k[1], size), wrap_index(k[2], size));
  }

  static double coordinate(int n, int g) {
    return 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(g);
  }
};

enum class FftDirection {
  kForward,  // X[k] = sum_n x[n] e^{-2 pi i k n / G}
  kInverse   // x[n] = sum_k X[k] e^{+2 pi i k n / G}, unscaled
};

inline void fft3_inplace(ComplexGrid& grid, FftDirection dir) {
  const int g = grid.size;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<cplx> line(static_cast<std::size_t>(g));
  std::vector<cplx> out(static_cast<std::size_t>(g));

  auto run = [&] {
    if (dir == FftDirection::kForward) {
      fft.fwd(out.data(), line.data(), g);
    } else {
      fft.inv(out.data(), line.data(), g);
    }
  };

  for (int axis = 0; axis < 3; ++axis) {
    for (int p = 0; p < g; ++p) {
      for (int q = 0; q < g; ++q) {
        for (int n = 0; n < g; ++n) {
          const std::array<int, 3> idx = axis == 0   ? std::array<int, 3>{n, p, q}
                                         : axis == 1 ? std::array<int, 3>{p, n, q}
                                                     : std::array<int, 3>{p, q, n};
          line[static_cast<std::size_t>(n)] = grid.at(idx[0], idx[1], idx[2]);
        }
        run();
        for (int n = 0; n < g; ++n) {
          const std::array<int, 3> idx = axis == 0   ? std::array<int, 3>{n, p, q}
                                         : axis == 1 ? std::array<int, 3>{p, n, q}
                                                     : std::array<int, 3>{p, q, n};
          grid.at(idx[0], idx[1], idx[2]) = out[static_cast<std::size_t>(n)];
        }
      }
    }
  }
}

/// Smallest power of two >= n.
inline int next_pow2(int n) {
  int g = 1;
  while (g < n) g <<= 1;
  return g;
}

}  // namespace dirac3::detail
