// Splits the sixfold lambda = 1 eigenvalue of the trivial spin structure and
// follows the three resulting Kramers pairs as t grows.

#include "dirac3/dirac3.hpp"

#include <cstdio>

using namespace dirac3;

int main() {
  const ModeSetPtr modes = build_mode_set(3, SpinStructure());
  const SpectrumResult flat = flat_spectrum(modes);
  const EigenCluster cluster = cluster_near(flat, 1.0);
  std::printf("flat cluster: lambda = %.3f, complex dim %zu, quaternionic dim %zu\n", cluster.lambda(),
              cluster.dim_c(), cluster.dim_h());

  const SplitCertificate cert = split_search(cluster, 2);
  std::printf("first splitting factor: %s (after %zu candidates)\n", cert.factor_label.c_str(), cert.tried.size());
  std::printf("quaternionic rates:");
  for (double r : cert.quaternionic_rates) std::printf(" %+.6f", r);
  std::printf("\n");

  // eigenvalue window of the cluster, compared with the linear prediction
  const std::size_t offset = spectrum_offset(*modes, 1.0, cluster.dim_c());
  std::printf("\n%8s  %-40s  %s\n", "t", "lambda(t), one per pair", "max |lambda - (1 + t rate)|");
  for (double t : {0.0, 0.01, 0.02, 0.05, 0.1, 0.2}) {
    const SpectrumResult s = deformed_spectrum(cert.factor, t, modes, SolveOptions::values_only());
    double miss = 0.0;
    std::printf("%8.3f  ", t);
    for (std::size_t i = 0; i < cluster.dim_c(); ++i) {
      const double lam = s.eigenvalues[offset + i];
      miss = std::max(miss, std::abs(lam - (1.0 + t * cert.rates[i])));
      if (i % 2 == 0) std::printf("%.8f  ", lam);
    }
    std::printf("%.2e\n", miss);
  }
}
