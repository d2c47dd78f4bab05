#pragma once

// Uplink training model: K-antenna base station, M single-antenna users and an
// N-element reflecting surface cycled through P phase configurations, each
// held for T pilot slots.

#include "rispar/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rispar {

using Rng = std::mt19937_64;

/// Linear noise variance for unit-power channels and pilots.
double noise_variance_from_snr_db(double snr_db);

struct SystemConfig {
    int K = 16;  ///< base-station antennas
    int M = 16;  ///< users
    int N = 16;  ///< surface elements
    int T = 16;  ///< pilot slots per configuration
    int P = 16;  ///< training phase configurations
    double snr_db = 10.0;
    bool noiseless = false;
    std::uint64_t seed = 1;
    int trials = 200;

    double noise_var() const { return noiseless ? 0.0 : noise_variance_from_snr_db(snr_db); }
};

struct ChannelPair {
    ComplexMatrix hr;  ///< K x N, surface to base station
    ComplexMatrix hs;  ///< N x M, users to surface
};

struct TrainingSet {
    ComplexMatrix phi;  ///< P x N, unit modulus
    ComplexMatrix x;    ///< M x T, X X^H = I
};

struct RxTensor {
    ThreeWayTensor ztilde;           ///< K x M x P after pilot removal
    std::vector<ComplexMatrix> raw;  ///< Y_p (K x T), only when requested
};

/// Draws i.i.d. CN(0, 1) entries.
ComplexMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng);

ChannelPair gen_channels(const SystemConfig& cfg, Rng& rng);

/// First P rows of the N-point DFT (unit modulus) and the first M rows of the
/// T-point unitary DFT. Throws FeasibilityError when P > N or T < M.
TrainingSet gen_training(const SystemConfig& cfg);

/// First `rows` rows of the n-point DFT matrix, entries exp(-2 pi i r c / n).
/// Rows beyond n wrap around.
ComplexMatrix dft_rows(int rows, int n);

/// Y_p = Hr diag(Phi[p,:]) Hs X + W_p, Ztilde_p = Y_p X^H.
RxTensor synthesize_rx(const ChannelPair& ch, const TrainingSet& tr, const SystemConfig& cfg,
                       Rng& rng, bool keep_raw = false);

/// Contiguous block of surface elements [begin, begin + size).
struct IndexGroup {
    int begin = 0;
    int size = 0;
    friend bool operator==(const IndexGroup&, const IndexGroup&) = default;
};

/// Greedy contiguous split of N elements into groups no larger than min(M, K).
std::vector<IndexGroup> partition_plan(int n, int m, int k);

struct FeasibilityReport {
    bool feasible = true;
    std::vector<std::string> violations;
    std::vector<IndexGroup> suggested_partition;  ///< set when N > min(M, K)
};

/// Checks min(M, K) >= N, P <= N, T >= M and the generic k-rank condition
/// min(P,N) + min(M,N) + min(K,N) >= 2N + 2 (for N >= 2).
FeasibilityReport feasibility_check(const SystemConfig& cfg);

}  // namespace rispar
