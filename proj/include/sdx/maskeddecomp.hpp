#pragma once

#include "sdx/operators.hpp"
#include "sdx/types.hpp"

namespace sdx {

enum class BinarizeMode { AtEnd, EachIteration };
enum class MdInit { Zeros, Half, Gaussian, Uniform, LsfError };

struct MdConfig {
  BasisSet basis1;  // component-1 subspace (e.g. low-frequency DCT)
  BasisSet basis2;  // component-2 subspace (e.g. Hadamard)
  int k1 = 40;      // sparsity cap on alpha1
  int k2 = 8;       // sparsity cap on alpha2
  double lambda1 = 10.0;  // weight on ||w||_1
  double lambda2 = 0.2;   // weight on ||Dw||_1
  // Split penalties. Values <= 0 pick 2x the matching weight (bounded below
  // by 1) so the shrinkage thresholds stay inside the mask's [0,1] range.
  double rho1 = 0.0;
  double rho2 = 0.0;
  int max_iters = 10;
  double rel_tol = 1e-6;
  double binarize_threshold = 0.5;
  BinarizeMode binarize_mode = BinarizeMode::AtEnd;
  MdInit init = MdInit::Zeros;
  std::uint64_t seed = 0;
};

struct MaskedResult {
  Vec alpha1, alpha2;
  Vec w_continuous;                 // in [0,1]^n
  std::vector<std::uint8_t> w_binary;
  Vec component1, component2;       // P1*alpha1 and P2*alpha2
  Vec reconstruction;               // (1 - w_b) o c1 + w_b o c2
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
  bool degenerate_system = false;   // a mask-weighted system lost full rank
};

/// Initial mask for a given scheme; deterministic per cfg.seed.
Vec md_initialize(const Vec& x, const MdConfig& cfg, MdInit scheme);

/// Relaxed objective 1/2||x - (1-w) o P1 a1 - w o P2 a2||^2
///                   + l1 ||w||_1 + l2 ||Dw||_1.
double md_objective(const Vec& alpha1, const Vec& alpha2, const Vec& w, const Vec& x,
                    const MdConfig& cfg, const DifferenceOperator& diffop);
double md_objective(const MaskedResult& result, const Vec& x, const MdConfig& cfg,
                    const DifferenceOperator& diffop);

/// Alternating augmented-Lagrangian solve of the masked two-subspace model.
/// x may be an NxN block (block_side > 0) or a 1-D signal.
MaskedResult md_solve(const BlockSignal& x, const MdConfig& cfg);

}  // namespace sdx
