#pragma once

#include "infobif/prob_core.hpp"

namespace fixtures {

/// Two identical pairs of Y columns, each pair tied to one X symbol: a single
/// symmetric split into {0,1} | {2,3}.
inline infobif::JointDistribution two_cluster() {
  infobif::Matrix p(2, 4);
  p << 0.2, 0.2, 0.05, 0.05,
       0.05, 0.05, 0.2, 0.2;
  return infobif::JointDistribution(p);
}

/// A small K = 3 problem with a single split.
inline infobif::JointDistribution tiny3() {
  infobif::Matrix p(3, 3);
  p << 0.22, 0.06, 0.04,
       0.05, 0.20, 0.06,
       0.04, 0.07, 0.26;
  return infobif::JointDistribution(p);
}

/// Strongly diagonal K = 3 problem. beta stays near 1.3 over most of its
/// curve, so the bias of a banded grid search (about beta times the band)
/// stays well below the comparison tolerance.
inline infobif::JointDistribution sharp3() {
  infobif::Matrix p(3, 3);
  p << 0.30, 0.02, 0.01,
       0.02, 0.30, 0.02,
       0.01, 0.02, 0.30;
  return infobif::JointDistribution(p / p.sum());
}

}  // namespace fixtures
