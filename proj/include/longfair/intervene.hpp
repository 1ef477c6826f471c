#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "longfair/scm.hpp"

namespace longfair {

// Which path set carries the hard intervention on S.
//   LongTerm:  paths from S through the relevant-attribute chain into the
//              final decision; the hard value enters at X^1.
//   ShortTerm: the direct edge and redlining paths at one time step; the
//              chain itself is rolled out under the reference value.
enum class EffectKind { LongTerm, ShortTerm };

struct InterventionSpec {
  EffectKind mode = EffectKind::LongTerm;
  int hard_value = 1;       // s injected along the selected paths
  int reference_value = 0;  // s everywhere off the selected paths
  DecisionModel soft_model;  // replaces every decision equation
  int target_time = 1;      // t (short-term) or t* (long-term)
};

std::vector<std::string> validate_spec(const TimeLaggedScm& scm,
                                       const InterventionSpec& spec);

// Ancestral Monte Carlo sampling of X^{target_time} under the simultaneous
// hard intervention on S and soft intervention on the decisions. Returns n
// rows of uniformly weighted draws. Deterministic given the seed; draws use
// per-index substreams.
Mat sample_post_intervention(const TimeLaggedScm& scm,
                             const InterventionSpec& spec, int n,
                             std::uint64_t seed);

// Exact distribution over a tabulated scalar state.
struct DiscreteDist {
  std::vector<double> support;
  std::vector<double> prob;
};

inline constexpr double kDefaultEnumerationCap = 1e7;

// Sums the post-intervention inference formula over every trajectory
// (folded as a forward pass over the state table). Refuses explicitly when
// the trajectory count exceeds the cap; never truncates silently.
DiscreteDist exact_post_intervention(const TimeLaggedScm& scm,
                                     const InterventionSpec& spec,
                                     double enumeration_cap = kDefaultEnumerationCap);

// Difference of positive-decision rates attributable to the protected
// attribute along the selected paths.
struct EffectQuery {
  EffectKind kind = EffectKind::LongTerm;
  int target_time = 1;
  // Role assignment; swapping the roles negates the effect. The reference
  // stays fixed off the selected paths (the formulas evaluate at s-).
  int s_plus = 1;
  int s_minus = 0;
  int reference = 0;
};

double effect(const TimeLaggedScm& scm, const DecisionModel& model,
              const EffectQuery& query, int n, std::uint64_t seed);

// Same functional computed from the exact enumerator; the oracle side of the
// Monte Carlo / enumeration pair.
double exact_effect(const TimeLaggedScm& scm, const DecisionModel& model,
                    const EffectQuery& query,
                    double enumeration_cap = kDefaultEnumerationCap);

}  // namespace longfair
