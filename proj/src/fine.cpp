#include "fine.hpp"

#include <vector>

#include "error.hpp"
#include "simplex.hpp"

namespace bell {

namespace {

// Behavior slot (index into kOutcomeValues) for bit 0 (+1) and bit 1 (-1).
constexpr std::array<int, 2> kSlot = {0, 2};

void require_binary(const BehaviorTable& behavior) {
  if (behavior.ternary) fail(ErrorCode::kArgument, "ternary behavior: reduce it with zero_to_coin or post-selection first");
  const auto report = validate_behavior(behavior);
  if (!report.ok()) fail(ErrorCode::kInvalidModel, report.issues.front().path + ": " + report.issues.front().message);
}

}  // namespace

bool JointDistribution16::valid() const {
  Rational total;
  for (const auto& m : mass) {
    if (m.sign() < 0) return false;
    total += m;
  }
  return total == Rational(1);
}

PairPmf context_pmf(const BehaviorTable& behavior, Context context) {
  PairPmf out;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) out[x][y] = behavior[context][kSlot[x]][kSlot[y]];
  }
  return out;
}

NoSignallingReport check_no_signalling(const BehaviorTable& behavior, const Rational& tolerance) {
  require_binary(behavior);
  NoSignallingReport report;
  int slot = 0;
  for (Side side : {Side::kAlice, Side::kBob}) {
    for (int s = 0; s < 2; ++s) {
      MarginalComparison& cmp = report.comparisons[slot++];
      cmp.side = side;
      cmp.setting = s;
      for (int other = 0; other < 2; ++other) {
        const Context ctx = side == Side::kAlice ? Context{s, other} : Context{other, s};
        const PairPmf pmf = context_pmf(behavior, ctx);
        for (int v = 0; v < 2; ++v) {
          cmp.marginal[other][v] = side == Side::kAlice ? pmf[v][0] + pmf[v][1] : pmf[0][v] + pmf[1][v];
        }
      }
      cmp.difference = (cmp.marginal[0][0] - cmp.marginal[1][0]).abs();
      report.max_deviation = max(report.max_deviation, cmp.difference);
    }
  }
  report.holds = report.max_deviation <= tolerance;
  return report;
}

PairPmf marginalize_context(const JointDistribution16& joint, Context context) {
  PairPmf out;
  for (int idx = 0; idx < 16; ++idx) {
    const int x = JointDistribution16::outcome(idx, context.alice);
    const int y = JointDistribution16::outcome(idx, 2 + context.bob);
    out[x < 0][y < 0] += joint.mass[idx];
  }
  return out;
}

FineResult find_joint(const BehaviorTable& behavior) {
  const NoSignallingReport signalling = check_no_signalling(behavior);
  if (!signalling.holds) {
    fail(ErrorCode::kArgument, "signalling behavior (marginal deviation " + signalling.max_deviation.str() +
                                   "): no joint can reproduce inconsistent marginals");
  }

  // 16 marginal equalities plus normalization over the 16 joint masses.
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> rhs;
  for (Context ctx : kContexts) {
    const PairPmf target = context_pmf(behavior, ctx);
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        std::vector<Rational> row(16);
        for (int idx = 0; idx < 16; ++idx) {
          const bool ax = JointDistribution16::outcome(idx, ctx.alice) < 0;
          const bool by = JointDistribution16::outcome(idx, 2 + ctx.bob) < 0;
          if (ax == static_cast<bool>(x) && by == static_cast<bool>(y)) row[idx] = Rational(1);
        }
        rows.push_back(std::move(row));
        rhs.push_back(target[x][y]);
      }
    }
  }
  rows.emplace_back(16, Rational(1));
  rhs.emplace_back(1);

  const lp::FeasibilityResult lp = lp::find_feasible_point(rows, rhs);

  FineResult result;
  result.chsh = chsh_values(quad_from_behavior(behavior));
  result.pivots = lp.pivots;
  result.feasible = lp.feasible;
  if (lp.feasible) {
    JointDistribution16 joint;
    for (int idx = 0; idx < 16; ++idx) joint.mass[idx] = lp.point[idx];
    for (Context ctx : kContexts) {
      if (marginalize_context(joint, ctx) != context_pmf(behavior, ctx)) {
        fail(ErrorCode::kInternal, "simplex witness does not reproduce the behavior");
      }
    }
    result.joint = std::move(joint);
  } else {
    if (result.chsh.satisfied) {
      fail(ErrorCode::kInternal, "no joint exists although every CHSH inequality holds under exact no-signalling");
    }
    result.certificate = result.chsh.worst();
  }
  return result;
}

bool fine_criterion(const BehaviorTable& behavior) {
  return check_no_signalling(behavior).holds && chsh_values(quad_from_behavior(behavior)).satisfied;
}

JointDistribution16 coupling_joint(const FlatModel& model) {
  JointDistribution16 joint;
  for (const auto& atom : model.atoms) {
    for (const auto* side : {&atom.alice, &atom.bob}) {
      for (const auto& v : *side) {
        if (v != Rational(1) && v != Rational(-1)) fail(ErrorCode::kArgument, "coupling needs +-1 outcomes");
      }
    }
    joint.mass[JointDistribution16::index(atom.alice[0].sign(), atom.alice[1].sign(), atom.bob[0].sign(),
                                          atom.bob[1].sign())] += atom.mass;
  }
  return joint;
}

}  // namespace bell
