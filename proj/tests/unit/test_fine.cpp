#include <gtest/gtest.h>

#include "error.hpp"
#include "fine.hpp"
#include "random_models.hpp"
#include "simplex.hpp"

namespace bell {
namespace {

using testing::ModelGen;
using testing::OutcomeMode;

/// Independent marginal of a joint: explicit loops over the four coordinates.
PairPmf oracle_marginal(const JointDistribution16& joint, Context ctx) {
  PairPmf out;
  for (int ax : {1, -1}) {
    for (int axp : {1, -1}) {
      for (int by : {1, -1}) {
        for (int byp : {1, -1}) {
          const Rational& m = joint.mass[JointDistribution16::index(ax, axp, by, byp)];
          const int x = ctx.alice == 0 ? ax : axp;
          const int y = ctx.bob == 0 ? by : byp;
          out[x < 0][y < 0] += m;
        }
      }
    }
  }
  return out;
}

BehaviorTable binary_behavior(const std::array<PairPmf, 4>& pmfs) {
  BehaviorTable b;
  for (Context ctx : kContexts) {
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) b[ctx][x * 2][y * 2] = pmfs[ctx.index()][x][y];
    }
  }
  return b;
}

void expect_witness(const BehaviorTable& b, const FineResult& r) {
  ASSERT_TRUE(r.feasible);
  ASSERT_TRUE(r.joint.has_value());
  EXPECT_TRUE(r.joint->valid());
  for (Context ctx : kContexts) EXPECT_EQ(oracle_marginal(*r.joint, ctx), context_pmf(b, ctx));
}

TEST(Simplex, SolvesSmallSystems) {
  // x + y = 1, x - y = 1/2.
  const auto r = lp::find_feasible_point({{Rational(1), Rational(1)}, {Rational(1), Rational(-1)}},
                                         {Rational(1), Rational(1, 2)});
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.point[0], Rational(3, 4));
  EXPECT_EQ(r.point[1], Rational(1, 4));
}

TEST(Simplex, DetectsInfeasibility) {
  // x + y = 1 and x + y = 2 cannot both hold.
  EXPECT_FALSE(lp::find_feasible_point({{Rational(1), Rational(1)}, {Rational(1), Rational(1)}},
                                       {Rational(1), Rational(2)}).feasible);
  // x - y = -1 forces y >= 1, while y = 1/2.
  EXPECT_FALSE(lp::find_feasible_point({{Rational(1), Rational(-1)}, {Rational(0), Rational(1)}},
                                       {Rational(-1), Rational(1, 2)}).feasible);
}

TEST(Simplex, RedundantRowsAndNegativeRightHandSide) {
  const auto r = lp::find_feasible_point(
      {{Rational(-1), Rational(-1), Rational(0)}, {Rational(1), Rational(1), Rational(0)}, {Rational(0), Rational(1), Rational(1)}},
      {Rational(-1), Rational(1), Rational(2, 3)});
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.point[0] + r.point[1], Rational(1));
  EXPECT_EQ(r.point[1] + r.point[2], Rational(2, 3));
  for (const auto& v : r.point) EXPECT_GE(v, Rational(0));
}

TEST(Simplex, RandomFeasibleSystemsFromKnownPoints) {
  ModelGen gen(41);
  for (int i = 0; i < 200; ++i) {
    const int rows = gen.range(1, 6);
    const int vars = gen.range(1, 8);
    std::vector<Rational> x(vars);
    for (auto& v : x) v = Rational(gen.range(0, 5), gen.range(1, 4));
    std::vector<std::vector<Rational>> a(rows, std::vector<Rational>(vars));
    std::vector<Rational> b(rows);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < vars; ++c) {
        a[r][c] = Rational(gen.range(-3, 3));
        b[r] += a[r][c] * x[c];
      }
    }
    const auto res = lp::find_feasible_point(a, b);
    ASSERT_TRUE(res.feasible) << i;
    for (int r = 0; r < rows; ++r) {
      Rational lhs;
      for (int c = 0; c < vars; ++c) {
        EXPECT_GE(res.point[c], Rational(0));
        lhs += a[r][c] * res.point[c];
      }
      EXPECT_EQ(lhs, b[r]);
    }
  }
}

TEST(Simplex, RejectsRaggedInput) {
  EXPECT_THROW(lp::find_feasible_point({{Rational(1)}, {Rational(1), Rational(2)}}, {Rational(1), Rational(1)}), Error);
  EXPECT_THROW(lp::find_feasible_point({{Rational(1)}}, {Rational(1), Rational(2)}), Error);
}

TEST(JointIndex, BitLayout) {
  EXPECT_EQ(JointDistribution16::index(1, 1, 1, 1), 0);
  EXPECT_EQ(JointDistribution16::index(-1, 1, 1, 1), 8);
  EXPECT_EQ(JointDistribution16::index(1, -1, 1, 1), 4);
  EXPECT_EQ(JointDistribution16::index(1, 1, -1, 1), 2);
  EXPECT_EQ(JointDistribution16::index(1, 1, 1, -1), 1);
  for (int idx = 0; idx < 16; ++idx) {
    EXPECT_EQ(JointDistribution16::index(JointDistribution16::outcome(idx, 0), JointDistribution16::outcome(idx, 1),
                                         JointDistribution16::outcome(idx, 2), JointDistribution16::outcome(idx, 3)),
              idx);
  }
}

TEST(Marginalize, PointMassAndUniformJoints) {
  for (int idx = 0; idx < 16; ++idx) {
    JointDistribution16 point;
    point.mass[idx] = Rational(1);
    for (Context ctx : kContexts) {
      const auto pmf = marginalize_context(point, ctx);
      const int x = JointDistribution16::outcome(idx, ctx.alice);
      const int y = JointDistribution16::outcome(idx, 2 + ctx.bob);
      EXPECT_EQ(pmf[x < 0][y < 0], Rational(1));
      EXPECT_EQ(pmf, oracle_marginal(point, ctx));
    }
  }
  JointDistribution16 uniform;
  uniform.mass.fill(Rational(1, 16));
  for (Context ctx : kContexts) {
    for (const auto& row : marginalize_context(uniform, ctx)) {
      for (const auto& v : row) EXPECT_EQ(v, Rational(1, 4));
    }
  }
}

TEST(Marginalize, AnyJointSatisfiesChsh) {
  ModelGen gen(42);
  for (int i = 0; i < 300; ++i) {
    JointDistribution16 joint;
    const auto m = gen.masses(16, 9);
    std::copy(m.begin(), m.end(), joint.mass.begin());
    const auto b = binary_behavior({marginalize_context(joint, Context{0, 0}), marginalize_context(joint, Context{0, 1}),
                                    marginalize_context(joint, Context{1, 0}), marginalize_context(joint, Context{1, 1})});
    EXPECT_TRUE(check_no_signalling(b).holds);
    EXPECT_TRUE(fine_criterion(b));
    for (Context ctx : kContexts) EXPECT_EQ(marginalize_context(joint, ctx), oracle_marginal(joint, ctx));
    expect_witness(b, find_joint(b));
  }
}

TEST(FindJoint, CounterexampleHasWitness) {
  const auto b = behavior_from_model(counterexample_model());
  const auto r = find_joint(b);
  expect_witness(b, r);
  EXPECT_FALSE(r.certificate.has_value());
  EXPECT_TRUE(r.chsh.satisfied);
}

TEST(FindJoint, UniformBehaviorHasWitness) {
  PairPmf quarter;
  for (auto& row : quarter) row.fill(Rational(1, 4));
  const auto b = binary_behavior({quarter, quarter, quarter, quarter});
  expect_witness(b, find_joint(b));
}

TEST(FindJoint, QuantumSingletIsInfeasibleWithCertificate) {
  const auto b = quantum_singlet_behavior(AngleSet::chsh_optimal());
  const auto r = find_joint(b);
  EXPECT_FALSE(r.feasible);
  EXPECT_FALSE(r.joint.has_value());
  ASSERT_TRUE(r.certificate.has_value());
  EXPECT_GT(r.chsh.values[*r.certificate].abs(), Rational(2));
  EXPECT_FALSE(fine_criterion(b));
}

TEST(FindJoint, PrBoxIsInfeasible) {
  PairPmf correlated{};
  correlated[0][0] = correlated[1][1] = Rational(1, 2);
  PairPmf anti{};
  anti[0][1] = anti[1][0] = Rational(1, 2);
  const auto b = binary_behavior({correlated, correlated, correlated, anti});
  const auto r = find_joint(b);
  EXPECT_FALSE(r.feasible);
  ASSERT_TRUE(r.certificate.has_value());
  EXPECT_EQ(r.chsh.values[*r.certificate].abs(), Rational(4));
}

TEST(NoSignalling, TenthDeviationIsReported) {
  PairPmf quarter;
  for (auto& row : quarter) row.fill(Rational(1, 4));
  PairPmf shifted = quarter;
  shifted[0][0] = Rational(3, 10);
  shifted[0][1] = Rational(3, 10);
  shifted[1][0] = Rational(1, 5);
  shifted[1][1] = Rational(1, 5);
  // Alice's x marginal is 1/2 under y and 3/5 under y'.
  const auto b = binary_behavior({quarter, shifted, quarter, quarter});
  const auto report = check_no_signalling(b);
  EXPECT_FALSE(report.holds);
  EXPECT_EQ(report.max_deviation, Rational(1, 10));
  EXPECT_EQ(report.comparisons[0].difference, Rational(1, 10));
  EXPECT_TRUE(check_no_signalling(b, Rational(1, 10)).holds);
  EXPECT_FALSE(fine_criterion(b));
  try {
    find_joint(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArgument);
  }
}

TEST(NoSignalling, TernaryIsRejected) {
  const auto b = behavior_from_model(ModelGen(43).model(OutcomeMode::kTernary));
  EXPECT_THROW(check_no_signalling(b), Error);
}

TEST(FineEquivalence, RandomNoSignallingBehaviors) {
  ModelGen gen(44);
  int feasible = 0;
  int infeasible = 0;
  for (int i = 0; i < 600; ++i) {
    const auto b = gen.no_signalling_behavior();
    const auto r = find_joint(b);
    EXPECT_EQ(r.feasible, fine_criterion(b)) << i;
    EXPECT_EQ(r.feasible, r.chsh.satisfied) << i;
    if (r.feasible) {
      expect_witness(b, r);
      ++feasible;
    } else {
      EXPECT_GT(r.chsh.values[*r.certificate].abs(), Rational(2));
      ++infeasible;
    }
  }
  // The generator covers both sides of the boundary.
  EXPECT_GT(feasible, 50);
  EXPECT_GT(infeasible, 10);
}

TEST(FineEquivalence, MixturesTowardQuantum) {
  ModelGen gen(45);
  for (int i = 0; i < 200; ++i) {
    const auto b = gen.toward_quantum(Rational(i % 21, 20));
    const auto r = find_joint(b);
    EXPECT_EQ(r.feasible, r.chsh.satisfied) << i;
    if (r.feasible) expect_witness(b, r);
  }
}

TEST(FineEquivalence, LocalModelsAlwaysHaveWitnesses) {
  ModelGen gen(46);
  for (int i = 0; i < 200; ++i) {
    const auto m = gen.model(OutcomeMode::kBinary);
    const auto b = behavior_from_model(m);
    expect_witness(b, find_joint(b));
    // The push-forward of the product flattening is itself a witness.
    const auto coupling = coupling_joint(product_flatten(m));
    EXPECT_TRUE(coupling.valid());
    for (Context ctx : kContexts) EXPECT_EQ(oracle_marginal(coupling, ctx), context_pmf(b, ctx));
  }
}

TEST(Coupling, RejectsFractionalOutcomes) {
  ModelGen gen(47);
  const auto m = gen.model(OutcomeMode::kRational);
  auto flat = product_flatten(m);
  flat.atoms[0].alice[0] = Rational(1, 2);
  EXPECT_THROW(coupling_joint(flat), Error);
}

}  // namespace
}  // namespace bell
