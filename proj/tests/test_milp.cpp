#include <gtest/gtest.h>

#include "assent/milp/branch_bound.hpp"
#include "assent/milp/encode.hpp"
#include "assent/oracles/activation.hpp"

using namespace assent;

namespace {

MLPModel chain111() {
  auto m = MLPModel::zeros({1, 1, 1});
  m.weights[0](0, 0) = 1.0;
  m.weights[1](0, 0) = 1.0;
  return m;
}

double max_output_violation(const MLPModel& m, const std::vector<double>& y_raw,
                            const std::vector<OutputConstraint>& cons) {
  double worst = 0.0;
  for (const auto& c : cons) {
    const double y = m.output_scaler.apply(c.output, y_raw[c.output]);
    const double b = m.output_scaler.apply(c.output, c.bound);
    if (c.sense != RowSense::greater_equal) worst = std::max(worst, y - b);
    if (c.sense != RowSense::less_equal) worst = std::max(worst, b - y);
  }
  return worst;
}

}  // namespace

TEST(PropagateBounds, SingleNeuronInterval) {
  auto m = MLPModel::zeros({1, 1, 1});
  m.weights[0](0, 0) = 2.0;
  m.biases[0][0] = 1.0;
  auto b = propagate_bounds(m, {{-1.0, 1.0}});
  EXPECT_DOUBLE_EQ(b.pre_activation[0][0].lower, -1.0);
  EXPECT_DOUBLE_EQ(b.pre_activation[0][0].upper, 3.0);
  EXPECT_NEAR(b.Q[0][0], 3.15, 1e-12);
}

TEST(PropagateBounds, ZeroWeightsGiveDegenerateInterval) {
  auto m = MLPModel::zeros({2, 2, 1});
  m.biases[0][0] = 0.4;
  m.biases[0][1] = -3.0;
  auto b = propagate_bounds(m, {{-1, 1}, {0, 2}});
  EXPECT_DOUBLE_EQ(b.pre_activation[0][0].lower, 0.4);
  EXPECT_DOUBLE_EQ(b.pre_activation[0][0].upper, 0.4);
  EXPECT_DOUBLE_EQ(b.Q[0][0], 1.0);
  EXPECT_NEAR(b.Q[0][1], 3.15, 1e-12);
}

TEST(PropagateBounds, MonteCarloContainment) {
  Engine rng(3);
  auto m = MLPModel::zeros({3, 8, 6, 2});
  for (auto& W : m.weights) W = Eigen::MatrixXd::Random(W.rows(), W.cols());
  for (auto& b : m.biases) b = Eigen::VectorXd::Random(b.size());
  Box box{{-1, 0.5}, {0, 2}, {-3, -1}};
  auto bounds = propagate_bounds(m, box);
  for (int s = 0; s < 10000; ++s) {
    auto x = oracles::random_point_in(rng, box);
    Eigen::VectorXd a = m.scale_input(x);
    for (std::size_t i = 0; i + 1 < m.weights.size(); ++i) {
      Eigen::VectorXd z = m.weights[i] * a + m.biases[i];
      for (Eigen::Index r = 0; r < z.size(); ++r) {
        ASSERT_GE(z[r], bounds.pre_activation[i][r].lower - 1e-12);
        ASSERT_LE(z[r], bounds.pre_activation[i][r].upper + 1e-12);
      }
      a = z.cwiseMax(0.0);
    }
  }
}

TEST(PropagateBounds, UnboundedBoxIsRejected) {
  EXPECT_THROW(propagate_bounds(chain111(), {{-kInf, 1.0}}), std::invalid_argument);
}

TEST(EncodeNetwork, VariableRolesAndRowCounts) {
  auto m = MLPModel::zeros({2, 3, 2, 1});
  auto p = encode_network(m, {{0, 1}, {0, 1}}, {{0, RowSense::greater_equal, 0.0}});
  EXPECT_EQ(p.input_vars.size(), 2u);
  EXPECT_EQ(p.binary_vars.size(), 5u);
  EXPECT_EQ(p.output_vars.size(), 1u);
  EXPECT_EQ(p.lp.num_vars(), 2u + 2 * 5 + 1);
  EXPECT_EQ(p.lp.num_rows(), 4u * 5 + 1 + 1);
  for (std::size_t d : p.binary_vars) {
    EXPECT_EQ(p.var_roles[d].kind, VarKind::binary);
    EXPECT_EQ(p.lp.lower[d], 0.0);
    EXPECT_EQ(p.lp.upper[d], 1.0);
  }
  for (double c : p.lp.c) EXPECT_EQ(c, 0.0);
}

TEST(SolveMilp, ChainFeasibleAboveHalf) {
  auto m = chain111();
  std::vector<OutputConstraint> cons{{0, RowSense::greater_equal, 0.5}};
  auto p = encode_network(m, {{-1, 1}}, cons);
  auto r = solve_milp(p, m);
  ASSERT_EQ(r.status, MILPStatus::feasible);
  EXPECT_GE(r.input[0], 0.5 - 1e-9);
  EXPECT_LE(r.input[0], 1.0 + 1e-9);
  EXPECT_GE(m.forward(r.input)[0], 0.5 - 1e-6);
}

TEST(SolveMilp, ChainInfeasibleAboveTwo) {
  auto m = chain111();
  auto p = encode_network(m, {{-1, 1}}, {{0, RowSense::greater_equal, 2.0}});
  MILPOptions opt;
  opt.fix_stable_neurons = false;
  auto r = solve_milp(p, m, opt);
  EXPECT_EQ(r.status, MILPStatus::infeasible);
  EXPECT_LE(r.nodes_explored, 3u);  // root plus its two children
}

TEST(SolveMilp, ConstantNetworkAlwaysFeasible) {
  auto m = MLPModel::zeros({2, 4, 1});
  m.biases[1][0] = 0.3;
  auto p = encode_network(m, {{-1, 1}, {-1, 1}},
                          {{0, RowSense::greater_equal, 0.2}, {0, RowSense::less_equal, 0.4}});
  auto r = solve_milp(p, m);
  ASSERT_EQ(r.status, MILPStatus::feasible);
  EXPECT_NEAR(r.output[0], 0.3, 1e-9);
}

TEST(SolveMilp, ImprovementRowTightensObjective) {
  auto m = chain111();
  Improvement imp{0, Direction::maximize, 0.8, std::nullopt};
  auto p = encode_network(m, {{-1, 1}}, {}, imp);
  auto r = solve_milp(p, m);
  ASSERT_EQ(r.status, MILPStatus::feasible);
  EXPECT_GE(m.forward(r.input)[0], 0.808 - 1e-7);
  imp.best = 1.0;
  auto q = encode_network(m, {{-1, 1}}, {}, imp);
  EXPECT_EQ(solve_milp(q, m).status, MILPStatus::infeasible);
}

TEST(SolveMilp, ScaledModelDecodesRawInput) {
  auto m = chain111();
  m.input_scaler = {{10.0}, {5.0}};
  m.output_scaler = {{-2.0}, {4.0}};
  // y_raw = -2 + 4 * relu((x - 10) / 5)
  auto p = encode_network(m, {{0.0, 20.0}}, {{0, RowSense::greater_equal, 2.0}});
  auto r = solve_milp(p, m);
  ASSERT_EQ(r.status, MILPStatus::feasible);
  EXPECT_GE(r.input[0], 15.0 - 1e-7);
  EXPECT_GE(m.forward(r.input)[0], 2.0 - 1e-6);
}

TEST(SolveMilp, WitnessNeuronsMatchForwardPass) {
  Engine rng(5);
  for (int t = 0; t < 30; ++t) {
    auto m = oracles::random_relu_net(rng, 3, 2, 3, 8);
    auto box = oracles::random_box(rng, 3);
    auto cons = oracles::satisfiable_constraints(rng, m, box);
    auto p = encode_network(m, box, cons);
    auto r = solve_milp(p, m);
    ASSERT_EQ(r.status, MILPStatus::feasible) << "trial " << t;
    std::vector<Eigen::VectorXd> hidden;
    Eigen::VectorXd u(3);
    for (int j = 0; j < 3; ++j) u[j] = r.witness[p.input_vars[std::size_t(j)]];
    auto y = m.forward_scaled(u, &hidden);
    for (std::size_t i = 0; i < hidden.size(); ++i)
      for (Eigen::Index k = 0; k < hidden[i].size(); ++k)
        EXPECT_NEAR(r.witness[p.neuron_vars[i][std::size_t(k)]], hidden[i][k], 1e-5);
    for (std::size_t k = 0; k < p.output_vars.size(); ++k)
      EXPECT_NEAR(r.witness[p.output_vars[k]], y[Eigen::Index(k)], 1e-9 + 1e-5);
    EXPECT_LE(max_output_violation(m, m.forward(r.input), cons), 1e-5);
  }
}

TEST(SolveMilp, AgreesWithActivationEnumeration) {
  Engine rng(6);
  int feasible = 0, infeasible = 0;
  for (int t = 0; t < 60; ++t) {
    auto m = oracles::random_relu_net(rng, 2, 1 + uniform_index(rng, 2), 3, 5, 10);
    auto box = oracles::random_box(rng, m.input_size());
    auto cons = oracles::random_constraints(rng, m, box);
    auto r = solve_milp(encode_network(m, box, cons), m);
    auto o = oracles::enumerate_activation_patterns(m, box, cons);
    ASSERT_NE(r.status, MILPStatus::timeout);
    ASSERT_EQ(r.status == MILPStatus::feasible, o.feasible) << "trial " << t;
    (o.feasible ? feasible : infeasible)++;
  }
  EXPECT_GT(feasible, 5);
  EXPECT_GT(infeasible, 5);
}

TEST(SolveMilp, TighterThresholdStaysInfeasible) {
  Engine rng(7);
  for (int t = 0; t < 20; ++t) {
    auto m = oracles::random_relu_net(rng, 2, 1, 2, 6);
    auto box = oracles::random_box(rng, 2);
    double hi = propagate_bounds(m, box).output[0].upper;
    // Find an infeasible threshold by scanning upward, then check a tighter one.
    for (double tshift : {0.0, 0.25, 0.5}) {
      const double thr = hi * 0.5 + tshift;
      auto r = solve_milp(encode_network(m, box, {{0, RowSense::greater_equal, thr}}), m);
      if (r.status == MILPStatus::infeasible) {
        auto r2 = solve_milp(encode_network(m, box, {{0, RowSense::greater_equal, thr + 0.1}}), m);
        EXPECT_EQ(r2.status, MILPStatus::infeasible);
      }
    }
  }
}

TEST(SolveMilp, DeterministicNodeCount) {
  Engine rng(8);
  auto m = oracles::random_relu_net(rng, 3, 2, 2, 10);
  auto box = oracles::random_box(rng, 3);
  auto cons = oracles::random_constraints(rng, m, box);
  auto p = encode_network(m, box, cons);
  auto a = solve_milp(p, m), b = solve_milp(p, m);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.nodes_explored, b.nodes_explored);
  EXPECT_EQ(a.witness, b.witness);
}

TEST(SolveMilp, ForwardMatchesNeuronReconstruction) {
  Engine rng(9);
  auto m = oracles::random_relu_net(rng, 4, 3, 3, 12);
  auto box = oracles::random_box(rng, 4);
  for (int s = 0; s < 20; ++s) {
    auto x = oracles::random_point_in(rng, box);
    // Pin the input box to the point: the encoding must then reproduce forward(x).
    Box pinned;
    for (double v : x) pinned.push_back({v, v});
    auto p = encode_network(m, pinned, {});
    auto r = solve_milp(p, m);
    ASSERT_EQ(r.status, MILPStatus::feasible);
    auto y = m.forward(x);
    for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(r.output[k], y[k], 1e-9 * (1 + std::abs(y[k])) + 1e-7);
  }
}

TEST(LpText, ContainsSectionsAndBinaries) {
  auto m = chain111();
  auto p = encode_network(m, {{-1, 1}}, {{0, RowSense::greater_equal, 0.5}});
  const auto text = lp_text(p);
  EXPECT_NE(text.find("Subject To"), std::string::npos);
  EXPECT_NE(text.find("Binaries\n d1_0"), std::string::npos);
  EXPECT_NE(text.find("-1 <= u0 <= 1"), std::string::npos);
  EXPECT_NE(text.find("End"), std::string::npos);
}
